#include "mfp/server.hpp"

#include <sstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"

using nlohmann::json;

namespace mfp {

namespace {

// hand-formatted so numbers are always 17-significant-digit decimals
std::string encode_matrix(const char* key, const Tensor& t) {
    std::ostringstream os;
    os << "{\"" << key << "\":[";
    for (int i = 0; i < t.rows(); ++i) {
        os << (i ? ",[" : "[");
        for (int j = 0; j < t.cols(); ++j) os << (j ? "," : "") << fmt_g17(t.at(i, j));
        os << "]";
    }
    os << "]}";
    return os.str();
}

std::string error_body(const std::string& message) {
    json j;
    j["error"] = message;
    return j.dump();
}

void register_routes(httplib::Server& srv, const SequentialModel& model) {
    srv.Get("/meta", [&model](const httplib::Request&, httplib::Response& res) {
        json j;
        j["d_in"] = model.d_in;
        j["d_out"] = model.d_out;
        j["task_kind"] = task_kind_name(model.task);
        res.set_content(j.dump(), "application/json");
    });

    srv.Post("/predict", [&model](const httplib::Request& req, httplib::Response& res) {
        json body = json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.contains("inputs") || !body["inputs"].is_array()) {
            res.status = 400;
            res.set_content(error_body("body must be {\"inputs\": [[...], ...]}"),
                            "application/json");
            return;
        }
        const auto& rows = body["inputs"];
        if (rows.empty()) {
            res.status = 400;
            res.set_content(error_body("inputs is empty"), "application/json");
            return;
        }
        Tensor batch = Tensor::zeros({static_cast<int>(rows.size()), model.d_in});
        for (size_t i = 0; i < rows.size(); ++i) {
            if (!rows[i].is_array() || static_cast<int>(rows[i].size()) != model.d_in) {
                res.status = 400;
                res.set_content(
                    error_body("row " + std::to_string(i) + " has width " +
                               std::to_string(rows[i].is_array() ? rows[i].size() : 0) +
                               ", expected d_in=" + std::to_string(model.d_in)),
                    "application/json");
                return;
            }
            for (int j = 0; j < model.d_in; ++j) {
                if (!rows[i][j].is_number()) {
                    res.status = 400;
                    res.set_content(error_body("row " + std::to_string(i) + " column " +
                                               std::to_string(j) + " is not a number"),
                                    "application/json");
                    return;
                }
                batch.at(static_cast<int>(i), j) = rows[i][j].get<double>();
            }
        }
        try {
            Tensor out = predict(model, batch);
            res.set_content(encode_matrix("outputs", out), "application/json");
        } catch (const Error& e) {
            res.status = 400;
            res.set_content(error_body(e.what()), "application/json");
        }
    });
}

}  // namespace

struct ServerHandle::Impl {
    httplib::Server srv;
    std::thread thread;
    int port = 0;

    ~Impl() {
        srv.stop();
        if (thread.joinable()) thread.join();
    }
};

ServerHandle::ServerHandle() = default;
ServerHandle::~ServerHandle() = default;
ServerHandle::ServerHandle(ServerHandle&&) noexcept = default;
ServerHandle& ServerHandle::operator=(ServerHandle&&) noexcept = default;

int ServerHandle::port() const { return impl_ ? impl_->port : 0; }

void ServerHandle::stop() {
    if (impl_) impl_->srv.stop();
}

ServerHandle serve(const SequentialModel& model, const std::string& bind_address, int port) {
    ServerHandle handle;
    handle.impl_ = std::make_unique<ServerHandle::Impl>();
    auto* impl = handle.impl_.get();
    register_routes(impl->srv, model);

    if (port == 0) {
        impl->port = impl->srv.bind_to_any_port(bind_address);
        require(impl->port > 0, "cannot bind to any port on ", bind_address);
    } else {
        require(impl->srv.bind_to_port(bind_address, port), "cannot bind to ", bind_address, ":",
                port);
        impl->port = port;
    }
    impl->thread = std::thread([impl] { impl->srv.listen_after_bind(); });
    impl->srv.wait_until_ready();
    return handle;
}

void serve_blocking(const SequentialModel& model, const std::string& bind_address, int port) {
    httplib::Server srv;
    register_routes(srv, model);
    require(srv.bind_to_port(bind_address, port), "cannot bind to ", bind_address, ":", port);
    srv.listen_after_bind();
}

}  // namespace mfp

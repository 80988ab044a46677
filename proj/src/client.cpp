#include "mfp/client.hpp"

#include <chrono>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"

using nlohmann::json;

namespace mfp {

namespace {

struct ParsedUrl {
    std::string host;
    int port = 80;
};

ParsedUrl parse_url(const std::string& url) {
    std::string rest = url;
    const std::string scheme = "http://";
    require(rest.rfind(scheme, 0) == 0, "endpoint '", url, "' must start with http://");
    rest = rest.substr(scheme.size());
    const size_t slash = rest.find('/');
    if (slash != std::string::npos) rest = rest.substr(0, slash);
    ParsedUrl out;
    const size_t colon = rest.find(':');
    if (colon == std::string::npos) {
        out.host = rest;
    } else {
        out.host = rest.substr(0, colon);
        out.port = std::stoi(rest.substr(colon + 1));
    }
    require(!out.host.empty(), "endpoint '", url, "' has no host");
    return out;
}

class RemoteModel : public BlackBoxModel {
public:
    RemoteModel(const std::string& url, const RemoteOptions& opt)
        : url_(url), parsed_(parse_url(url)), opt_(opt) {
        json meta = request_json("GET", "/meta", "");
        require(meta.contains("d_in") && meta.contains("d_out"), "endpoint ", url_,
                ": /meta lacks d_in/d_out");
        d_in_ = meta["d_in"].get<int>();
        d_out_ = meta["d_out"].get<int>();
    }

    int d_in() const override { return d_in_; }
    int d_out() const override { return d_out_; }

    Tensor predict(const Tensor& batch) override {
        require(batch.rank() == 2 && batch.cols() == d_in_, "remote predict: batch width ",
                batch.cols(), " does not match endpoint d_in ", d_in_);
        Tensor out = Tensor::zeros({batch.rows(), d_out_});
        for (int begin = 0; begin < batch.rows(); begin += opt_.max_batch_rows) {
            const int end = std::min(begin + opt_.max_batch_rows, batch.rows());
            predict_chunk(batch, begin, end, out);
        }
        return out;
    }

private:
    void predict_chunk(const Tensor& batch, int begin, int end, Tensor& out) {
        std::ostringstream body;
        body << "{\"inputs\":[";
        for (int i = begin; i < end; ++i) {
            body << (i > begin ? ",[" : "[");
            for (int j = 0; j < batch.cols(); ++j)
                body << (j ? "," : "") << fmt_g17(batch.at(i, j));
            body << "]";
        }
        body << "]}";

        json reply = request_json("POST", "/predict", body.str());
        require(reply.contains("outputs") && reply["outputs"].is_array(), "endpoint ", url_,
                ": reply lacks outputs");
        const auto& rows = reply["outputs"];
        require(static_cast<int>(rows.size()) == end - begin, "endpoint ", url_, ": sent ",
                end - begin, " rows, got ", rows.size());
        for (int i = begin; i < end; ++i) {
            const auto& row = rows[i - begin];
            require(row.is_array() && static_cast<int>(row.size()) == d_out_, "endpoint ", url_,
                    ": bad output row width");
            for (int j = 0; j < d_out_; ++j) out.at(i, j) = row[j].get<double>();
        }
    }

    json request_json(const char* method, const std::string& path, const std::string& body) {
        std::string last_error = "no attempt made";
        for (int attempt = 0; attempt <= opt_.retries; ++attempt) {
            if (attempt > 0)
                std::this_thread::sleep_for(
                    std::chrono::milliseconds(50LL << (attempt - 1)));  // exponential backoff
            httplib::Client cli(parsed_.host, parsed_.port);
            cli.set_connection_timeout(std::chrono::milliseconds(
                static_cast<long long>(opt_.timeout_seconds * 1000)));
            cli.set_read_timeout(std::chrono::milliseconds(
                static_cast<long long>(opt_.timeout_seconds * 1000)));
            httplib::Result res = std::string(method) == "GET"
                                      ? cli.Get(path)
                                      : cli.Post(path, body, "application/json");
            if (!res) {
                last_error = "transport error: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status != 200) {
                // a well-formed error reply is not transient; report it
                json err = json::parse(res->body, nullptr, false);
                std::string detail = err.is_object() && err.contains("error")
                                         ? err["error"].get<std::string>()
                                         : res->body;
                fail("endpoint ", url_, path, ": HTTP ", res->status, ": ", detail);
            }
            json parsed = json::parse(res->body, nullptr, false);
            if (parsed.is_discarded()) {
                last_error = "malformed JSON reply";
                continue;
            }
            return parsed;
        }
        fail("endpoint ", url_, path, ": ", last_error, " after ", opt_.retries + 1, " attempts");
    }

    std::string url_;
    ParsedUrl parsed_;
    RemoteOptions opt_;
    int d_in_ = 0, d_out_ = 0;
};

}  // namespace

std::unique_ptr<BlackBoxModel> remote_blackbox(const std::string& endpoint_url,
                                               const RemoteOptions& opt) {
    return std::make_unique<RemoteModel>(endpoint_url, opt);
}

}  // namespace mfp

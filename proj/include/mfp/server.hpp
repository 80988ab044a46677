#pragma once

#include <memory>
#include <string>

#include "mfp/model.hpp"

namespace mfp {

// Running prediction API around one read-only model. POST /predict takes
// {"inputs": [[...], ...]} and answers {"outputs": [[...], ...]}; GET /meta
// answers {"d_in", "d_out", "task_kind"}. Malformed bodies get HTTP 400 with
// an "error" field. Numbers travel as 17-significant-digit decimals.
class ServerHandle {
public:
    ServerHandle();
    ~ServerHandle();
    ServerHandle(ServerHandle&&) noexcept;
    ServerHandle& operator=(ServerHandle&&) noexcept;

    int port() const;
    void stop();

    struct Impl;

private:
    std::unique_ptr<Impl> impl_;
    friend ServerHandle serve(const SequentialModel&, const std::string&, int);
};

// Starts serving on a background thread; port 0 picks a free port. The model
// must outlive the handle.
ServerHandle serve(const SequentialModel& model, const std::string& bind_address, int port);

// Foreground variant for the CLI; returns only on failure or shutdown.
void serve_blocking(const SequentialModel& model, const std::string& bind_address, int port);

}  // namespace mfp

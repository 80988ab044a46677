#pragma once

#include <memory>
#include <string>

#include "mfp/blackbox.hpp"

namespace mfp {

struct RemoteOptions {
    double timeout_seconds = 5.0;
    int retries = 3;
    int max_batch_rows = 64;  // larger batches are split and re-concatenated
};

// Presents a remote prediction API as a BlackBoxModel. Dimensions are read
// from /meta at construction; transient transport failures are retried with
// exponential backoff.
std::unique_ptr<BlackBoxModel> remote_blackbox(const std::string& endpoint_url,
                                               const RemoteOptions& opt = {});

}  // namespace mfp

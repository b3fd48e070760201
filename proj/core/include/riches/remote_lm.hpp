#pragma once

#include <chrono>
#include <string>

#include "riches/lm.hpp"

namespace riches {

struct RemoteLmOptions {
    std::chrono::seconds timeout{30};
    int max_retries = 2;                  // retries after the first attempt
    std::chrono::milliseconds backoff{200};  // doubles per retry
    int max_in_flight = 4;
};

// Stateless HTTP client for POST /v1/logprobs. Request body:
//   {"fingerprint": <u64>, "prefixes": [[int,...],...]}
// Response body:
//   {"logprobs": [[float,...],...]}
// Non-200 responses, schema violations, NaNs, or unnormalized vectors are
// TransportErrors after the retry budget is exhausted.
class RemoteLm final : public LmBackend {
public:
    RemoteLm(std::string base_url, std::size_t vocab_size, Fingerprint fingerprint,
             RemoteLmOptions options = {});

    LogProbResponse logprobs(const LogProbRequest& request) override;
    std::size_t vocab_size() const override { return vocab_size_; }
    Fingerprint vocab_fingerprint() const override { return fingerprint_; }

private:
    LogProbResponse post_once(const std::string& body) const;

    std::string host_;
    int port_ = 80;
    std::size_t vocab_size_;
    Fingerprint fingerprint_;
    RemoteLmOptions options_;
};

}  // namespace riches

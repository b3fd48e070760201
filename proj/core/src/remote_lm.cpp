#include "riches/remote_lm.hpp"

#include <cmath>
#include <semaphore>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace riches {

namespace {

using nlohmann::json;

// Process-wide bound on concurrent remote calls; re-initialized per client
// would defeat the point when many decode threads share one backend.
std::counting_semaphore<1024>& in_flight_slots(int limit) {
    static std::counting_semaphore<1024> sem(limit > 0 ? limit : 4);
    return sem;
}

}  // namespace

RemoteLm::RemoteLm(std::string base_url, std::size_t vocab_size, Fingerprint fingerprint,
                   RemoteLmOptions options)
    : vocab_size_(vocab_size), fingerprint_(fingerprint), options_(options) {
    std::string url = std::move(base_url);
    if (url.rfind("http://", 0) == 0) url = url.substr(7);
    auto slash = url.find('/');
    if (slash != std::string::npos) url = url.substr(0, slash);
    auto colon = url.find(':');
    if (colon == std::string::npos) {
        host_ = url;
        port_ = 80;
    } else {
        host_ = url.substr(0, colon);
        port_ = std::stoi(url.substr(colon + 1));
    }
    if (host_.empty()) throw UsageError("remote backend URL has no host");
}

LogProbResponse RemoteLm::post_once(const std::string& body) const {
    httplib::Client client(host_, port_);
    client.set_connection_timeout(options_.timeout.count(), 0);
    client.set_read_timeout(options_.timeout.count(), 0);
    auto res = client.Post("/v1/logprobs", body, "application/json");
    if (!res) throw TransportError("remote logprobs: connection failed");
    if (res->status != 200) {
        throw TransportError("remote logprobs: HTTP " + std::to_string(res->status));
    }
    json parsed = json::parse(res->body, nullptr, false);
    if (parsed.is_discarded() || !parsed.contains("logprobs") || !parsed["logprobs"].is_array()) {
        throw TransportError("remote logprobs: malformed response body");
    }
    LogProbResponse out;
    for (const auto& row : parsed["logprobs"]) {
        if (!row.is_array() || row.size() != vocab_size_) {
            throw TransportError("remote logprobs: vector size != vocab size");
        }
        std::vector<double> v;
        v.reserve(vocab_size_);
        double max_lp = -std::numeric_limits<double>::infinity();
        for (const auto& x : row) {
            double lp = x.get<double>();
            if (std::isnan(lp)) throw TransportError("remote logprobs: NaN entry");
            max_lp = std::max(max_lp, lp);
            v.push_back(lp);
        }
        double sum = 0.0;
        for (double lp : v) sum += std::exp(lp - max_lp);
        double lse = max_lp + std::log(sum);
        if (std::abs(lse) > 1e-4) {
            throw TransportError("remote logprobs: vector not normalized (lse=" +
                                 std::to_string(lse) + ")");
        }
        out.logprobs.push_back(std::move(v));
    }
    return out;
}

LogProbResponse RemoteLm::logprobs(const LogProbRequest& request) {
    if (request.fingerprint != fingerprint_) {
        throw DataError("vocab fingerprint mismatch between request and backend");
    }
    json body;
    body["fingerprint"] = fingerprint_;
    body["prefixes"] = request.prefixes;
    const std::string payload = body.dump();

    auto& slots = in_flight_slots(options_.max_in_flight);
    slots.acquire();
    struct Release {
        std::counting_semaphore<1024>& sem;
        ~Release() { sem.release(); }
    } release{slots};

    auto backoff = options_.backoff;
    for (int attempt = 0;; ++attempt) {
        try {
            LogProbResponse response = post_once(payload);
            if (response.logprobs.size() != request.prefixes.size()) {
                throw TransportError("remote logprobs: batch size mismatch");
            }
            return response;
        } catch (const TransportError&) {
            if (attempt >= options_.max_retries) throw;
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }
}

}  // namespace riches

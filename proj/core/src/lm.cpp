#include "riches/lm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>

namespace riches {

namespace {

void check_fingerprint(const LogProbRequest& request, Fingerprint expected) {
    if (request.fingerprint != expected) {
        throw DataError("vocab fingerprint mismatch between request and backend");
    }
}

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void fnv_bytes(std::uint64_t& h, const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
}

}  // namespace

LogProbResponse UniformLm::logprobs(const LogProbRequest& request) {
    check_fingerprint(request, fingerprint_);
    LogProbResponse response;
    const double lp = -std::log(static_cast<double>(vocab_size_));
    response.logprobs.assign(request.prefixes.size(), std::vector<double>(vocab_size_, lp));
    return response;
}

std::string NGramLm::context_key(std::span<const TokenId> context) {
    std::string key(context.size() * sizeof(TokenId), '\0');
    if (!context.empty()) std::memcpy(key.data(), context.data(), key.size());
    return key;
}

NGramLm train_ngram(std::span<const TokenSequence> streams, int order, std::size_t vocab_size,
                    Fingerprint fingerprint) {
    if (order < 1 || order > 5) throw UsageError("n-gram order must be in [1, 5]");
    bool any_token = false;
    for (const auto& s : streams) {
        if (!s.empty()) {
            any_token = true;
            break;
        }
    }
    if (!any_token) throw DataError("n-gram training corpus is empty");

    NGramLm lm;
    lm.order_ = order;
    lm.vocab_size_ = vocab_size;
    lm.fingerprint_ = fingerprint;
    lm.levels_.resize(order);

    for (const auto& stream : streams) {
        for (std::size_t i = 0; i < stream.size(); ++i) {
            if (stream[i] >= vocab_size) {
                throw DataError("training token id " + std::to_string(stream[i]) +
                                " outside vocab");
            }
            for (int k = 0; k < order; ++k) {
                // Context of length k must fit entirely inside the stream.
                if (i < static_cast<std::size_t>(k)) break;
                auto context = std::span<const TokenId>(stream).subspan(i - k, k);
                auto& stats = lm.levels_[k][NGramLm::context_key(context)];
                auto [it, inserted] = stats.next_counts.emplace(stream[i], 0);
                it->second += 1;
                stats.total += 1;
                if (inserted) stats.distinct += 1;
            }
        }
    }
    return lm;
}

std::vector<double> NGramLm::distribution(std::span<const TokenId> context) const {
    // Witten-Bell: P(w|h) = (c(h,w) + T(h) * P(w|h')) / (c(h) + T(h)),
    // starting from uniform and blending upward level by level.
    std::vector<double> probs(vocab_size_, 1.0 / static_cast<double>(vocab_size_));
    int max_level = std::min<int>(order_ - 1, static_cast<int>(context.size()));
    for (int k = 0; k <= max_level; ++k) {
        auto level_context = context.subspan(context.size() - k, k);
        auto it = levels_[k].find(context_key(level_context));
        if (it == levels_[k].end()) continue;  // unseen context: keep backoff
        const ContextStats& stats = it->second;
        if (stats.total + stats.distinct == 0) continue;
        const double denom = static_cast<double>(stats.total + stats.distinct);
        const double t = static_cast<double>(stats.distinct);
        for (auto& p : probs) p *= t / denom;
        for (const auto& [token, count] : stats.next_counts) {
            probs[token] += static_cast<double>(count) / denom;
        }
    }
    return probs;
}

LogProbResponse NGramLm::logprobs(const LogProbRequest& request) {
    check_fingerprint(request, fingerprint_);
    LogProbResponse response;
    response.logprobs.reserve(request.prefixes.size());
    for (const auto& prefix : request.prefixes) {
        std::size_t context_len =
            std::min<std::size_t>(prefix.size(), static_cast<std::size_t>(order_ - 1));
        auto context = std::span<const TokenId>(prefix).last(context_len);
        auto probs = distribution(context);
        std::vector<double> logs(vocab_size_);
        for (std::size_t i = 0; i < vocab_size_; ++i) logs[i] = std::log(probs[i]);
        response.logprobs.push_back(std::move(logs));
    }
    return response;
}

std::uint64_t NGramLm::digest() const {
    std::uint64_t h = kFnvOffset;
    std::uint32_t order32 = static_cast<std::uint32_t>(order_);
    fnv_bytes(h, &order32, sizeof(order32));
    std::uint64_t v = vocab_size_;
    fnv_bytes(h, &v, sizeof(v));
    for (int k = 0; k < order_; ++k) {
        std::map<std::string, const ContextStats*> sorted;
        for (const auto& [key, stats] : levels_[k]) sorted.emplace(key, &stats);
        for (const auto& [key, stats] : sorted) {
            fnv_bytes(h, key.data(), key.size());
            std::map<TokenId, std::uint64_t> counts(stats->next_counts.begin(),
                                                    stats->next_counts.end());
            for (auto [token, count] : counts) {
                fnv_bytes(h, &token, sizeof(token));
                fnv_bytes(h, &count, sizeof(count));
            }
        }
    }
    return h;
}

}  // namespace riches

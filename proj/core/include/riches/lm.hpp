#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "riches/types.hpp"

namespace riches {

struct LogProbRequest {
    Fingerprint fingerprint = 0;
    std::vector<TokenSequence> prefixes;
};

// One dense log-probability vector per prefix, order preserved. Every vector
// log-sum-exps to 0 within 1e-4 and contains no NaN.
struct LogProbResponse {
    std::vector<std::vector<double>> logprobs;
};

// The scoring oracle behind a minimal interface. The decoder never reads
// anything from a backend except these vectors.
class LmBackend {
public:
    virtual ~LmBackend() = default;
    virtual LogProbResponse logprobs(const LogProbRequest& request) = 0;
    virtual std::size_t vocab_size() const = 0;
    virtual Fingerprint vocab_fingerprint() const = 0;
};

class UniformLm final : public LmBackend {
public:
    UniformLm(std::size_t vocab_size, Fingerprint fingerprint)
        : vocab_size_(vocab_size), fingerprint_(fingerprint) {}

    LogProbResponse logprobs(const LogProbRequest& request) override;
    std::size_t vocab_size() const override { return vocab_size_; }
    Fingerprint vocab_fingerprint() const override { return fingerprint_; }

private:
    std::size_t vocab_size_;
    Fingerprint fingerprint_;
};

// Deterministic Witten-Bell-smoothed n-gram model; unseen contexts back off
// order by order, ultimately to uniform. A hermetic stand-in for a large
// instruction-tuned model so the decoder is testable offline.
class NGramLm final : public LmBackend {
public:
    LogProbResponse logprobs(const LogProbRequest& request) override;
    std::size_t vocab_size() const override { return vocab_size_; }
    Fingerprint vocab_fingerprint() const override { return fingerprint_; }

    int order() const { return order_; }
    std::uint64_t digest() const;

    friend NGramLm train_ngram(std::span<const TokenSequence> streams, int order,
                               std::size_t vocab_size, Fingerprint fingerprint);

private:
    struct ContextStats {
        std::unordered_map<TokenId, std::uint64_t> next_counts;
        std::uint64_t total = 0;
        std::uint64_t distinct = 0;
    };

    // Distribution over the full vocab given (up to order-1) context tokens.
    std::vector<double> distribution(std::span<const TokenId> context) const;

    static std::string context_key(std::span<const TokenId> context);

    int order_ = 1;
    std::size_t vocab_size_ = 0;
    Fingerprint fingerprint_ = 0;
    // levels_[k] holds stats for contexts of length k (k = 0..order-1).
    std::vector<std::unordered_map<std::string, ContextStats>> levels_;
};

// order must lie in [1, 5]; streams must contain at least one token.
NGramLm train_ngram(std::span<const TokenSequence> streams, int order,
                    std::size_t vocab_size, Fingerprint fingerprint);

}  // namespace riches

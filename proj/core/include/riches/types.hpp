#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace riches {

// Token ids are 32-bit: LLM vocabularies exceed 16 bits.
using TokenId = std::uint32_t;

// The universal currency between tokenizer, index, LM, and decoder.
using TokenSequence = std::vector<TokenId>;

using Fingerprint = std::uint64_t;

// Error taxonomy maps 1:1 onto CLI exit codes (see tools/).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TransportError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised when every beam hypothesis is constraint-blocked. Carries the best
// partial hypothesis rendered as text so callers can log what was explored.
struct DeadEndError : std::runtime_error {
    explicit DeadEndError(const std::string& msg, std::string partial = {})
        : std::runtime_error(msg), best_partial(std::move(partial)) {}
    std::string best_partial;
};

}  // namespace riches

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "riches/corpus.hpp"
#include "riches/types.hpp"

namespace riches {

// Half-open row interval [lo, hi) over suffix rows of the indexed string.
// hi - lo is the number of occurrences of the matched pattern; depth is the
// number of tokens matched so far (anchor seeds are not counted).
struct MatchRange {
    std::uint64_t lo = 0;
    std::uint64_t hi = 0;
    std::uint32_t depth = 0;

    bool empty() const { return lo >= hi; }
    std::uint64_t count() const { return hi - lo; }
    friend bool operator==(const MatchRange&, const MatchRange&) = default;
};

struct Occurrence {
    std::uint32_t key_id = 0;
    std::uint32_t offset = 0;  // token offset within the key
};

// Succinct substring index over the retrieval-key token stream.
//
// The forward stream is the concatenation of all key token forms, each key
// followed by KEY_END_SENTINEL, terminated by a single SEP. Internally the
// suffix structures are built over the reversed stream with SEP kept
// terminal so that appending a generated token is one backward-search step.
class FmIndex {
public:
    FmIndex() = default;  // empty index; populate via build()/deserialize()
    static FmIndex build(const RetrievalKeySet& keys, std::uint32_t sample_rate = 32);

    // Matches the empty pattern everywhere: [0, N).
    MatchRange root() const;

    // Matches the empty pattern at key-start positions only; extending from
    // here restricts spans to key-initial anchoring (whole-key strategies).
    MatchRange anchored_root() const;

    // One backward-search step: the range for pattern+token. An empty result
    // is a value, not an error.
    MatchRange extend(const MatchRange& range, TokenId token) const;

    // All tokens with a non-empty extension, paired with their ranges. May
    // contain KEY_END_SENTINEL ("a complete key ends here"); never SEP.
    std::vector<std::pair<TokenId, MatchRange>> continuations(const MatchRange& range) const;

    std::uint64_t count(const MatchRange& range) const { return range.count(); }

    // Up to `limit` occurrences in ascending row order, each resolved to
    // (key_id, offset) via sampled-SA walking. limit <= 0 is an error.
    std::vector<Occurrence> locate(const MatchRange& range, std::int64_t limit) const;

    std::uint64_t text_length() const { return static_cast<std::uint64_t>(bwt_.size()); }
    std::size_t num_keys() const { return key_start_offsets_.size(); }
    Fingerprint vocab_fingerprint() const { return vocab_fingerprint_; }
    std::uint32_t sample_rate() const { return sample_rate_; }
    std::uint32_t vocab_size() const { return vocab_size_; }

    // Binary format: magic "RFMI", version u8, header, then sections
    // (counts_C, bwt, rank superblocks, SA samples, key_start_offsets).
    // Little-endian throughout; round-trips bit-exactly.
    void serialize(std::ostream& out) const;
    void serialize(const std::filesystem::path& path) const;
    static FmIndex deserialize(std::istream& in);
    static FmIndex deserialize(const std::filesystem::path& path);

    // Test hooks.
    const std::vector<TokenId>& bwt() const { return bwt_; }
    const std::vector<std::uint64_t>& counts_c() const { return counts_c_; }
    std::vector<TokenId> reconstruct_via_lf() const;
    std::uint64_t lf(std::uint64_t row) const;

private:
    void build_rank_structure();
    std::uint64_t rank(TokenId symbol, std::uint64_t pos) const;
    std::uint64_t suffix_position(std::uint64_t row) const;

    std::uint32_t vocab_size_ = 0;
    std::uint32_t sample_rate_ = 32;
    Fingerprint vocab_fingerprint_ = 0;
    std::vector<TokenId> bwt_;
    std::vector<std::uint64_t> counts_c_;  // size vocab_size_+1
    std::vector<std::uint64_t> key_start_offsets_;  // forward body positions

    // Sampled suffix array, sorted by row.
    std::vector<std::uint64_t> sample_rows_;
    std::vector<std::uint64_t> sample_values_;

    // Rank backend: checkpointed per-symbol counts for small vocabularies,
    // per-symbol occurrence lists otherwise. Rebuilt on load when absent
    // from the file.
    bool use_checkpoints_ = false;
    std::uint32_t checkpoint_stride_ = 128;
    std::vector<std::uint32_t> checkpoints_;  // [symbol][block], flattened
    std::vector<std::vector<std::uint32_t>> occ_lists_;
};

// Forward stream the index matches against, reconstructed from the raw key
// list: SEP then each key's tokens followed by KEY_END_SENTINEL. Exposed for
// oracle tests; position i in this stream is body position i-1.
std::vector<TokenId> indexed_stream(const RetrievalKeySet& keys);

}  // namespace riches

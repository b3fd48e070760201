#include "riches/fm_index.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>
#include <unordered_map>

namespace riches {

namespace {

// Little-endian binary helpers; reads throw on truncation.

void write_u8(std::ostream& out, std::uint8_t v) {
    out.put(static_cast<char>(v));
}

void write_u32(std::ostream& out, std::uint32_t v) {
    char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(buf, 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(buf, 8);
}

std::uint8_t read_u8(std::istream& in) {
    int c = in.get();
    if (c == EOF) throw DataError("truncated index file");
    return static_cast<std::uint8_t>(c);
}

std::uint32_t read_u32(std::istream& in) {
    char buf[4];
    if (!in.read(buf, 4)) throw DataError("truncated index file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
    return v;
}

std::uint64_t read_u64(std::istream& in) {
    char buf[8];
    if (!in.read(buf, 8)) throw DataError("truncated index file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
    return v;
}

// Prefix-doubling suffix sort. Sort-based construction is fine at this
// scale; the unique terminal SEP keeps suffix order equal to rotation order.
std::vector<std::uint64_t> suffix_array(const std::vector<TokenId>& w) {
    const std::uint64_t n = w.size();
    std::vector<std::uint64_t> sa(n), rank(n), next_rank(n);
    std::iota(sa.begin(), sa.end(), 0);
    for (std::uint64_t i = 0; i < n; ++i) rank[i] = w[i];

    for (std::uint64_t len = 1;; len *= 2) {
        auto key = [&](std::uint64_t i) {
            // Past-the-end second halves sort first (shorter suffix wins).
            std::uint64_t second = i + len < n ? rank[i + len] + 1 : 0;
            return std::pair<std::uint64_t, std::uint64_t>(rank[i], second);
        };
        std::sort(sa.begin(), sa.end(),
                  [&](std::uint64_t a, std::uint64_t b) { return key(a) < key(b); });
        next_rank[sa[0]] = 0;
        for (std::uint64_t i = 1; i < n; ++i) {
            next_rank[sa[i]] = next_rank[sa[i - 1]] + (key(sa[i - 1]) != key(sa[i]) ? 1 : 0);
        }
        rank.swap(next_rank);
        if (rank[sa[n - 1]] == n - 1) break;
    }
    return sa;
}

constexpr char kMagic[4] = {'R', 'F', 'M', 'I'};
constexpr std::uint8_t kFormatVersion = 1;
constexpr std::uint32_t kCheckpointVocabCap = 1024;
constexpr std::uint32_t kCheckpointStride = 128;

}  // namespace

std::vector<TokenId> indexed_stream(const RetrievalKeySet& keys) {
    std::vector<TokenId> stream;
    stream.push_back(kSep);
    for (const auto& key : keys.keys()) {
        stream.insert(stream.end(), key.token_form.begin(), key.token_form.end());
        stream.push_back(kKeyEndSentinel);
    }
    return stream;
}

FmIndex FmIndex::build(const RetrievalKeySet& keys, std::uint32_t sample_rate) {
    if (keys.empty()) throw DataError("empty key set");
    if (sample_rate == 0) throw UsageError("sample_rate must be positive");

    FmIndex fm;
    fm.sample_rate_ = sample_rate;
    fm.vocab_fingerprint_ = keys.vocab_fingerprint();

    // Forward body: each key's tokens followed by the end sentinel.
    std::vector<TokenId> body;
    for (const auto& key : keys.keys()) {
        if (key.token_form.empty()) {
            throw DataError("key " + std::to_string(key.key_id) + " has an empty token form");
        }
        fm.key_start_offsets_.push_back(body.size());
        for (TokenId t : key.token_form) {
            if (t < kNumReserved) {
                throw DataError("reserved token inside key " + std::to_string(key.key_id));
            }
            body.push_back(t);
        }
        body.push_back(kKeyEndSentinel);
    }

    // Index the reversed body with the terminator kept terminal so that
    // appending a generated token is one backward-search step.
    std::vector<TokenId> w(body.rbegin(), body.rend());
    w.push_back(kSep);
    const std::uint64_t n = w.size();

    TokenId max_symbol = 0;
    for (TokenId t : w) max_symbol = std::max(max_symbol, t);
    fm.vocab_size_ = max_symbol + 1;

    auto sa = suffix_array(w);

    fm.bwt_.resize(n);
    for (std::uint64_t r = 0; r < n; ++r) {
        fm.bwt_[r] = w[(sa[r] + n - 1) % n];
    }

    fm.counts_c_.assign(fm.vocab_size_ + 1, 0);
    for (TokenId t : w) fm.counts_c_[t + 1] += 1;
    for (std::size_t c = 1; c < fm.counts_c_.size(); ++c) fm.counts_c_[c] += fm.counts_c_[c - 1];

    for (std::uint64_t r = 0; r < n; ++r) {
        if (sa[r] % sample_rate == 0) {
            fm.sample_rows_.push_back(r);
            fm.sample_values_.push_back(sa[r]);
        }
    }

    fm.use_checkpoints_ = fm.vocab_size_ <= kCheckpointVocabCap;
    fm.checkpoint_stride_ = kCheckpointStride;
    fm.build_rank_structure();
    return fm;
}

void FmIndex::build_rank_structure() {
    const std::uint64_t n = bwt_.size();
    if (use_checkpoints_) {
        const std::uint64_t blocks = n / checkpoint_stride_ + 1;
        checkpoints_.assign(static_cast<std::size_t>(vocab_size_) * blocks, 0);
        std::vector<std::uint32_t> running(vocab_size_, 0);
        for (std::uint64_t i = 0; i < n; ++i) {
            if (i % checkpoint_stride_ == 0) {
                std::uint64_t b = i / checkpoint_stride_;
                for (std::uint32_t c = 0; c < vocab_size_; ++c) {
                    checkpoints_[static_cast<std::size_t>(c) * blocks + b] = running[c];
                }
            }
            running[bwt_[i]] += 1;
        }
        if (n % checkpoint_stride_ == 0) {
            std::uint64_t b = n / checkpoint_stride_;
            if (b < blocks) {
                for (std::uint32_t c = 0; c < vocab_size_; ++c) {
                    checkpoints_[static_cast<std::size_t>(c) * blocks + b] = running[c];
                }
            }
        }
        occ_lists_.clear();
    } else {
        occ_lists_.assign(vocab_size_, {});
        for (std::uint64_t i = 0; i < n; ++i) {
            occ_lists_[bwt_[i]].push_back(static_cast<std::uint32_t>(i));
        }
        checkpoints_.clear();
    }
}

std::uint64_t FmIndex::rank(TokenId symbol, std::uint64_t pos) const {
    if (symbol >= vocab_size_) return 0;
    if (use_checkpoints_) {
        const std::uint64_t blocks = bwt_.size() / checkpoint_stride_ + 1;
        const std::uint64_t block = pos / checkpoint_stride_;
        std::uint64_t count = checkpoints_[static_cast<std::size_t>(symbol) * blocks + block];
        for (std::uint64_t i = block * checkpoint_stride_; i < pos; ++i) {
            if (bwt_[i] == symbol) ++count;
        }
        return count;
    }
    const auto& list = occ_lists_[symbol];
    return static_cast<std::uint64_t>(
        std::lower_bound(list.begin(), list.end(), pos) - list.begin());
}

MatchRange FmIndex::root() const {
    return MatchRange{0, text_length(), 0};
}

MatchRange FmIndex::anchored_root() const {
    // Suffixes starting with KEY_END_SENTINEL or SEP. The two ids are
    // adjacent, so the union is one interval; extending from it admits only
    // key-initial positions (SEP covers the first key, sentinels the rest).
    return MatchRange{counts_c_[kKeyEndSentinel], counts_c_[kSep + 1], 0};
}

MatchRange FmIndex::extend(const MatchRange& range, TokenId token) const {
    MatchRange out;
    out.depth = range.depth + 1;
    if (token >= vocab_size_ || range.empty()) {
        out.lo = out.hi = 0;
        return out;
    }
    out.lo = counts_c_[token] + rank(token, range.lo);
    out.hi = counts_c_[token] + rank(token, range.hi);
    return out;
}

std::vector<std::pair<TokenId, MatchRange>> FmIndex::continuations(const MatchRange& range) const {
    std::vector<std::pair<TokenId, MatchRange>> out;
    if (range.empty()) return out;

    if (range.lo == 0 && range.hi == text_length()) {
        for (TokenId c = 0; c < vocab_size_; ++c) {
            if (c == kSep) continue;
            if (counts_c_[c + 1] > counts_c_[c]) {
                out.emplace_back(c, MatchRange{counts_c_[c], counts_c_[c + 1], range.depth + 1});
            }
        }
        return out;
    }

    if (range.count() < vocab_size_) {
        // Narrow range: scan the BWT slice for the distinct extending symbols.
        std::unordered_map<TokenId, std::uint64_t> slice_counts;
        for (std::uint64_t r = range.lo; r < range.hi; ++r) slice_counts[bwt_[r]] += 1;
        out.reserve(slice_counts.size());
        for (auto& [c, cnt] : slice_counts) {
            if (c == kSep) continue;
            std::uint64_t lo = counts_c_[c] + rank(c, range.lo);
            out.emplace_back(c, MatchRange{lo, lo + cnt, range.depth + 1});
        }
        std::sort(out.begin(), out.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        return out;
    }

    for (TokenId c = 0; c < vocab_size_; ++c) {
        if (c == kSep) continue;
        MatchRange ext = extend(range, c);
        if (!ext.empty()) out.emplace_back(c, ext);
    }
    return out;
}

std::uint64_t FmIndex::lf(std::uint64_t row) const {
    TokenId c = bwt_[row];
    return counts_c_[c] + rank(c, row);
}

std::uint64_t FmIndex::suffix_position(std::uint64_t row) const {
    std::uint64_t steps = 0;
    const std::uint64_t n = text_length();
    while (true) {
        auto it = std::lower_bound(sample_rows_.begin(), sample_rows_.end(), row);
        if (it != sample_rows_.end() && *it == row) {
            std::uint64_t value = sample_values_[it - sample_rows_.begin()];
            return (value + steps) % n;
        }
        row = lf(row);
        ++steps;
    }
}

std::vector<Occurrence> FmIndex::locate(const MatchRange& range, std::int64_t limit) const {
    if (limit <= 0) throw UsageError("locate: limit must be positive");
    std::vector<Occurrence> out;
    const std::uint64_t n = text_length();
    for (std::uint64_t r = range.lo; r < range.hi && out.size() < static_cast<std::size_t>(limit);
         ++r) {
        std::uint64_t j = suffix_position(r);
        // Pattern start in forward body coordinates; see indexed_stream().
        std::int64_t body_pos = static_cast<std::int64_t>(n) - 1 - static_cast<std::int64_t>(j) -
                                static_cast<std::int64_t>(range.depth);
        if (body_pos < 0 || body_pos >= static_cast<std::int64_t>(n) - 1) continue;
        auto it = std::upper_bound(key_start_offsets_.begin(), key_start_offsets_.end(),
                                   static_cast<std::uint64_t>(body_pos));
        std::uint32_t key_id = static_cast<std::uint32_t>(it - key_start_offsets_.begin() - 1);
        out.push_back(Occurrence{
            key_id,
            static_cast<std::uint32_t>(static_cast<std::uint64_t>(body_pos) -
                                       key_start_offsets_[key_id])});
    }
    return out;
}

std::vector<TokenId> FmIndex::reconstruct_via_lf() const {
    const std::uint64_t n = text_length();
    std::vector<TokenId> out(n);
    out[n - 1] = kSep;
    std::uint64_t row = counts_c_[kSep];  // the unique suffix "SEP"
    for (std::uint64_t i = n - 1; i-- > 0;) {
        out[i] = bwt_[row];
        row = lf(row);
    }
    return out;
}

void FmIndex::serialize(std::ostream& out) const {
    out.write(kMagic, 4);
    write_u8(out, kFormatVersion);
    write_u64(out, text_length());
    write_u64(out, vocab_fingerprint_);
    write_u32(out, sample_rate_);
    write_u32(out, vocab_size_);
    write_u64(out, key_start_offsets_.size());

    for (auto c : counts_c_) write_u64(out, c);
    for (auto t : bwt_) write_u32(out, t);

    write_u8(out, use_checkpoints_ ? 1 : 0);
    if (use_checkpoints_) {
        write_u32(out, checkpoint_stride_);
        write_u64(out, checkpoints_.size());
        for (auto v : checkpoints_) write_u32(out, v);
    }

    write_u64(out, sample_rows_.size());
    for (auto r : sample_rows_) write_u64(out, r);
    for (auto v : sample_values_) write_u64(out, v);

    for (auto k : key_start_offsets_) write_u64(out, k);
    if (!out) throw DataError("short write while serializing index");
}

void FmIndex::serialize(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write index file: " + path.string());
    serialize(out);
}

FmIndex FmIndex::deserialize(std::istream& in) {
    char magic[4];
    if (!in.read(magic, 4)) throw DataError("truncated index file");
    if (std::memcmp(magic, kMagic, 4) != 0) throw DataError("not an index file (bad magic)");
    std::uint8_t version = read_u8(in);
    if (version != kFormatVersion) {
        throw DataError("unsupported index version " + std::to_string(version));
    }

    FmIndex fm;
    std::uint64_t n = read_u64(in);
    fm.vocab_fingerprint_ = read_u64(in);
    fm.sample_rate_ = read_u32(in);
    fm.vocab_size_ = read_u32(in);
    std::uint64_t num_keys = read_u64(in);

    fm.counts_c_.resize(fm.vocab_size_ + 1);
    for (auto& c : fm.counts_c_) c = read_u64(in);
    fm.bwt_.resize(n);
    for (auto& t : fm.bwt_) t = read_u32(in);

    fm.use_checkpoints_ = read_u8(in) != 0;
    if (fm.use_checkpoints_) {
        fm.checkpoint_stride_ = read_u32(in);
        std::uint64_t count = read_u64(in);
        fm.checkpoints_.resize(count);
        for (auto& v : fm.checkpoints_) v = read_u32(in);
    } else {
        fm.build_rank_structure();
    }

    std::uint64_t samples = read_u64(in);
    fm.sample_rows_.resize(samples);
    for (auto& r : fm.sample_rows_) r = read_u64(in);
    fm.sample_values_.resize(samples);
    for (auto& v : fm.sample_values_) v = read_u64(in);

    fm.key_start_offsets_.resize(num_keys);
    for (auto& k : fm.key_start_offsets_) k = read_u64(in);
    return fm;
}

FmIndex FmIndex::deserialize(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open index file: " + path.string());
    return deserialize(in);
}

}  // namespace riches

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "riches/types.hpp"

namespace riches {

struct Document;
class DocumentSet;

// Reserved ids sit below every scheme's regular block and are never produced
// by encoding plain corpus text.
enum ReservedToken : TokenId {
    kPad = 0,
    kEos = 1,
    kKeyOpen = 2,        // "<<"
    kKeyClose = 3,       // ">>"
    kKeyEndSentinel = 4, // terminates every indexed key
    kSep = 5,            // terminates the indexed text
};
inline constexpr TokenId kNumReserved = 6;

enum class VocabScheme { Byte, Word, External };

std::string_view to_string(VocabScheme scheme);
VocabScheme vocab_scheme_from_string(std::string_view name);

// Immutable id <-> surface table. BYTE is 256 byte ids plus the reserved
// block (size 262); WORD is whitespace-split pieces observed in the corpus
// plus UNK plus the reserved block. EXTERNAL is the pre-tokenized path: the
// corpus arrives as token-id arrays from some outside tokenizer, each id is
// its own decimal surface, and ids below the reserved block are rejected at
// ingestion so the id spaces agree between index and LM by construction.
class Vocab {
public:
    Vocab() = default;  // empty table; populate via the factories
    static Vocab byte_vocab();
    static Vocab word_vocab(const DocumentSet& docs);
    static Vocab external_vocab(std::size_t size);

    VocabScheme scheme() const { return scheme_; }
    std::size_t size() const { return surfaces_.size(); }
    Fingerprint fingerprint() const { return fingerprint_; }

    const std::string& surface(TokenId id) const;
    bool is_reserved(TokenId id) const { return id < kNumReserved; }

    // Unknown-word id; only present for the WORD scheme.
    std::optional<TokenId> unk_id() const;

    TokenSequence encode(std::string_view text) const;
    std::string decode(const TokenSequence& tokens) const;

    // Like encode, but the literal marker substrings "<<" and ">>" become
    // KEY_OPEN / KEY_CLOSE ids. Used for prompts and LM training streams.
    TokenSequence encode_markup(std::string_view text) const;

    // Lossy rendering for traces and outputs: markers render as "<<"/">>",
    // PAD and EOS are dropped instead of rejected.
    std::string render(const TokenSequence& tokens) const;

    void save(const std::filesystem::path& path) const;
    static Vocab load(const std::filesystem::path& path);

private:
    void add_surface(std::string surface);
    void finalize();

    VocabScheme scheme_ = VocabScheme::Byte;
    std::vector<std::string> surfaces_;
    std::unordered_map<std::string, TokenId> word_ids_;
    Fingerprint fingerprint_ = 0;
};

// Whitespace folding used everywhere a surface is normalized: runs of
// whitespace collapse to single spaces, ends trimmed.
std::string normalize_whitespace(std::string_view text);

}  // namespace riches

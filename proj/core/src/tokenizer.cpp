#include "riches/tokenizer.hpp"

#include <array>
#include <cctype>
#include <fstream>
#include <sstream>

#include "riches/corpus.hpp"

namespace riches {

namespace {

constexpr std::array<std::string_view, kNumReserved> kReservedSurfaces = {
    "<pad>", "<eos>", "<<", ">>", "<key_end>", "<sep>",
};

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void fnv_bytes(std::uint64_t& h, const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
}

std::string escape_surface(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (unsigned char c : s) {
        switch (c) {
            case ' ': out += "\\s"; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (c < 0x20 || c == 0x7f) {
                    char buf[5];
                    std::snprintf(buf, sizeof(buf), "\\x%02x", c);
                    out += buf;
                } else {
                    out += static_cast<char>(c);
                }
        }
    }
    return out;
}

std::string unescape_surface(const std::string& s, std::size_t line_no) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '\\') {
            out += s[i];
            continue;
        }
        if (i + 1 >= s.size()) throw DataError("vocab: dangling escape at line " + std::to_string(line_no));
        char c = s[++i];
        switch (c) {
            case 's': out += ' '; break;
            case '\\': out += '\\'; break;
            case 'n': out += '\n'; break;
            case 't': out += '\t'; break;
            case 'r': out += '\r'; break;
            case 'x': {
                if (i + 2 >= s.size()) throw DataError("vocab: truncated \\x escape at line " + std::to_string(line_no));
                int value = std::stoi(s.substr(i + 1, 2), nullptr, 16);
                out += static_cast<char>(value);
                i += 2;
                break;
            }
            default: throw DataError("vocab: bad escape at line " + std::to_string(line_no));
        }
    }
    return out;
}

std::vector<std::string> split_whitespace(std::string_view text) {
    std::vector<std::string> pieces;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i > start) pieces.emplace_back(text.substr(start, i - start));
    }
    return pieces;
}

}  // namespace

std::string_view to_string(VocabScheme scheme) {
    switch (scheme) {
        case VocabScheme::Byte: return "byte";
        case VocabScheme::Word: return "word";
        case VocabScheme::External: return "external";
    }
    return "unknown";
}

VocabScheme vocab_scheme_from_string(std::string_view name) {
    if (name == "byte") return VocabScheme::Byte;
    if (name == "word") return VocabScheme::Word;
    if (name == "external") return VocabScheme::External;
    throw UsageError("unknown tokenizer scheme: " + std::string(name));
}

std::string normalize_whitespace(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
        } else {
            if (pending_space) out += ' ';
            pending_space = false;
            out += c;
        }
    }
    return out;
}

void Vocab::add_surface(std::string surface) {
    // Reserved surfaces stay out of the lookup table so plain text can never
    // encode onto a reserved id, even when the corpus contains "<<" or ">>".
    if (scheme_ == VocabScheme::Word && surfaces_.size() >= kNumReserved) {
        word_ids_.emplace(surface, static_cast<TokenId>(surfaces_.size()));
    }
    surfaces_.push_back(std::move(surface));
}

void Vocab::finalize() {
    std::uint64_t h = kFnvOffset;
    unsigned char scheme_byte = scheme_ == VocabScheme::Byte ? 0 : 1;
    fnv_bytes(h, &scheme_byte, 1);
    for (std::size_t id = 0; id < surfaces_.size(); ++id) {
        std::uint32_t id32 = static_cast<std::uint32_t>(id);
        fnv_bytes(h, &id32, sizeof(id32));
        std::uint32_t len = static_cast<std::uint32_t>(surfaces_[id].size());
        fnv_bytes(h, &len, sizeof(len));
        fnv_bytes(h, surfaces_[id].data(), surfaces_[id].size());
    }
    fingerprint_ = h;
}

Vocab Vocab::byte_vocab() {
    Vocab v;
    v.scheme_ = VocabScheme::Byte;
    for (auto s : kReservedSurfaces) v.add_surface(std::string(s));
    for (int b = 0; b < 256; ++b) v.add_surface(std::string(1, static_cast<char>(b)));
    v.finalize();
    return v;
}

Vocab Vocab::word_vocab(const DocumentSet& docs) {
    if (docs.empty()) throw DataError("word vocab requires a non-empty corpus");
    Vocab v;
    v.scheme_ = VocabScheme::Word;
    for (auto s : kReservedSurfaces) v.add_surface(std::string(s));
    v.add_surface("<unk>");
    v.add_surface("::");  // key-surface delimiter, always known
    auto add_words = [&v](std::string_view text) {
        for (auto& piece : split_whitespace(text)) {
            if (!v.word_ids_.contains(piece)) v.add_surface(piece);
        }
    };
    for (const auto& doc : docs.docs()) {
        add_words(doc.title);
        add_words(doc.section);
        add_words(doc.text);
    }
    v.finalize();
    return v;
}

Vocab Vocab::external_vocab(std::size_t size) {
    if (size <= kNumReserved) throw UsageError("external vocab size must exceed the reserved block");
    Vocab v;
    v.scheme_ = VocabScheme::External;
    for (auto s : kReservedSurfaces) v.add_surface(std::string(s));
    for (std::size_t id = kNumReserved; id < size; ++id) {
        v.add_surface(std::to_string(id));
    }
    v.finalize();
    return v;
}

const std::string& Vocab::surface(TokenId id) const {
    if (id >= surfaces_.size()) throw DataError("unknown token id " + std::to_string(id));
    return surfaces_[id];
}

std::optional<TokenId> Vocab::unk_id() const {
    if (scheme_ != VocabScheme::Word) return std::nullopt;
    return kNumReserved;  // first id after the reserved block
}

namespace {

TokenId parse_external_id(const std::string& piece, std::size_t vocab_size) {
    for (char c : piece) {
        if (!std::isdigit(static_cast<unsigned char>(c))) {
            throw DataError("external scheme expects decimal token ids, got '" + piece + "'");
        }
    }
    unsigned long value = std::stoul(piece);
    if (value < kNumReserved || value >= vocab_size) {
        throw DataError("external token id " + piece + " outside [" +
                        std::to_string(kNumReserved) + ", " + std::to_string(vocab_size) + ")");
    }
    return static_cast<TokenId>(value);
}

}  // namespace

TokenSequence Vocab::encode(std::string_view text) const {
    TokenSequence out;
    if (scheme_ == VocabScheme::Byte) {
        out.reserve(text.size());
        for (unsigned char c : text) out.push_back(kNumReserved + c);
        return out;
    }
    if (scheme_ == VocabScheme::External) {
        for (auto& piece : split_whitespace(text)) {
            out.push_back(parse_external_id(piece, surfaces_.size()));
        }
        return out;
    }
    for (auto& piece : split_whitespace(text)) {
        auto it = word_ids_.find(piece);
        out.push_back(it != word_ids_.end() ? it->second : *unk_id());
    }
    return out;
}

std::string Vocab::decode(const TokenSequence& tokens) const {
    std::string out;
    bool first = true;
    for (TokenId id : tokens) {
        if (id >= surfaces_.size()) throw DataError("unknown token id " + std::to_string(id));
        if (is_reserved(id) && id != kKeyOpen && id != kKeyClose) {
            throw DataError("reserved token id " + std::to_string(id) + " in decode input");
        }
        if (scheme_ == VocabScheme::Byte) {
            out += surfaces_[id];
        } else {
            if (!first) out += ' ';
            out += surfaces_[id];
            first = false;
        }
    }
    return out;
}

TokenSequence Vocab::encode_markup(std::string_view text) const {
    TokenSequence out;
    if (scheme_ == VocabScheme::Byte) {
        std::size_t i = 0;
        while (i < text.size()) {
            if (text.compare(i, 2, "<<") == 0) {
                out.push_back(kKeyOpen);
                i += 2;
            } else if (text.compare(i, 2, ">>") == 0) {
                out.push_back(kKeyClose);
                i += 2;
            } else {
                out.push_back(kNumReserved + static_cast<unsigned char>(text[i]));
                ++i;
            }
        }
        return out;
    }
    for (auto& piece : split_whitespace(text)) {
        std::string_view rest = piece;
        TokenSequence tail;
        while (rest.size() >= 2) {
            if (rest.substr(0, 2) == "<<") {
                out.push_back(kKeyOpen);
                rest.remove_prefix(2);
            } else if (rest.substr(rest.size() - 2) == ">>") {
                tail.push_back(kKeyClose);
                rest.remove_suffix(2);
            } else {
                break;
            }
        }
        if (!rest.empty()) {
            if (scheme_ == VocabScheme::External) {
                out.push_back(parse_external_id(std::string(rest), surfaces_.size()));
            } else {
                auto it = word_ids_.find(std::string(rest));
                out.push_back(it != word_ids_.end() ? it->second : *unk_id());
            }
        }
        out.insert(out.end(), tail.rbegin(), tail.rend());
    }
    return out;
}

std::string Vocab::render(const TokenSequence& tokens) const {
    std::string out;
    bool first = true;
    for (TokenId id : tokens) {
        if (id == kPad || id == kEos) continue;
        const std::string& s = id < surfaces_.size() ? surfaces_[id]
                                                     : "<id:" + std::to_string(id) + ">";
        if (scheme_ == VocabScheme::Byte) {
            out += s;
        } else {
            if (!first) out += ' ';
            out += s;
            first = false;
        }
    }
    return out;
}

void Vocab::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write vocab file: " + path.string());
    out << "RVOC 1 " << to_string(scheme_) << ' ' << surfaces_.size() << ' ' << std::hex
        << fingerprint_ << std::dec << '\n';
    for (const auto& s : surfaces_) out << escape_surface(s) << '\n';
    if (!out) throw DataError("short write on vocab file: " + path.string());
}

Vocab Vocab::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open vocab file: " + path.string());
    std::string magic, scheme_name;
    int version = 0;
    std::size_t size = 0;
    std::string fp_hex;
    in >> magic >> version >> scheme_name >> size >> fp_hex;
    if (magic != "RVOC") throw DataError("not a vocab file: " + path.string());
    if (version != 1) throw DataError("unsupported vocab version " + std::to_string(version));
    in.ignore();  // newline after header
    Vocab v;
    v.scheme_ = vocab_scheme_from_string(scheme_name);
    std::string line;
    for (std::size_t i = 0; i < size; ++i) {
        if (!std::getline(in, line)) throw DataError("truncated vocab file: " + path.string());
        v.add_surface(unescape_surface(line, i + 2));
    }
    v.finalize();
    Fingerprint expected = std::stoull(fp_hex, nullptr, 16);
    if (expected != v.fingerprint_) {
        throw DataError("vocab fingerprint mismatch in " + path.string());
    }
    return v;
}

}  // namespace riches

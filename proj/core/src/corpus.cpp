#include "riches/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace riches {

namespace {

using nlohmann::json;

constexpr std::array<std::string_view, 7> kAbbreviations = {
    "Mr.", "Dr.", "e.g.", "i.e.", "vs.", "St.", "No.",
};

// Joins the non-empty parts with the " :: " key-surface delimiter.
std::string join_parts(std::initializer_list<std::string_view> parts) {
    std::string out;
    for (auto part : parts) {
        if (part.empty()) continue;
        if (!out.empty()) out += " :: ";
        out += part;
    }
    return out;
}

std::string require_string(const json& obj, const char* field, std::size_t line_no) {
    auto it = obj.find(field);
    if (it == obj.end() || !it->is_string()) {
        throw DataError("corpus line " + std::to_string(line_no) + ": missing string field '" +
                        field + "'");
    }
    return it->get<std::string>();
}

std::vector<std::string> lowercase_word_tokens(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            current += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

}  // namespace

void DocumentSet::add(Document doc) {
    auto [it, inserted] = index_.emplace(doc.doc_id, docs_.size());
    if (!inserted) throw DataError("duplicate doc_id '" + doc.doc_id + "'");
    docs_.push_back(std::move(doc));
}

bool DocumentSet::contains(std::string_view doc_id) const {
    return index_.contains(std::string(doc_id));
}

const Document& DocumentSet::by_id(std::string_view doc_id) const {
    auto it = index_.find(std::string(doc_id));
    if (it == index_.end()) throw DataError("unknown doc_id '" + std::string(doc_id) + "'");
    return docs_[it->second];
}

DocumentSet load_corpus(const std::filesystem::path& path, CorpusFormat format) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open corpus file: " + path.string());
    DocumentSet docs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw DataError("corpus line " + std::to_string(line_no) + ": " + e.what());
        }
        Document doc;
        doc.doc_id = require_string(obj, "doc_id", line_no);
        if (format == CorpusFormat::Documents) {
            doc.title = normalize_whitespace(obj.value("title", ""));
            doc.section = normalize_whitespace(obj.value("section", ""));
            doc.text = normalize_whitespace(require_string(obj, "text", line_no));
        } else if (format == CorpusFormat::Propositions) {
            doc.text = normalize_whitespace(require_string(obj, "proposition", line_no));
        } else {
            auto it = obj.find("tokens");
            if (it == obj.end() || !it->is_array()) {
                throw DataError("corpus line " + std::to_string(line_no) +
                                ": missing integer array field 'tokens'");
            }
            std::string joined;
            for (const auto& v : *it) {
                if (!v.is_number_unsigned() || v.get<std::uint64_t>() < kNumReserved) {
                    throw DataError("corpus line " + std::to_string(line_no) +
                                    ": token ids must be integers >= " +
                                    std::to_string(kNumReserved));
                }
                if (!joined.empty()) joined += ' ';
                joined += std::to_string(v.get<std::uint64_t>());
            }
            doc.text = std::move(joined);
        }
        if (doc.text.empty()) {
            docs.note_dropped_empty();
            continue;
        }
        try {
            docs.add(std::move(doc));
        } catch (const DataError& e) {
            throw DataError(std::string(e.what()) + " at line " + std::to_string(line_no));
        }
    }
    return docs;
}

std::string_view to_string(KeyStrategy strategy) {
    switch (strategy) {
        case KeyStrategy::Title: return "title";
        case KeyStrategy::Paragraph: return "paragraph";
        case KeyStrategy::ParagraphWithTitle: return "paragraph-with-title";
        case KeyStrategy::Sentence: return "sentence";
        case KeyStrategy::SentenceWithTitle: return "sentence-with-title";
        case KeyStrategy::Proposition: return "proposition";
    }
    return "unknown";
}

KeyStrategy key_strategy_from_string(std::string_view name) {
    if (name == "title") return KeyStrategy::Title;
    if (name == "paragraph") return KeyStrategy::Paragraph;
    if (name == "paragraph-with-title") return KeyStrategy::ParagraphWithTitle;
    if (name == "sentence") return KeyStrategy::Sentence;
    if (name == "sentence-with-title") return KeyStrategy::SentenceWithTitle;
    if (name == "proposition") return KeyStrategy::Proposition;
    throw UsageError("unknown key strategy: " + std::string(name));
}

bool is_paragraph_strategy(KeyStrategy strategy) {
    return strategy == KeyStrategy::Paragraph || strategy == KeyStrategy::ParagraphWithTitle;
}

void RetrievalKeySet::add(std::string surface, const std::string& doc_id, const Vocab& vocab) {
    auto it = by_surface_.find(surface);
    if (it != by_surface_.end()) {
        auto& ids = keys_[it->second].source_doc_ids;
        auto pos = std::lower_bound(ids.begin(), ids.end(), doc_id);
        if (pos == ids.end() || *pos != doc_id) ids.insert(pos, doc_id);
        return;
    }
    RetrievalKey key;
    key.key_id = static_cast<std::uint32_t>(keys_.size());
    key.token_form = vocab.encode(surface);
    key.surface = std::move(surface);
    key.source_doc_ids = {doc_id};
    by_surface_.emplace(key.surface, key.key_id);
    keys_.push_back(std::move(key));
}

const RetrievalKey& RetrievalKeySet::key(std::uint32_t key_id) const {
    if (key_id >= keys_.size()) throw DataError("unknown key_id " + std::to_string(key_id));
    return keys_[key_id];
}

std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<std::string> sentences;
    std::size_t start = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (c != '.' && c != '?' && c != '!') continue;
        // Terminator must be followed by whitespace and an uppercase/digit.
        std::size_t j = i + 1;
        if (j >= text.size() || !std::isspace(static_cast<unsigned char>(text[j]))) continue;
        while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        if (j >= text.size()) continue;
        unsigned char next = static_cast<unsigned char>(text[j]);
        if (!std::isupper(next) && !std::isdigit(next)) continue;
        if (c == '.') {
            bool is_abbrev = false;
            for (auto abbr : kAbbreviations) {
                if (i + 1 < abbr.size()) continue;
                std::size_t abbr_start = i + 1 - abbr.size();
                if (text.substr(abbr_start, abbr.size()) != abbr) continue;
                if (abbr_start == 0 ||
                    std::isspace(static_cast<unsigned char>(text[abbr_start - 1]))) {
                    is_abbrev = true;
                    break;
                }
            }
            if (is_abbrev) continue;
        }
        std::string sentence = normalize_whitespace(text.substr(start, i + 1 - start));
        if (!sentence.empty()) sentences.push_back(std::move(sentence));
        start = j;
    }
    if (start < text.size()) {
        std::string tail = normalize_whitespace(text.substr(start));
        if (!tail.empty()) sentences.push_back(std::move(tail));
    }
    return sentences;
}

RetrievalKeySet extract_keys(const DocumentSet& docs, KeyStrategy strategy, const Vocab& vocab,
                             KeyExtractionOptions options) {
    RetrievalKeySet keys(strategy, options.min_substring_len);
    keys.set_vocab_fingerprint(vocab.fingerprint());
    for (const auto& doc : docs.docs()) {
        switch (strategy) {
            case KeyStrategy::Title: {
                std::string surface = join_parts({doc.title, doc.section});
                // Untitled documents fall back to their text; a document is
                // never dropped silently.
                if (surface.empty()) surface = doc.text;
                keys.add(std::move(surface), doc.doc_id, vocab);
                break;
            }
            case KeyStrategy::Paragraph:
                keys.add(doc.text, doc.doc_id, vocab);
                break;
            case KeyStrategy::ParagraphWithTitle:
                keys.add(join_parts({doc.title, doc.section, doc.text}), doc.doc_id, vocab);
                break;
            case KeyStrategy::Sentence:
            case KeyStrategy::SentenceWithTitle: {
                auto sentences = split_sentences(doc.text);
                if (sentences.empty()) sentences.push_back(doc.text);
                for (auto& sentence : sentences) {
                    std::string surface =
                        strategy == KeyStrategy::Sentence
                            ? std::move(sentence)
                            : join_parts({doc.title, doc.section, sentence});
                    keys.add(std::move(surface), doc.doc_id, vocab);
                }
                break;
            }
            case KeyStrategy::Proposition:
                keys.add(doc.text, doc.doc_id, vocab);
                break;
        }
    }
    return keys;
}

std::string RetrievalKeySet::serialize_to_string() const {
    std::ostringstream out;
    json header;
    header["format"] = "riches-keys";
    header["version"] = 1;
    header["strategy"] = std::string(to_string(strategy_));
    header["min_substring_len"] = min_substring_len_;
    char fp[17];
    std::snprintf(fp, sizeof(fp), "%016llx", static_cast<unsigned long long>(vocab_fingerprint_));
    header["vocab_fingerprint"] = fp;
    out << header.dump() << '\n';
    for (const auto& key : keys_) {
        json row;
        row["key_id"] = key.key_id;
        row["surface"] = key.surface;
        row["source_doc_ids"] = key.source_doc_ids;
        out << row.dump() << '\n';
    }
    return out.str();
}

void RetrievalKeySet::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write key set: " + path.string());
    out << serialize_to_string();
    if (!out) throw DataError("short write on key set: " + path.string());
}

RetrievalKeySet RetrievalKeySet::load(const std::filesystem::path& path, const Vocab& vocab) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open key set: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty key set file: " + path.string());
    json header = json::parse(line, nullptr, false);
    if (header.is_discarded() || header.value("format", "") != "riches-keys") {
        throw DataError("not a key set file: " + path.string());
    }
    if (header.value("version", 0) != 1) {
        throw DataError("unsupported key set version in " + path.string());
    }
    RetrievalKeySet keys(key_strategy_from_string(header.value("strategy", "")),
                         header.value("min_substring_len", 8u));
    Fingerprint fp = std::stoull(header.value("vocab_fingerprint", "0"), nullptr, 16);
    if (fp != vocab.fingerprint()) {
        throw DataError("key set vocab fingerprint mismatch in " + path.string());
    }
    keys.set_vocab_fingerprint(fp);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json row = json::parse(line, nullptr, false);
        if (row.is_discarded()) {
            throw DataError("key set line " + std::to_string(line_no) + ": bad JSON");
        }
        RetrievalKey key;
        key.key_id = row.at("key_id").get<std::uint32_t>();
        key.surface = row.at("surface").get<std::string>();
        key.token_form = vocab.encode(key.surface);
        key.source_doc_ids = row.at("source_doc_ids").get<std::vector<std::string>>();
        if (key.key_id != keys.keys_.size()) {
            throw DataError("key set line " + std::to_string(line_no) + ": non-dense key_id");
        }
        if (key.source_doc_ids.empty()) {
            throw DataError("key set line " + std::to_string(line_no) + ": no source docs");
        }
        keys.by_surface_.emplace(key.surface, key.key_id);
        keys.keys_.push_back(std::move(key));
    }
    return keys;
}

TfIdfRanker::TfIdfRanker(const DocumentSet& docs) : n_docs_(static_cast<double>(docs.size())) {
    for (const auto& doc : docs.docs()) {
        auto& tf = tf_[doc.doc_id];
        std::set<std::string> seen;
        for (auto& token : lowercase_word_tokens(doc.text)) {
            tf[token] += 1.0;
            seen.insert(token);
        }
        for (auto& token : seen) df_[token] += 1.0;
    }
}

double TfIdfRanker::score(std::string_view query, std::string_view doc_id) const {
    auto doc_it = tf_.find(std::string(doc_id));
    if (doc_it == tf_.end()) return 0.0;
    double total = 0.0;
    for (auto& token : lowercase_word_tokens(query)) {
        auto tf_it = doc_it->second.find(token);
        if (tf_it == doc_it->second.end()) continue;
        double df = df_.at(token);
        if (df >= n_docs_) continue;  // log(N/df) == 0 adds nothing anyway
        total += tf_it->second * std::log(n_docs_ / df);
    }
    return total;
}

std::string TfIdfRanker::best_doc(std::string_view query,
                                  const std::vector<std::string>& candidate_doc_ids) const {
    std::string best;
    double best_score = -1.0;
    for (const auto& doc_id : candidate_doc_ids) {
        double s = score(query, doc_id);
        if (s > best_score) {
            best_score = s;
            best = doc_id;
        }
    }
    return best;
}

}  // namespace riches

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "riches/tokenizer.hpp"
#include "riches/types.hpp"

namespace riches {

// Unit of evidence. `text` is one paragraph-granularity body.
struct Document {
    std::string doc_id;
    std::string title;
    std::string section;
    std::string text;
};

class DocumentSet {
public:
    void add(Document doc);  // throws DataError on duplicate doc_id
    bool contains(std::string_view doc_id) const;
    const Document& by_id(std::string_view doc_id) const;

    const std::vector<Document>& docs() const { return docs_; }
    std::size_t size() const { return docs_.size(); }
    bool empty() const { return docs_.empty(); }
    // Number of input rows dropped because the text normalized to empty.
    std::size_t dropped_empty() const { return dropped_empty_; }
    void note_dropped_empty() { ++dropped_empty_; }

private:
    std::vector<Document> docs_;
    std::unordered_map<std::string, std::size_t> index_;
    std::size_t dropped_empty_ = 0;
};

enum class CorpusFormat { Documents, Propositions, Pretokenized };

// JSONL loaders. Documents: {"doc_id","title","section","text"};
// propositions: {"doc_id","proposition"}; pretokenized: {"doc_id",
// "tokens":[int,...]} with every id at or above the reserved block (the
// document text becomes the space-joined decimal ids). Text fields are
// whitespace-folded; rows whose text folds to empty are dropped (counted,
// never an error).
DocumentSet load_corpus(const std::filesystem::path& path, CorpusFormat format);

enum class KeyStrategy {
    Title,
    Paragraph,
    ParagraphWithTitle,
    Sentence,
    SentenceWithTitle,
    Proposition,
};

std::string_view to_string(KeyStrategy strategy);
KeyStrategy key_strategy_from_string(std::string_view name);
bool is_paragraph_strategy(KeyStrategy strategy);  // substring-licensed modes

struct RetrievalKey {
    std::uint32_t key_id = 0;
    std::string surface;
    TokenSequence token_form;
    std::vector<std::string> source_doc_ids;  // sorted, unique, non-empty
};

class RetrievalKeySet {
public:
    RetrievalKeySet() = default;
    RetrievalKeySet(KeyStrategy strategy, std::uint32_t min_substring_len)
        : strategy_(strategy), min_substring_len_(min_substring_len) {}

    // Merges identical surfaces into one key, unioning source doc ids.
    void add(std::string surface, const std::string& doc_id, const Vocab& vocab);

    const std::vector<RetrievalKey>& keys() const { return keys_; }
    std::size_t size() const { return keys_.size(); }
    bool empty() const { return keys_.empty(); }
    const RetrievalKey& key(std::uint32_t key_id) const;

    KeyStrategy strategy() const { return strategy_; }
    std::uint32_t min_substring_len() const { return min_substring_len_; }
    Fingerprint vocab_fingerprint() const { return vocab_fingerprint_; }
    void set_vocab_fingerprint(Fingerprint fp) { vocab_fingerprint_ = fp; }

    // JSONL sidecar with a versioned header line.
    void save(const std::filesystem::path& path) const;
    static RetrievalKeySet load(const std::filesystem::path& path, const Vocab& vocab);
    std::string serialize_to_string() const;

private:
    KeyStrategy strategy_ = KeyStrategy::Sentence;
    std::uint32_t min_substring_len_ = 8;
    Fingerprint vocab_fingerprint_ = 0;
    std::vector<RetrievalKey> keys_;
    std::unordered_map<std::string, std::uint32_t> by_surface_;
};

// Rule-based sentence splitter: ". ? !" followed by whitespace and an
// uppercase letter or digit ends a sentence, except after a stop-listed
// abbreviation (Mr., Dr., e.g., i.e., vs., St., No.).
std::vector<std::string> split_sentences(std::string_view text);

struct KeyExtractionOptions {
    std::uint32_t min_substring_len = 8;  // PARAGRAPH-mode close floor
};

RetrievalKeySet extract_keys(const DocumentSet& docs, KeyStrategy strategy,
                             const Vocab& vocab, KeyExtractionOptions options = {});

// Plain tf*log(N/df) ranker over lowercase word tokens; used to pick the
// evidence paragraph under a decoded title. No stop-words, no length norm.
class TfIdfRanker {
public:
    explicit TfIdfRanker(const DocumentSet& docs);

    double score(std::string_view query, std::string_view doc_id) const;
    // Highest-scoring candidate; ties break to the earliest candidate.
    std::string best_doc(std::string_view query,
                         const std::vector<std::string>& candidate_doc_ids) const;

private:
    std::unordered_map<std::string, std::unordered_map<std::string, double>> tf_;
    std::unordered_map<std::string, double> df_;
    double n_docs_ = 0;
};

}  // namespace riches

#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "riches/corpus.hpp"
#include "riches/decoder.hpp"
#include "riches/fm_index.hpp"
#include "riches/lm.hpp"
#include "riches/tokenizer.hpp"

namespace riches {

// Index bundle on disk: <stem>.rfmi, <stem>.vocab, <stem>.keys.jsonl.
struct IndexBundle {
    Vocab vocab;
    RetrievalKeySet keys;
    FmIndex index;

    void save(const std::filesystem::path& stem) const;
    static IndexBundle load(const std::filesystem::path& stem);
};

// external_vocab_size only matters for the EXTERNAL scheme; 0 sizes the
// vocabulary from the largest token id seen in the corpus.
IndexBundle build_index_bundle(const DocumentSet& docs, KeyStrategy strategy,
                               VocabScheme scheme, KeyExtractionOptions options = {},
                               std::uint32_t sample_rate = 32,
                               std::size_t external_vocab_size = 0);

// Prompt template: plain text with a "{question}" placeholder; markers in
// the few-shot demonstrations are recognized by encode_markup.
std::string render_template(const std::string& template_text, const std::string& question);

// Everything one decode run needs, with fingerprints cross-checked.
class Engine {
public:
    Engine(IndexBundle bundle, std::shared_ptr<LmBackend> backend, DecodeConfig config,
           std::string prompt_template = "{question}");

    // Optional corpus enables TF-IDF evidence expansion for TITLE indexes.
    void attach_corpus(DocumentSet docs);

    DecodeResult answer(const std::string& question, bool keep_trace = false);

    // Top TF-IDF paragraph for a constrained segment's candidate documents;
    // empty when no corpus is attached or the segment has no doc ids.
    std::string expand_evidence(const Segment& segment, const std::string& question) const;

    const IndexBundle& bundle() const { return bundle_; }
    DecodeConfig& config() { return config_; }
    const DecodeConfig& config() const { return config_; }
    // One-line key=value summary echoed into every report.
    std::string config_echo() const;
    void set_config_note(std::string note) { config_note_ = std::move(note); }
    const std::string& prompt_template() const { return template_; }
    void set_prompt_template(std::string text) { template_ = std::move(text); }
    LmBackend& backend() { return *backend_; }
    bool has_corpus() const { return corpus_.has_value(); }

private:
    IndexBundle bundle_;
    std::shared_ptr<LmBackend> backend_;
    DecodeConfig config_;
    std::string template_;
    std::optional<DocumentSet> corpus_;
    std::optional<TfIdfRanker> ranker_;
    std::string config_note_;
};

}  // namespace riches

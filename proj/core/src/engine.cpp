#include "riches/engine.hpp"

#include <sstream>

namespace riches {

void IndexBundle::save(const std::filesystem::path& stem) const {
    auto parent = stem.parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    vocab.save(stem.string() + ".vocab");
    keys.save(stem.string() + ".keys.jsonl");
    index.serialize(stem.string() + ".rfmi");
}

IndexBundle IndexBundle::load(const std::filesystem::path& stem) {
    IndexBundle bundle;
    bundle.vocab = Vocab::load(stem.string() + ".vocab");
    bundle.keys = RetrievalKeySet::load(stem.string() + ".keys.jsonl", bundle.vocab);
    bundle.index = FmIndex::deserialize(std::filesystem::path(stem.string() + ".rfmi"));
    if (bundle.index.vocab_fingerprint() != bundle.vocab.fingerprint()) {
        throw DataError("index/vocab fingerprint mismatch in bundle " + stem.string());
    }
    return bundle;
}

IndexBundle build_index_bundle(const DocumentSet& docs, KeyStrategy strategy, VocabScheme scheme,
                               KeyExtractionOptions options, std::uint32_t sample_rate,
                               std::size_t external_vocab_size) {
    IndexBundle bundle;
    switch (scheme) {
        case VocabScheme::Byte:
            bundle.vocab = Vocab::byte_vocab();
            break;
        case VocabScheme::Word:
            bundle.vocab = Vocab::word_vocab(docs);
            break;
        case VocabScheme::External: {
            std::size_t size = external_vocab_size;
            if (size == 0) {
                std::uint64_t max_id = kNumReserved;
                for (const auto& doc : docs.docs()) {
                    std::istringstream ids(doc.text);
                    std::uint64_t v = 0;
                    while (ids >> v) max_id = std::max(max_id, v);
                }
                size = max_id + 1;
            }
            bundle.vocab = Vocab::external_vocab(size);
            break;
        }
    }
    bundle.keys = extract_keys(docs, strategy, bundle.vocab, options);
    bundle.index = FmIndex::build(bundle.keys, sample_rate);
    return bundle;
}

std::string render_template(const std::string& template_text, const std::string& question) {
    static constexpr std::string_view kPlaceholder = "{question}";
    std::string out = template_text;
    std::size_t pos = 0;
    while ((pos = out.find(kPlaceholder, pos)) != std::string::npos) {
        out.replace(pos, kPlaceholder.size(), question);
        pos += question.size();
    }
    return out;
}

Engine::Engine(IndexBundle bundle, std::shared_ptr<LmBackend> backend, DecodeConfig config,
               std::string prompt_template)
    : bundle_(std::move(bundle)),
      backend_(std::move(backend)),
      config_(config),
      template_(std::move(prompt_template)) {
    if (!backend_) throw UsageError("engine requires a backend");
    if (backend_->vocab_fingerprint() != bundle_.vocab.fingerprint()) {
        throw DataError("backend/vocab fingerprint mismatch");
    }
    config_.strategy = bundle_.keys.strategy();
    if (config_.min_substring_len == 0) {
        config_.min_substring_len = bundle_.keys.min_substring_len();
    }
}

void Engine::attach_corpus(DocumentSet docs) {
    ranker_.emplace(docs);
    corpus_.emplace(std::move(docs));
}

DecodeResult Engine::answer(const std::string& question, bool keep_trace) {
    const std::string prompt_text = render_template(template_, question);
    TokenSequence prompt = bundle_.vocab.encode_markup(prompt_text);
    if (prompt.empty()) throw DataError("prompt encoded to zero tokens");
    return decode(prompt, *backend_, bundle_.index, bundle_.keys, bundle_.vocab, config_,
                  keep_trace);
}

std::string Engine::expand_evidence(const Segment& segment, const std::string& question) const {
    if (!ranker_ || !corpus_ || segment.doc_ids.empty()) return "";
    std::string best = ranker_->best_doc(question, segment.doc_ids);
    if (best.empty() || !corpus_->contains(best)) return "";
    return corpus_->by_id(best).text;
}

std::string Engine::config_echo() const {
    std::ostringstream out;
    out << "strategy=" << to_string(config_.strategy) << " beam_size=" << config_.beam_size
        << " adaptive_beam=" << (config_.adaptive_beam ? "true" : "false")
        << " max_steps=" << config_.max_steps << " max_key_tokens=" << config_.max_key_tokens
        << " min_substring_len=" << config_.min_substring_len
        << " no_repeat_keys=" << (config_.no_repeat_keys ? "true" : "false")
        << " vocab=" << to_string(bundle_.vocab.scheme()) << ":" << bundle_.vocab.size()
        << " keys=" << bundle_.keys.size();
    if (!config_note_.empty()) out << ' ' << config_note_;
    return out.str();
}

}  // namespace riches

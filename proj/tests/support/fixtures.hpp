#pragma once

// Shared corpora, planted benchmarks, and stream builders for tests.

#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "riches/corpus.hpp"
#include "riches/engine.hpp"
#include "riches/eval.hpp"
#include "riches/fm_index.hpp"
#include "riches/lm.hpp"
#include "riches/tokenizer.hpp"

namespace riches::testing {

inline Document make_doc(std::string id, std::string text, std::string title = "",
                         std::string section = "") {
    Document d;
    d.doc_id = std::move(id);
    d.title = std::move(title);
    d.section = std::move(section);
    d.text = std::move(text);
    return d;
}

// Three-sentence corpus used across the decoder and index tests.
inline DocumentSet cats_and_dogs() {
    DocumentSet docs;
    docs.add(make_doc("d1", "the cat sat"));
    docs.add(make_doc("d2", "the cat ran"));
    docs.add(make_doc("d3", "a dog ran"));
    return docs;
}

inline TokenSequence stream_tokens(const Vocab& vocab, const std::string& text) {
    TokenSequence tokens = vocab.encode_markup(text);
    tokens.push_back(kEos);
    return tokens;
}

// Random BYTE-scheme proposition corpora for fuzzing.
struct RandomCorpus {
    Vocab vocab = Vocab::byte_vocab();
    RetrievalKeySet keys;
    FmIndex fm;
};

inline RandomCorpus make_random_corpus(std::mt19937& rng, std::size_t max_total_tokens,
                                       int alphabet = 6, std::uint32_t sample_rate = 32) {
    std::uniform_int_distribution<int> key_len(1, 24);
    std::uniform_int_distribution<int> symbol(0, alphabet - 1);
    DocumentSet docs;
    std::size_t total = 0;
    int doc_index = 0;
    while (total + 26 < max_total_tokens) {
        int len = key_len(rng);
        std::string text;
        for (int i = 0; i < len; ++i) text += static_cast<char>('a' + symbol(rng));
        total += static_cast<std::size_t>(len) + 1;
        docs.add(make_doc("d" + std::to_string(doc_index++), text));
    }
    if (docs.empty()) docs.add(make_doc("d0", "a"));
    RandomCorpus corpus;
    corpus.keys = extract_keys(docs, KeyStrategy::Proposition, corpus.vocab);
    corpus.fm = FmIndex::build(corpus.keys, sample_rate);
    return corpus;
}

inline TokenSequence random_pattern(std::mt19937& rng, const RetrievalKeySet& keys,
                                    int max_len, int alphabet = 6) {
    std::uniform_int_distribution<int> len_dist(1, max_len);
    std::uniform_int_distribution<int> coin(0, 3);
    const int len = len_dist(rng);
    TokenSequence pattern;
    if (coin(rng) != 0 && !keys.empty()) {
        // Sample a substring of a real key so most patterns actually occur.
        std::uniform_int_distribution<std::size_t> key_dist(0, keys.size() - 1);
        const auto& form = keys.key(static_cast<std::uint32_t>(key_dist(rng))).token_form;
        std::uniform_int_distribution<std::size_t> start_dist(0, form.size() - 1);
        std::size_t start = start_dist(rng);
        for (std::size_t i = start; i < form.size() && pattern.size() < static_cast<std::size_t>(len); ++i) {
            pattern.push_back(form[i]);
        }
        // Occasionally run into the key-end sentinel.
        if (coin(rng) == 1 && pattern.size() < static_cast<std::size_t>(len)) {
            pattern.push_back(kKeyEndSentinel);
        }
    } else {
        std::uniform_int_distribution<int> symbol(0, alphabet - 1);
        for (int i = 0; i < len; ++i) {
            pattern.push_back(kNumReserved + static_cast<TokenId>('a' + symbol(rng)));
        }
    }
    return pattern;
}

// Random WORD-scheme corpora with >1024 distinct words, driving the
// occurrence-list rank backend rather than the checkpoint one.
struct RandomWordCorpus {
    Vocab vocab;
    RetrievalKeySet keys;
    FmIndex fm;
};

inline RandomWordCorpus make_random_word_corpus(std::mt19937& rng, int n_keys,
                                                int pool_size = 1500) {
    std::uniform_int_distribution<int> word(0, pool_size - 1);
    std::uniform_int_distribution<int> key_len(1, 10);
    DocumentSet docs;
    for (int k = 0; k < n_keys; ++k) {
        std::string text;
        int len = key_len(rng);
        for (int w = 0; w < len; ++w) {
            if (w) text += ' ';
            text += "w" + std::to_string(word(rng));
        }
        docs.add(make_doc("d" + std::to_string(k), text));
    }
    // A tail document mentioning every pool word pins the vocabulary size
    // above the checkpoint cutoff regardless of sampling luck.
    std::string all;
    for (int w = 0; w < pool_size; ++w) {
        if (w) all += ' ';
        all += "w" + std::to_string(w);
    }
    docs.add(make_doc("pool", all));
    RandomWordCorpus corpus;
    corpus.vocab = Vocab::word_vocab(docs);
    corpus.keys = extract_keys(docs, KeyStrategy::Proposition, corpus.vocab);
    corpus.fm = FmIndex::build(corpus.keys, 16);
    return corpus;
}

// ---------------------------------------------------------------------------
// Planted synthetic QA benchmark.
//
// Five answer buckets; each bucket has a short gold proposition "cB is AB".
// The plain variant adds a 70-token trap proposition per bucket sharing the
// gold's first token, with the trap branch weighted so greedy always takes
// it and dies against the span-length cap while a wide beam keeps the gold
// branch alive. The keyword variant instead plants near-tied unconstrained
// thought variations that flood a non-adaptive beam before the span opens.
// ---------------------------------------------------------------------------

enum class PlantedVariant { Plain, Keyword };

struct PlantedBenchmark {
    Vocab vocab;
    RetrievalKeySet keys;
    FmIndex fm;
    std::shared_ptr<NGramLm> backend;
    std::vector<QaExample> dataset;
    std::string prompt_template = "{question}";
    DocumentSet key_docs;
    std::vector<std::string> stream_texts;
    std::string aux_words;  // every non-marker stream word, in first-use order

    std::filesystem::path write_dataset(const std::filesystem::path& path) const {
        std::ofstream out(path);
        for (const auto& ex : dataset) {
            out << "{\"question_id\":\"" << ex.question_id << "\",\"question\":\"" << ex.question
                << "\",\"answers\":[\"" << ex.gold_answers.at(0) << "\"]}\n";
        }
        return path;
    }

    // Proposition JSONL for driving the CLI; the trailing vocab row keeps
    // question and glue words out of UNK when the CLI rebuilds the vocab.
    std::filesystem::path write_corpus(const std::filesystem::path& path,
                                       bool include_vocab_row = true) const {
        std::ofstream out(path);
        for (const auto& doc : key_docs.docs()) {
            out << "{\"doc_id\":\"" << doc.doc_id << "\",\"proposition\":\"" << doc.text
                << "\"}\n";
        }
        if (include_vocab_row) {
            out << "{\"doc_id\":\"vocab\",\"proposition\":\"" << aux_words << "\"}\n";
        }
        return path;
    }

    std::filesystem::path write_train(const std::filesystem::path& path) const {
        std::ofstream out(path);
        for (const auto& s : stream_texts) out << s << '\n';
        return path;
    }

    Engine make_engine(DecodeConfig config) const {
        IndexBundle bundle;
        bundle.vocab = vocab;
        bundle.keys = keys;
        bundle.index = fm;
        return Engine(std::move(bundle), backend, config, prompt_template);
    }
};

inline PlantedBenchmark make_planted(PlantedVariant variant, int num_questions = 200,
                                     int num_buckets = 5) {
    PlantedBenchmark bench;

    const int trap_fillers = 68;
    std::vector<std::string> gold_text(num_buckets), trap_text(num_buckets);
    DocumentSet key_docs;
    for (int b = 0; b < num_buckets; ++b) {
        gold_text[b] = "c" + std::to_string(b) + " is A" + std::to_string(b);
        key_docs.add(make_doc("gold" + std::to_string(b), gold_text[b]));
        if (variant == PlantedVariant::Plain) {
            std::string trap = "c" + std::to_string(b) + " x";
            for (int f = 0; f < trap_fillers; ++f) trap += " f" + std::to_string(f);
            trap_text[b] = trap;
            key_docs.add(make_doc("trap" + std::to_string(b), trap));
        }
    }

    // Training streams; question order fixes the tie-breaking word ids.
    std::vector<std::string> streams;
    for (int i = 0; i < num_questions; ++i) {
        int b = i % num_buckets;
        std::string q = "q" + std::to_string(i) + " ?";
        bench.dataset.push_back(QaExample{"q" + std::to_string(i), q,
                                          {"A" + std::to_string(b)},
                                          {}});
        if (variant == PlantedVariant::Plain) {
            streams.push_back(q + " << " + gold_text[b] + " >> answer: A" + std::to_string(b));
        } else {
            streams.push_back(q + " keyword : h" + std::to_string(b) + " << " + gold_text[b] +
                              " >> answer: A" + std::to_string(b));
        }
    }
    if (variant == PlantedVariant::Plain) {
        // Raw text (no markers): teaches the trap branch after cB without
        // polluting the post-close transitions of the QA streams.
        for (int b = 0; b < num_buckets; ++b) {
            for (int r = 0; r < 60; ++r) {
                streams.push_back("note ; " + trap_text[b]);
            }
        }
    } else {
        for (int k = 0; k < 12; ++k) {
            std::string chain = "n ? keyword v" + std::to_string(k) + " w" + std::to_string(k) +
                                " u" + std::to_string(k);
            for (int r = 0; r < 30; ++r) streams.push_back(chain + " a" + std::to_string(k));
            for (int r = 0; r < 29; ++r) streams.push_back(chain + " b" + std::to_string(k));
        }
    }

    // Vocabulary covers the key docs plus every non-marker stream word.
    DocumentSet vocab_docs;
    for (const auto& d : key_docs.docs()) vocab_docs.add(d);
    {
        std::set<std::string> seen;
        std::string aux;
        for (const auto& s : streams) {
            std::istringstream words(s);
            std::string w;
            while (words >> w) {
                if (w == "<<" || w == ">>") continue;
                if (seen.insert(w).second) {
                    if (!aux.empty()) aux += ' ';
                    aux += w;
                }
            }
        }
        vocab_docs.add(make_doc("aux", aux));
        bench.aux_words = aux;
    }
    bench.stream_texts = streams;
    bench.vocab = Vocab::word_vocab(vocab_docs);
    bench.keys = extract_keys(key_docs, KeyStrategy::Proposition, bench.vocab);
    bench.fm = FmIndex::build(bench.keys, 32);
    bench.key_docs = std::move(key_docs);

    std::vector<TokenSequence> token_streams;
    token_streams.reserve(streams.size());
    for (const auto& s : streams) token_streams.push_back(stream_tokens(bench.vocab, s));
    bench.backend = std::make_shared<NGramLm>(
        train_ngram(token_streams, 2, bench.vocab.size(), bench.vocab.fingerprint()));
    return bench;
}

}  // namespace riches::testing

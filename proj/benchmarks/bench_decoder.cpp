#include <benchmark/benchmark.h>

#include <random>

#include "riches/decoder.hpp"
#include "riches/engine.hpp"

using namespace riches;

namespace {

struct Fixture {
    Vocab vocab = Vocab::byte_vocab();
    RetrievalKeySet keys;
    FmIndex fm;
    std::shared_ptr<NGramLm> lm;
    TokenSequence prompt;
};

const Fixture& fixture() {
    static Fixture f = [] {
        std::mt19937 rng(1337);
        std::uniform_int_distribution<int> key_len(10, 30);
        std::uniform_int_distribution<int> symbol(0, 7);
        DocumentSet docs;
        std::int64_t total = 0;
        int doc_id = 0;
        while (total < 1000000) {
            int len = key_len(rng);
            std::string text;
            for (int i = 0; i < len; ++i) text += static_cast<char>('a' + symbol(rng));
            total += len + 1;
            docs.add(Document{"d" + std::to_string(doc_id++), "", "", text});
        }
        Fixture fx;
        fx.keys = extract_keys(docs, KeyStrategy::Proposition, fx.vocab);
        fx.fm = FmIndex::build(fx.keys, 32);
        std::vector<TokenSequence> streams;
        for (std::size_t k = 0; k < 2000; ++k) {
            TokenSequence s = fx.vocab.encode_markup("<< " + fx.keys.key(k).surface + " >>");
            s.push_back(kEos);
            streams.push_back(std::move(s));
        }
        fx.lm = std::make_shared<NGramLm>(
            train_ngram(streams, 2, fx.vocab.size(), fx.vocab.fingerprint()));
        fx.prompt = fx.vocab.encode("a");
        return fx;
    }();
    return f;
}

// One decode step at beam width state.range(0) over the 1M-token index,
// measured from a mid-decode beam state.
void BM_DecodeStep(benchmark::State& state) {
    const Fixture& f = fixture();
    DecodeConfig config;
    config.strategy = KeyStrategy::Proposition;
    config.beam_size = static_cast<std::uint32_t>(state.range(0));
    config.adaptive_beam = false;
    config.max_steps = 64;

    std::vector<Hypothesis> warm{Hypothesis{}};
    for (int i = 0; i < 4; ++i) {
        warm = step(warm, *f.lm, f.fm, config, f.prompt, f.vocab, nullptr);
    }
    for (auto _ : state) {
        auto beam = warm;
        benchmark::DoNotOptimize(
            beam = step(beam, *f.lm, f.fm, config, f.prompt, f.vocab, nullptr));
    }
}
BENCHMARK(BM_DecodeStep)->Arg(1)->Arg(5)->Arg(10);

void BM_MaskFullVocab(benchmark::State& state) {
    const Fixture& f = fixture();
    std::vector<double> logprobs(f.vocab.size(), -5.57);
    std::vector<TokenId> allowed;
    for (TokenId t = kNumReserved; t < f.vocab.size(); t += 2) allowed.push_back(t);
    for (auto _ : state) {
        benchmark::DoNotOptimize(mask(logprobs, allowed));
    }
}
BENCHMARK(BM_MaskFullVocab);

void BM_AllowedTokensMidSpan(benchmark::State& state) {
    const Fixture& f = fixture();
    DecodeConfig config;
    config.strategy = KeyStrategy::Proposition;
    Hypothesis hyp;
    hyp = apply_token(hyp, kKeyOpen, 0.0, f.fm, config);
    const auto& form = f.keys.key(7).token_form;
    for (std::size_t i = 0; i < 4; ++i) hyp = apply_token(hyp, form[i], -1.0, f.fm, config);
    for (auto _ : state) {
        benchmark::DoNotOptimize(allowed_tokens(hyp, f.fm, config, f.vocab.size()));
    }
}
BENCHMARK(BM_AllowedTokensMidSpan);

}  // namespace

BENCHMARK_MAIN();

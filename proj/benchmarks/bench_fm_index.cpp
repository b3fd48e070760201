#include <benchmark/benchmark.h>

#include <random>

#include "riches/corpus.hpp"
#include "riches/fm_index.hpp"
#include "riches/tokenizer.hpp"

using namespace riches;

namespace {

struct Fixture {
    Vocab vocab = Vocab::byte_vocab();
    RetrievalKeySet keys;
    FmIndex fm;
    std::vector<TokenSequence> probes;  // key prefixes of assorted depth
};

// One shared index per corpus size; building dominates everything else, so
// it happens once outside the timed region.
const Fixture& fixture_for(std::int64_t total_tokens) {
    static std::map<std::int64_t, Fixture> cache;
    auto it = cache.find(total_tokens);
    if (it != cache.end()) return it->second;

    std::mt19937 rng(4477);
    std::uniform_int_distribution<int> key_len(10, 30);
    std::uniform_int_distribution<int> symbol(0, 7);
    DocumentSet docs;
    std::int64_t total = 0;
    int doc_id = 0;
    while (total < total_tokens) {
        int len = key_len(rng);
        std::string text;
        for (int i = 0; i < len; ++i) text += static_cast<char>('a' + symbol(rng));
        total += len + 1;
        docs.add(Document{"d" + std::to_string(doc_id++), "", "", text});
    }
    Fixture f;
    f.keys = extract_keys(docs, KeyStrategy::Proposition, f.vocab);
    f.fm = FmIndex::build(f.keys, 32);
    std::uniform_int_distribution<std::size_t> key_pick(0, f.keys.size() - 1);
    std::uniform_int_distribution<int> depth(1, 8);
    for (int i = 0; i < 512; ++i) {
        const auto& form = f.keys.key(static_cast<std::uint32_t>(key_pick(rng))).token_form;
        int d = std::min<int>(depth(rng), static_cast<int>(form.size()));
        f.probes.emplace_back(form.begin(), form.begin() + d);
    }
    return cache.emplace(total_tokens, std::move(f)).first->second;
}

MatchRange run_extends(const FmIndex& fm, const TokenSequence& pattern) {
    MatchRange range = fm.root();
    for (TokenId t : pattern) range = fm.extend(range, t);
    return range;
}

void BM_Extend(benchmark::State& state) {
    const Fixture& f = fixture_for(state.range(0));
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(run_extends(f.fm, f.probes[i++ % f.probes.size()]));
    }
}
BENCHMARK(BM_Extend)->Arg(100000)->Arg(1000000);

void BM_ContinuationsRoot(benchmark::State& state) {
    const Fixture& f = fixture_for(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(f.fm.continuations(f.fm.root()));
    }
}
BENCHMARK(BM_ContinuationsRoot)->Arg(100000)->Arg(1000000);

void BM_ContinuationsDeep(benchmark::State& state) {
    const Fixture& f = fixture_for(state.range(0));
    std::vector<MatchRange> ranges;
    for (const auto& probe : f.probes) {
        MatchRange r = run_extends(f.fm, probe);
        if (!r.empty()) ranges.push_back(r);
    }
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(f.fm.continuations(ranges[i++ % ranges.size()]));
    }
}
BENCHMARK(BM_ContinuationsDeep)->Arg(100000)->Arg(1000000);

void BM_Locate(benchmark::State& state) {
    const Fixture& f = fixture_for(state.range(0));
    std::vector<MatchRange> ranges;
    for (const auto& probe : f.probes) {
        MatchRange r = run_extends(f.fm, probe);
        if (!r.empty()) ranges.push_back(r);
    }
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(f.fm.locate(ranges[i++ % ranges.size()], 16));
    }
}
BENCHMARK(BM_Locate)->Arg(1000000);

void BM_AnchoredExtend(benchmark::State& state) {
    const Fixture& f = fixture_for(state.range(0));
    std::size_t i = 0;
    for (auto _ : state) {
        const auto& probe = f.probes[i++ % f.probes.size()];
        MatchRange range = f.fm.anchored_root();
        for (TokenId t : probe) range = f.fm.extend(range, t);
        benchmark::DoNotOptimize(range);
    }
}
BENCHMARK(BM_AnchoredExtend)->Arg(1000000);

}  // namespace

BENCHMARK_MAIN();

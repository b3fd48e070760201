#include "riches/decoder.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <set>
#include <span>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace riches {

namespace {

using nlohmann::json;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Occurrence cap used when deciding whether a continuation resolves only to
// already-emitted keys; wider ranges are assumed to reach fresh keys.
constexpr std::int64_t kNoRepeatProbeLimit = 64;

bool spans_only_emitted_keys(const MatchRange& range, const FmIndex& fm,
                             const Hypothesis& hyp) {
    if (range.empty()) return false;
    if (range.count() > static_cast<std::uint64_t>(kNoRepeatProbeLimit)) return false;
    auto occurrences = fm.locate(range, kNoRepeatProbeLimit);
    for (const auto& occ : occurrences) {
        if (std::find(hyp.emitted_key_ids.begin(), hyp.emitted_key_ids.end(), occ.key_id) ==
            hyp.emitted_key_ids.end()) {
            return false;
        }
    }
    return !occurrences.empty();
}

// Key ids a closing span resolves to. Whole-key strategies resolve through
// the end sentinel so only complete keys count; PARAGRAPH modes accept any
// occurrence of the substring.
std::vector<std::uint32_t> resolve_span(const MatchRange& range, const FmIndex& fm,
                                        const DecodeConfig& config, bool complete_key) {
    MatchRange target = complete_key ? fm.extend(range, kKeyEndSentinel) : range;
    if (target.empty()) target = range;
    std::vector<std::uint32_t> key_ids;
    for (const auto& occ : fm.locate(target, config.locate_limit)) {
        key_ids.push_back(occ.key_id);
    }
    std::sort(key_ids.begin(), key_ids.end());
    key_ids.erase(std::unique(key_ids.begin(), key_ids.end()), key_ids.end());
    return key_ids;
}

struct Candidate {
    Hypothesis hyp;
    std::size_t parent = 0;
    std::int64_t token_key = -1;  // -1 for finished pass-through
};

void sort_pool(std::vector<Candidate>& pool) {
    std::sort(pool.begin(), pool.end(), [](const Candidate& a, const Candidate& b) {
        if (a.hyp.score != b.hyp.score) return a.hyp.score > b.hyp.score;
        if (a.parent != b.parent) return a.parent < b.parent;
        return a.token_key < b.token_key;
    });
}

}  // namespace

std::vector<double> mask(const std::vector<double>& logprobs,
                         const std::vector<TokenId>& allowed) {
    std::vector<double> out(logprobs.size(), kNegInf);
    for (TokenId t : allowed) {
        if (t < out.size()) out[t] = logprobs[t];
    }
    return out;
}

std::vector<TokenId> allowed_tokens(const Hypothesis& hyp, const FmIndex& fm,
                                    const DecodeConfig& config, std::size_t vocab_size) {
    std::vector<TokenId> allowed;
    if (hyp.finished) return allowed;

    if (hyp.mode == DecodeMode::Free) {
        allowed.reserve(vocab_size - 4);
        for (TokenId t = 0; t < vocab_size; ++t) {
            if (t == kPad || t == kKeyClose || t == kKeyEndSentinel || t == kSep) continue;
            allowed.push_back(t);
        }
        return allowed;
    }

    const bool paragraph = is_paragraph_strategy(config.strategy);
    const std::uint32_t span_len = hyp.span_length();
    auto conts = fm.continuations(hyp.range);

    bool close_licensed = false;
    if (paragraph) {
        close_licensed = span_len >= std::max<std::uint32_t>(1, config.min_substring_len);
    } else {
        for (const auto& [token, range] : conts) {
            if (token == kKeyEndSentinel) {
                close_licensed = true;
                break;
            }
        }
    }
    if (close_licensed && config.no_repeat_keys) {
        MatchRange target = paragraph ? hyp.range : fm.extend(hyp.range, kKeyEndSentinel);
        if (spans_only_emitted_keys(target, fm, hyp)) close_licensed = false;
    }

    if (span_len >= config.max_key_tokens) {
        if (close_licensed) allowed.push_back(kKeyClose);
        return allowed;
    }

    for (const auto& [token, range] : conts) {
        if (token < kNumReserved) continue;
        if (config.no_repeat_keys && spans_only_emitted_keys(range, fm, hyp)) continue;
        allowed.push_back(token);
    }
    if (close_licensed) allowed.push_back(kKeyClose);
    return allowed;
}

Hypothesis apply_token(const Hypothesis& hyp, TokenId token, double logprob, const FmIndex& fm,
                       const DecodeConfig& config) {
    Hypothesis next = hyp;
    next.tokens.push_back(token);
    next.score += logprob;

    if (next.mode == DecodeMode::Free) {
        if (token == config.eos_token) {
            next.finished = true;
        } else if (token == kKeyOpen) {
            next.mode = DecodeMode::Constrained;
            next.range = is_paragraph_strategy(config.strategy) ? fm.root() : fm.anchored_root();
            next.open_span_start = static_cast<std::uint32_t>(next.tokens.size());
        }
        return next;
    }

    if (token == kKeyClose) {
        auto key_ids = resolve_span(hyp.range, fm, config,
                                    !is_paragraph_strategy(config.strategy));
        next.emitted_key_ids.insert(next.emitted_key_ids.end(), key_ids.begin(), key_ids.end());
        next.span_key_counts.push_back(static_cast<std::uint32_t>(key_ids.size()));
        next.mode = DecodeMode::Free;
        next.range = MatchRange{};
        return next;
    }

    next.range = fm.extend(hyp.range, token);
    assert(!next.range.empty());
    return next;
}

std::vector<Hypothesis> step(const std::vector<Hypothesis>& beam, LmBackend& lm,
                             const FmIndex& fm, const DecodeConfig& config,
                             const TokenSequence& prompt, const Vocab& vocab,
                             TraceStep* trace) {
    std::vector<std::size_t> live;
    std::vector<Candidate> pool;
    for (std::size_t i = 0; i < beam.size(); ++i) {
        if (beam[i].finished) {
            pool.push_back(Candidate{beam[i], i, -1});
        } else {
            live.push_back(i);
        }
    }
    if (live.empty()) return beam;

    LogProbRequest request;
    request.fingerprint = vocab.fingerprint();
    request.prefixes.reserve(live.size());
    for (std::size_t i : live) {
        TokenSequence prefix = prompt;
        prefix.insert(prefix.end(), beam[i].tokens.begin(), beam[i].tokens.end());
        request.prefixes.push_back(std::move(prefix));
    }
    LogProbResponse response = lm.logprobs(request);
    if (response.logprobs.size() != live.size()) {
        throw DataError("backend returned wrong batch size");
    }

    const std::size_t vocab_size = lm.vocab_size();
    for (std::size_t li = 0; li < live.size(); ++li) {
        const std::size_t i = live[li];
        const Hypothesis& hyp = beam[i];
        const auto& raw = response.logprobs[li];
        if (raw.size() != vocab_size) throw DataError("backend returned wrong vector size");

        auto allowed = allowed_tokens(hyp, fm, config, vocab_size);
        if (allowed.empty()) {
            if (trace) {
                trace->pruned.push_back(
                    TracePruned{vocab.render(hyp.tokens), hyp.score, "constraint-blocked"});
            }
            continue;
        }

        const std::uint32_t fan =
            (hyp.mode == DecodeMode::Constrained || !config.adaptive_beam) ? config.beam_size : 1;

        std::vector<std::pair<double, TokenId>> scored;
        scored.reserve(allowed.size());
        for (TokenId t : allowed) {
            double lp = raw[t];
            if (lp == kNegInf) continue;
            scored.emplace_back(lp, t);
        }
        std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        if (scored.size() > fan) scored.resize(fan);

        if (trace) {
            // Record the raw-model favourites the corpus constraint blocked,
            // mirroring the crossed-out boxes of the beam visualization.
            std::vector<std::pair<double, TokenId>> raw_top;
            raw_top.reserve(vocab_size);
            for (TokenId t = 0; t < vocab_size; ++t) {
                if (raw[t] != kNegInf) raw_top.emplace_back(raw[t], t);
            }
            std::partial_sort(
                raw_top.begin(), raw_top.begin() + std::min<std::size_t>(fan, raw_top.size()),
                raw_top.end(), [](const auto& a, const auto& b) {
                    if (a.first != b.first) return a.first > b.first;
                    return a.second < b.second;
                });
            raw_top.resize(std::min<std::size_t>(fan, raw_top.size()));
            std::unordered_set<TokenId> allowed_set(allowed.begin(), allowed.end());
            for (auto [lp, t] : raw_top) {
                if (allowed_set.contains(t)) continue;
                TokenSequence blocked = hyp.tokens;
                blocked.push_back(t);
                trace->pruned.push_back(
                    TracePruned{vocab.render(blocked), hyp.score + lp, "constraint-blocked"});
            }
            trace->fanout.push_back(
                TraceFanout{static_cast<std::uint32_t>(i), hyp.mode,
                            static_cast<std::uint32_t>(scored.size())});
        }

        for (auto [lp, t] : scored) {
            pool.push_back(Candidate{apply_token(hyp, t, lp, fm, config), i,
                                     static_cast<std::int64_t>(t)});
        }
    }

    if (pool.empty()) {
        std::size_t best = live[0];
        for (std::size_t i : live) {
            if (beam[i].score > beam[best].score) best = i;
        }
        throw DeadEndError("constraint dead-end", vocab.render(beam[best].tokens));
    }

    sort_pool(pool);
    std::vector<Hypothesis> next;
    next.reserve(std::min<std::size_t>(config.beam_size, pool.size()));
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (i < config.beam_size) {
            next.push_back(std::move(pool[i].hyp));
        } else if (trace) {
            trace->pruned.push_back(
                TracePruned{vocab.render(pool[i].hyp.tokens), pool[i].hyp.score, "score"});
        }
    }
    if (trace) {
        for (const auto& hyp : next) {
            trace->hypotheses.push_back(TraceHypothesis{vocab.render(hyp.tokens), hyp.score, hyp.mode});
        }
    }
    return next;
}

namespace {

GenerationOutput finalize_hypothesis(const Hypothesis& hyp, const FmIndex& fm,
                                     const RetrievalKeySet& keys, const Vocab& vocab,
                                     const DecodeConfig& config, std::uint32_t rank) {
    GenerationOutput out;
    out.score = hyp.score;
    out.beam_rank = rank;
    out.truncated = !hyp.finished;

    auto make_constrained = [&](const TokenSequence& run,
                                std::span<const std::uint32_t> key_ids) {
        Segment seg;
        seg.kind = Segment::Kind::Constrained;
        seg.surface = vocab.render(run);
        std::set<std::string> docs;
        for (auto key_id : key_ids) {
            seg.key_ids.push_back(key_id);
            for (const auto& d : keys.key(key_id).source_doc_ids) docs.insert(d);
        }
        seg.doc_ids.assign(docs.begin(), docs.end());
        return seg;
    };

    TokenSequence run;
    bool in_span = false;
    std::size_t span_index = 0;
    std::size_t resolution_offset = 0;
    for (TokenId t : hyp.tokens) {
        if (!in_span) {
            if (t == kKeyOpen) {
                if (!run.empty()) {
                    Segment seg;
                    seg.kind = Segment::Kind::Free;
                    seg.surface = vocab.render(run);
                    if (!seg.surface.empty()) out.segments.push_back(std::move(seg));
                    run.clear();
                }
                in_span = true;
            } else if (t == config.eos_token) {
                break;
            } else {
                run.push_back(t);
            }
        } else if (t == kKeyClose) {
            std::span<const std::uint32_t> ids;
            if (span_index < hyp.span_key_counts.size()) {
                ids = std::span<const std::uint32_t>(hyp.emitted_key_ids)
                          .subspan(resolution_offset, hyp.span_key_counts[span_index]);
                resolution_offset += hyp.span_key_counts[span_index];
            }
            out.segments.push_back(make_constrained(run, ids));
            ++span_index;
            run.clear();
            in_span = false;
        } else {
            run.push_back(t);
        }
    }
    if (in_span) {
        // Truncated inside an open span: resolve the live range directly.
        // A span with no tokens yet matches everywhere, which is noise.
        std::vector<std::uint32_t> key_ids;
        if (!run.empty() && !hyp.range.empty()) {
            for (const auto& occ : fm.locate(hyp.range, config.locate_limit)) {
                key_ids.push_back(occ.key_id);
            }
            std::sort(key_ids.begin(), key_ids.end());
            key_ids.erase(std::unique(key_ids.begin(), key_ids.end()), key_ids.end());
        }
        out.segments.push_back(make_constrained(run, key_ids));
        out.truncated = true;
    } else if (!run.empty()) {
        Segment seg;
        seg.kind = Segment::Kind::Free;
        seg.surface = vocab.render(run);
        if (!seg.surface.empty()) out.segments.push_back(std::move(seg));
    }

    out.answer = extract_answer(out);
    return out;
}

}  // namespace

DecodeResult decode(const TokenSequence& prompt, LmBackend& lm, const FmIndex& fm,
                    const RetrievalKeySet& keys, const Vocab& vocab, const DecodeConfig& config,
                    bool keep_trace) {
    if (prompt.empty()) throw UsageError("decode: prompt must be non-empty");
    if (config.beam_size < 1) throw UsageError("decode: beam_size must be >= 1");
    if (config.max_key_tokens < 1) throw UsageError("decode: max_key_tokens must be >= 1");
    if (fm.vocab_fingerprint() != lm.vocab_fingerprint() ||
        fm.vocab_fingerprint() != vocab.fingerprint()) {
        throw DataError("vocab fingerprint mismatch between index, backend, and vocab");
    }

    std::vector<Hypothesis> beam{Hypothesis{}};
    DecodeResult result;
    for (std::uint32_t step_index = 0; step_index < config.max_steps; ++step_index) {
        bool all_finished = true;
        for (const auto& hyp : beam) all_finished &= hyp.finished;
        if (all_finished) break;

        TraceStep ts;
        beam = step(beam, lm, fm, config, prompt, vocab, keep_trace ? &ts : nullptr);
        if (keep_trace) {
            ts.step = step_index;
            result.trace.steps.push_back(std::move(ts));
        }
    }

    result.outputs.reserve(beam.size());
    for (std::size_t i = 0; i < beam.size(); ++i) {
        result.outputs.push_back(finalize_hypothesis(beam[i], fm, keys, vocab, config,
                                                     static_cast<std::uint32_t>(i)));
    }
    return result;
}

std::string extract_answer(const GenerationOutput& output) {
    std::string free_text;
    for (const auto& seg : output.segments) {
        if (seg.kind != Segment::Kind::Free) continue;
        if (!free_text.empty()) free_text += ' ';
        free_text += seg.surface;
    }
    static constexpr std::string_view kMarker = "answer:";
    auto pos = free_text.rfind(kMarker);
    if (pos == std::string::npos) return "";
    std::string tail = free_text.substr(pos + kMarker.size());
    std::size_t begin = tail.find_first_not_of(" \t\n\r");
    if (begin == std::string::npos) return "";
    std::size_t end = tail.find_last_not_of(" \t\n\r");
    return tail.substr(begin, end - begin + 1);
}

std::string BeamTrace::to_jsonl() const {
    std::ostringstream out;
    for (const auto& step : steps) {
        json record;
        record["step"] = step.step;
        record["hypotheses"] = json::array();
        for (const auto& h : step.hypotheses) {
            record["hypotheses"].push_back(
                {{"surface", h.surface},
                 {"score", h.score},
                 {"mode", h.mode == DecodeMode::Free ? "free" : "constrained"}});
        }
        record["pruned"] = json::array();
        for (const auto& p : step.pruned) {
            record["pruned"].push_back(
                {{"surface", p.surface}, {"score", p.score}, {"reason", p.reason}});
        }
        record["fanout"] = json::array();
        for (const auto& f : step.fanout) {
            record["fanout"].push_back(
                {{"parent", f.parent},
                 {"mode", f.mode == DecodeMode::Free ? "free" : "constrained"},
                 {"successors", f.successors}});
        }
        out << record.dump() << '\n';
    }
    return out.str();
}

std::string generation_output_to_json(const GenerationOutput& output,
                                      const std::string& question_id) {
    json record;
    if (!question_id.empty()) record["question_id"] = question_id;
    record["answer"] = output.answer;
    record["score"] = output.score;
    record["beam_rank"] = output.beam_rank;
    record["truncated"] = output.truncated;
    record["segments"] = json::array();
    for (const auto& seg : output.segments) {
        json s;
        s["type"] = seg.kind == Segment::Kind::Free ? "free" : "constrained";
        s["surface"] = seg.surface;
        if (seg.kind == Segment::Kind::Constrained) {
            s["key_ids"] = seg.key_ids;
            s["doc_ids"] = seg.doc_ids;
        }
        record["segments"].push_back(std::move(s));
    }
    return record.dump();
}

}  // namespace riches

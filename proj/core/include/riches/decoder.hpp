#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "riches/corpus.hpp"
#include "riches/fm_index.hpp"
#include "riches/lm.hpp"
#include "riches/tokenizer.hpp"
#include "riches/types.hpp"

namespace riches {

struct DecodeConfig {
    std::uint32_t beam_size = 10;
    bool adaptive_beam = true;
    std::uint32_t max_steps = 128;
    std::uint32_t max_key_tokens = 64;
    KeyStrategy strategy = KeyStrategy::Proposition;
    std::uint32_t min_substring_len = 8;  // PARAGRAPH-mode close floor
    bool no_repeat_keys = false;
    TokenId eos_token = kEos;
    // Cap on occurrences resolved per constrained span.
    std::int64_t locate_limit = 16;
};

enum class DecodeMode { Free, Constrained };

struct Hypothesis {
    TokenSequence tokens;  // prompt excluded
    double score = 0.0;    // sum of chosen tokens' raw log-probs
    DecodeMode mode = DecodeMode::Free;
    MatchRange range;                 // valid iff mode == Constrained
    std::uint32_t open_span_start = 0;  // token index just after KEY_OPEN
    std::vector<std::uint32_t> emitted_key_ids;
    // Number of emitted_key_ids contributed by each closed span, in order.
    std::vector<std::uint32_t> span_key_counts;
    bool finished = false;

    std::uint32_t span_length() const {
        return static_cast<std::uint32_t>(tokens.size()) - open_span_start;
    }
};

struct Segment {
    enum class Kind { Free, Constrained };
    Kind kind = Kind::Free;
    std::string surface;
    std::vector<std::uint32_t> key_ids;   // constrained only
    std::vector<std::string> doc_ids;     // constrained only
};

struct GenerationOutput {
    std::vector<Segment> segments;
    std::string answer;
    double score = 0.0;
    std::uint32_t beam_rank = 0;
    bool truncated = false;
};

// Per-step trace records reproduce the beam visualization as data: surviving
// hypotheses, pruned candidates with a reason (score | constraint-blocked),
// and per-parent fan-out counts for the adaptive-beam property.
struct TraceHypothesis {
    std::string surface;
    double score = 0.0;
    DecodeMode mode = DecodeMode::Free;
};

struct TracePruned {
    std::string surface;
    double score = 0.0;
    std::string reason;  // "score" or "constraint-blocked"
};

struct TraceFanout {
    std::uint32_t parent = 0;
    DecodeMode mode = DecodeMode::Free;
    std::uint32_t successors = 0;
};

struct TraceStep {
    std::uint32_t step = 0;
    std::vector<TraceHypothesis> hypotheses;
    std::vector<TracePruned> pruned;
    std::vector<TraceFanout> fanout;
};

struct BeamTrace {
    std::vector<TraceStep> steps;
    std::string to_jsonl() const;  // one step per line
};

// Sets entries outside `allowed` to -inf; allowed entries keep their raw
// log-probs. No renormalization. `allowed` must be non-empty.
std::vector<double> mask(const std::vector<double>& logprobs,
                         const std::vector<TokenId>& allowed);

// The corpus-membership indicator as a token filter. Empty result means the
// hypothesis is dead.
std::vector<TokenId> allowed_tokens(const Hypothesis& hyp, const FmIndex& fm,
                                    const DecodeConfig& config, std::size_t vocab_size);

// Appends one token, updating mode, range, and resolved keys. `logprob` is
// the raw model log-probability of the token.
Hypothesis apply_token(const Hypothesis& hyp, TokenId token, double logprob,
                       const FmIndex& fm, const DecodeConfig& config);

// One beam-search step over the live hypotheses: batched scoring, masking,
// adaptive fan-out, and pruning to beam_size with deterministic tie-breaks.
std::vector<Hypothesis> step(const std::vector<Hypothesis>& beam, LmBackend& lm,
                             const FmIndex& fm, const DecodeConfig& config,
                             const TokenSequence& prompt, const Vocab& vocab,
                             TraceStep* trace = nullptr);

struct DecodeResult {
    std::vector<GenerationOutput> outputs;  // beam-ranked; rank 0 is top beam
    BeamTrace trace;
};

DecodeResult decode(const TokenSequence& prompt, LmBackend& lm, const FmIndex& fm,
                    const RetrievalKeySet& keys, const Vocab& vocab,
                    const DecodeConfig& config, bool keep_trace = false);

// Text after the last "answer:" marker in the FREE segments, trimmed.
std::string extract_answer(const GenerationOutput& output);

std::string generation_output_to_json(const GenerationOutput& output,
                                      const std::string& question_id = {});

}  // namespace riches

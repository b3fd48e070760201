#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "riches/decoder.hpp"
#include "riches/types.hpp"

namespace riches {

class Engine;

struct QaExample {
    std::string question_id;
    std::string question;
    std::vector<std::string> gold_answers;  // non-empty
    std::vector<std::string> gold_doc_ids;  // optional
};

std::vector<QaExample> load_dataset(const std::filesystem::path& path);

// SQuAD-style normalization: lowercase, strip punctuation, drop articles
// (a/an/the), whitespace-split.
std::vector<std::string> normalize_answer_tokens(std::string_view text);

// Bag-of-token F1 against each gold; the max wins.
double token_f1(std::string_view prediction, const std::vector<std::string>& golds);

// 1 iff any constrained segment of the top-beam output contains a gold
// answer as a contiguous normalized-token run, or (when gold_doc_ids are
// given) resolves to a gold document.
int hits_at_1(const GenerationOutput& output, const QaExample& example);

// Constrained segment surfaces joined by single spaces; thoughts discarded.
std::string evidence_text(const GenerationOutput& output);

struct ExampleResult {
    std::string question_id;
    std::string answer;
    double answer_f1 = 0.0;
    int hits = 0;
    std::string evidence;
    double score = 0.0;
    std::string error;  // non-empty when decoding dead-ended
};

struct EvalReport {
    std::vector<ExampleResult> rows;  // sorted by question_id
    double mean_f1 = 0.0;
    double hits_rate = 0.0;
    std::string config_echo;
    std::string hits_rule =
        "hits@1: gold answer contained in a constrained span as a contiguous "
        "normalized-token run, or resolved doc id in gold_doc_ids";

    void recompute_aggregates();
};

struct RunEvalOptions {
    std::filesystem::path out_dir;
    int parallelism = 1;
    bool resume = true;
    bool export_autoais = true;
};

// Streams examples through the engine; per-example rows go to
// out_dir/results.jsonl (append-then-sorted-rewrite so interrupted runs
// resume by question_id), aggregates to out_dir/report.json, NLI-ready
// evidence to out_dir/autoais.jsonl. Dead-ends never abort the run.
EvalReport run_eval(Engine& engine, const std::filesystem::path& dataset_path,
                    const RunEvalOptions& options);

struct BeamAblationRow {
    std::uint32_t beam = 0;
    double mean_f1 = 0.0;
    double hits_rate = 0.0;
};

std::vector<BeamAblationRow> ablation_beam(Engine& engine,
                                           const std::filesystem::path& dataset_path,
                                           std::vector<std::uint32_t> beams,
                                           const std::filesystem::path& out_dir);

struct InterleaveAblationRow {
    bool keywords = false;
    bool adaptive = false;
    double mean_f1 = 0.0;
    double hits_rate = 0.0;
};

// Three-row grid: (keywords off, adaptive off), (on, off), (on, on).
std::vector<InterleaveAblationRow> ablation_interleave(
    Engine& keyword_engine, Engine& plain_engine,
    const std::filesystem::path& dataset_path, const std::filesystem::path& out_dir);

std::string report_to_json(const EvalReport& report);

}  // namespace riches

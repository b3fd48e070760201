#include "riches/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "riches/engine.hpp"

namespace riches {

namespace {

using nlohmann::json;

bool is_article(std::string_view token) {
    return token == "a" || token == "an" || token == "the";
}

}  // namespace

std::vector<QaExample> load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset: " + path.string());
    std::vector<QaExample> examples;
    std::set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded()) {
            throw DataError("dataset line " + std::to_string(line_no) + ": bad JSON");
        }
        QaExample ex;
        ex.question_id = obj.value("question_id", "");
        ex.question = obj.value("question", "");
        if (obj.contains("answers")) {
            ex.gold_answers = obj["answers"].get<std::vector<std::string>>();
        }
        if (obj.contains("gold_doc_ids")) {
            ex.gold_doc_ids = obj["gold_doc_ids"].get<std::vector<std::string>>();
        }
        if (ex.question_id.empty() || ex.question.empty() || ex.gold_answers.empty()) {
            throw DataError("dataset line " + std::to_string(line_no) +
                            ": needs question_id, question, non-empty answers");
        }
        if (!seen_ids.insert(ex.question_id).second) {
            throw DataError("dataset line " + std::to_string(line_no) +
                            ": duplicate question_id '" + ex.question_id + "'");
        }
        examples.push_back(std::move(ex));
    }
    if (examples.empty()) throw DataError("dataset is empty: " + path.string());
    return examples;
}

std::vector<std::string> normalize_answer_tokens(std::string_view text) {
    std::string lowered;
    lowered.reserve(text.size());
    for (char c : text) {
        unsigned char u = static_cast<unsigned char>(c);
        if (std::ispunct(u)) continue;  // strip punctuation entirely
        lowered += static_cast<char>(std::tolower(u));
    }
    std::vector<std::string> tokens;
    std::istringstream stream(lowered);
    std::string token;
    while (stream >> token) {
        if (!is_article(token)) tokens.push_back(token);
    }
    return tokens;
}

double token_f1(std::string_view prediction, const std::vector<std::string>& golds) {
    auto pred_tokens = normalize_answer_tokens(prediction);
    double best = 0.0;
    for (const auto& gold : golds) {
        auto gold_tokens = normalize_answer_tokens(gold);
        if (pred_tokens.empty() || gold_tokens.empty()) {
            // Degenerate cases score 1 only when both sides are empty.
            best = std::max(best, pred_tokens.empty() && gold_tokens.empty() ? 1.0 : 0.0);
            continue;
        }
        std::map<std::string, int> gold_counts;
        for (const auto& t : gold_tokens) gold_counts[t] += 1;
        int overlap = 0;
        for (const auto& t : pred_tokens) {
            auto it = gold_counts.find(t);
            if (it != gold_counts.end() && it->second > 0) {
                ++overlap;
                --it->second;
            }
        }
        if (overlap == 0) continue;
        double precision = static_cast<double>(overlap) / static_cast<double>(pred_tokens.size());
        double recall = static_cast<double>(overlap) / static_cast<double>(gold_tokens.size());
        best = std::max(best, 2.0 * precision * recall / (precision + recall));
    }
    return best;
}

namespace {

bool contains_run(const std::vector<std::string>& haystack,
                  const std::vector<std::string>& needle) {
    if (needle.empty() || needle.size() > haystack.size()) return false;
    for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
        bool match = true;
        for (std::size_t j = 0; j < needle.size(); ++j) {
            if (haystack[i + j] != needle[j]) {
                match = false;
                break;
            }
        }
        if (match) return true;
    }
    return false;
}

}  // namespace

int hits_at_1(const GenerationOutput& output, const QaExample& example) {
    for (const auto& seg : output.segments) {
        if (seg.kind != Segment::Kind::Constrained) continue;
        auto span_tokens = normalize_answer_tokens(seg.surface);
        for (const auto& gold : example.gold_answers) {
            if (contains_run(span_tokens, normalize_answer_tokens(gold))) return 1;
        }
        for (const auto& doc_id : seg.doc_ids) {
            if (std::find(example.gold_doc_ids.begin(), example.gold_doc_ids.end(), doc_id) !=
                example.gold_doc_ids.end()) {
                return 1;
            }
        }
    }
    return 0;
}

std::string evidence_text(const GenerationOutput& output) {
    std::string evidence;
    for (const auto& seg : output.segments) {
        if (seg.kind != Segment::Kind::Constrained) continue;
        if (!evidence.empty()) evidence += ' ';
        evidence += seg.surface;
    }
    return evidence;
}

void EvalReport::recompute_aggregates() {
    mean_f1 = 0.0;
    hits_rate = 0.0;
    if (rows.empty()) return;
    for (const auto& row : rows) {
        mean_f1 += row.answer_f1;
        hits_rate += row.hits;
    }
    mean_f1 /= static_cast<double>(rows.size());
    hits_rate /= static_cast<double>(rows.size());
}

namespace {

json result_to_json(const ExampleResult& row) {
    json obj;
    obj["question_id"] = row.question_id;
    obj["answer"] = row.answer;
    obj["answer_f1"] = row.answer_f1;
    obj["hits_at_1"] = row.hits;
    obj["evidence_text"] = row.evidence;
    obj["score"] = row.score;
    if (!row.error.empty()) obj["error"] = row.error;
    return obj;
}

ExampleResult result_from_json(const json& obj) {
    ExampleResult row;
    row.question_id = obj.value("question_id", "");
    row.answer = obj.value("answer", "");
    row.answer_f1 = obj.value("answer_f1", 0.0);
    row.hits = obj.value("hits_at_1", 0);
    row.evidence = obj.value("evidence_text", "");
    row.score = obj.value("score", 0.0);
    row.error = obj.value("error", "");
    return row;
}

ExampleResult evaluate_example(Engine& engine, const QaExample& example) {
    ExampleResult row;
    row.question_id = example.question_id;
    try {
        DecodeResult result = engine.answer(example.question);
        const GenerationOutput& top = result.outputs.at(0);  // top beam only
        row.answer = top.answer;
        row.answer_f1 = token_f1(top.answer, example.gold_answers);
        row.hits = hits_at_1(top, example);
        row.evidence = evidence_text(top);
        row.score = top.score;
        if (engine.bundle().keys.strategy() == KeyStrategy::Title && engine.has_corpus()) {
            // Title keys point at sections; expand evidence with the
            // TF-IDF-ranked paragraph so the NLI export has real text.
            std::string expanded;
            for (const auto& seg : top.segments) {
                if (seg.kind != Segment::Kind::Constrained) continue;
                std::string para = engine.expand_evidence(seg, example.question);
                if (para.empty()) continue;
                if (!expanded.empty()) expanded += ' ';
                expanded += para;
            }
            if (!expanded.empty()) row.evidence += " " + expanded;
        }
    } catch (const DeadEndError& e) {
        row.error = std::string("constraint dead-end: ") + e.what();
    }
    return row;
}

}  // namespace

EvalReport run_eval(Engine& engine, const std::filesystem::path& dataset_path,
                    const RunEvalOptions& options) {
    auto examples = load_dataset(dataset_path);
    std::filesystem::create_directories(options.out_dir);
    const auto results_path = options.out_dir / "results.jsonl";

    std::map<std::string, ExampleResult> done;
    if (options.resume && std::filesystem::exists(results_path)) {
        std::ifstream in(results_path);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            json obj = json::parse(line, nullptr, false);
            if (obj.is_discarded()) continue;  // torn tail line from a crash
            auto row = result_from_json(obj);
            if (!row.question_id.empty()) done[row.question_id] = std::move(row);
        }
    }

    std::vector<const QaExample*> pending;
    for (const auto& ex : examples) {
        if (!done.contains(ex.question_id)) pending.push_back(&ex);
    }

    std::mutex io_mutex;
    std::ofstream append(results_path, std::ios::app);
    if (!append) throw DataError("cannot write results: " + results_path.string());

    const int workers = std::max(1, options.parallelism);
    std::atomic<std::size_t> cursor{0};
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        threads.emplace_back([&]() {
            while (true) {
                std::size_t i = cursor.fetch_add(1);
                if (i >= pending.size()) break;
                ExampleResult row = evaluate_example(engine, *pending[i]);
                std::lock_guard<std::mutex> lock(io_mutex);
                append << result_to_json(row).dump() << '\n';
                append.flush();
                done[row.question_id] = std::move(row);
            }
        });
    }
    for (auto& t : threads) t.join();
    append.close();

    EvalReport report;
    for (const auto& ex : examples) {
        auto it = done.find(ex.question_id);
        if (it != done.end()) report.rows.push_back(it->second);
    }
    std::sort(report.rows.begin(), report.rows.end(),
              [](const ExampleResult& a, const ExampleResult& b) {
                  return a.question_id < b.question_id;
              });
    report.recompute_aggregates();
    report.config_echo = engine.config_echo();

    // Deterministic final artifacts: sorted rewrite of the row file.
    {
        std::ofstream out(results_path, std::ios::trunc);
        for (const auto& row : report.rows) out << result_to_json(row).dump() << '\n';
    }
    {
        std::ofstream out(options.out_dir / "report.json");
        out << report_to_json(report) << '\n';
    }
    if (options.export_autoais) {
        std::ofstream out(options.out_dir / "autoais.jsonl");
        std::map<std::string, const QaExample*> by_id;
        for (const auto& ex : examples) by_id[ex.question_id] = &ex;
        for (const auto& row : report.rows) {
            json obj;
            obj["question_id"] = row.question_id;
            obj["question"] = by_id[row.question_id]->question;
            obj["answer"] = row.answer;
            obj["evidence_text"] = row.evidence;
            obj["nli_input"] = "hypothesis: " + row.evidence + " premise: The answer to the question '" +
                               by_id[row.question_id]->question + "' is '" + row.answer + "'";
            out << obj.dump() << '\n';
        }
    }
    return report;
}

std::string report_to_json(const EvalReport& report) {
    json obj;
    obj["hits_rule"] = report.hits_rule;
    obj["config"] = report.config_echo;
    obj["aggregates"] = {{"mean_f1", report.mean_f1},
                         {"hits_at_1", report.hits_rate},
                         {"examples", report.rows.size()}};
    json rows = json::array();
    for (const auto& row : report.rows) rows.push_back(result_to_json(row));
    obj["rows"] = std::move(rows);
    return obj.dump(2);
}

std::vector<BeamAblationRow> ablation_beam(Engine& engine,
                                           const std::filesystem::path& dataset_path,
                                           std::vector<std::uint32_t> beams,
                                           const std::filesystem::path& out_dir) {
    std::sort(beams.begin(), beams.end());
    std::vector<BeamAblationRow> rows;
    const std::uint32_t original = engine.config().beam_size;
    for (auto beam : beams) {
        engine.config().beam_size = beam;
        RunEvalOptions options;
        options.out_dir = out_dir / ("beam_" + std::to_string(beam));
        options.resume = false;
        options.export_autoais = false;
        auto report = run_eval(engine, dataset_path, options);
        rows.push_back(BeamAblationRow{beam, report.mean_f1, report.hits_rate});
    }
    engine.config().beam_size = original;

    std::ofstream out(out_dir / "beam_ablation.json");
    json table = json::array();
    for (const auto& row : rows) {
        table.push_back({{"beam", row.beam}, {"f1", row.mean_f1}, {"hits_at_1", row.hits_rate}});
    }
    out << table.dump(2) << '\n';
    return rows;
}

std::vector<InterleaveAblationRow> ablation_interleave(Engine& keyword_engine,
                                                       Engine& plain_engine,
                                                       const std::filesystem::path& dataset_path,
                                                       const std::filesystem::path& out_dir) {
    struct Cell {
        Engine* engine;
        bool keywords;
        bool adaptive;
        const char* tag;
    };
    const Cell cells[] = {
        {&plain_engine, false, false, "plain_fixed"},
        {&keyword_engine, true, false, "keywords_fixed"},
        {&keyword_engine, true, true, "keywords_adaptive"},
    };
    std::vector<InterleaveAblationRow> rows;
    for (const auto& cell : cells) {
        const bool original = cell.engine->config().adaptive_beam;
        cell.engine->config().adaptive_beam = cell.adaptive;
        RunEvalOptions options;
        options.out_dir = out_dir / cell.tag;
        options.resume = false;
        options.export_autoais = false;
        auto report = run_eval(*cell.engine, dataset_path, options);
        rows.push_back(
            InterleaveAblationRow{cell.keywords, cell.adaptive, report.mean_f1, report.hits_rate});
        cell.engine->config().adaptive_beam = original;
    }

    std::ofstream out(out_dir / "interleave_ablation.json");
    json table = json::array();
    for (const auto& row : rows) {
        table.push_back({{"keywords", row.keywords},
                         {"adaptive", row.adaptive},
                         {"f1", row.mean_f1},
                         {"hits_at_1", row.hits_rate}});
    }
    out << table.dump(2) << '\n';
    return rows;
}

}  // namespace riches

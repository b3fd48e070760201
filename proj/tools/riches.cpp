// Command-line driver: build retrieval indexes, decode answers under corpus
// constraints, inspect continuations, and run evaluations/ablations.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "riches/engine.hpp"
#include "riches/eval.hpp"
#include "riches/remote_lm.hpp"

namespace {

using namespace riches;

struct EngineOptions {
    std::string index_stem;
    std::string backend_spec = "uniform";
    std::string ngram_train;
    std::string template_path;
    std::string corpus_path;
    std::string corpus_format = "documents";
    std::uint64_t seed = 0;
    DecodeConfig decode;
    std::uint32_t min_substring_len_flag = 0;  // 0 = take the sidecar value
};

CorpusFormat parse_format(const std::string& name) {
    if (name == "documents") return CorpusFormat::Documents;
    if (name == "propositions") return CorpusFormat::Propositions;
    if (name == "pretokenized") return CorpusFormat::Pretokenized;
    throw UsageError("unknown corpus format: " + name);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::shared_ptr<LmBackend> make_backend(const EngineOptions& options, const Vocab& vocab) {
    const std::string& spec = options.backend_spec;
    if (spec == "uniform") {
        return std::make_shared<UniformLm>(vocab.size(), vocab.fingerprint());
    }
    if (spec.rfind("ngram", 0) == 0) {
        int order = 2;
        if (auto colon = spec.find(':'); colon != std::string::npos) {
            order = std::stoi(spec.substr(colon + 1));
        }
        if (options.ngram_train.empty()) {
            throw UsageError("backend ngram requires --ngram-train FILE (one stream per line)");
        }
        std::ifstream in(options.ngram_train);
        if (!in) throw DataError("cannot open training file: " + options.ngram_train);
        std::vector<TokenSequence> streams;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            TokenSequence tokens = vocab.encode_markup(line);
            tokens.push_back(kEos);
            streams.push_back(std::move(tokens));
        }
        return std::make_shared<NGramLm>(
            train_ngram(streams, order, vocab.size(), vocab.fingerprint()));
    }
    if (spec.rfind("remote", 0) == 0) {
        std::string url;
        if (auto colon = spec.find(':'); colon != std::string::npos) {
            url = spec.substr(colon + 1);
        }
        if (url.empty()) {
            if (const char* env = std::getenv("RICHES_REMOTE_URL")) url = env;
        }
        if (url.empty()) {
            throw UsageError("backend remote needs remote:URL or RICHES_REMOTE_URL");
        }
        return std::make_shared<RemoteLm>(url, vocab.size(), vocab.fingerprint());
    }
    throw UsageError("unknown backend: " + spec + " (uniform | ngram:K | remote:URL)");
}

Engine make_engine(EngineOptions& options) {
    if (options.index_stem.empty()) throw UsageError("--index is required");
    IndexBundle bundle = IndexBundle::load(options.index_stem);
    auto backend = make_backend(options, bundle.vocab);
    std::string prompt_template = "{question}";
    if (!options.template_path.empty()) {
        prompt_template = read_text_file(options.template_path);
    }
    options.decode.min_substring_len = options.min_substring_len_flag != 0
                                           ? options.min_substring_len_flag
                                           : bundle.keys.min_substring_len();
    Engine engine(std::move(bundle), backend, options.decode, prompt_template);
    if (!options.corpus_path.empty()) {
        engine.attach_corpus(load_corpus(options.corpus_path, parse_format(options.corpus_format)));
    }
    engine.set_config_note("backend=" + options.backend_spec +
                           " seed=" + std::to_string(options.seed));
    return engine;
}

void add_engine_flags(CLI::App* cmd, EngineOptions& options) {
    cmd->add_option("--index", options.index_stem, "index bundle stem (from build-index)");
    cmd->add_option("--backend", options.backend_spec, "uniform | ngram:K | remote:URL");
    cmd->add_option("--ngram-train", options.ngram_train,
                    "training streams for the ngram backend, one per line");
    cmd->add_option("--template", options.template_path,
                    "prompt template file with a {question} placeholder");
    cmd->add_option("--corpus", options.corpus_path,
                    "corpus JSONL for TF-IDF evidence expansion (title indexes)");
    cmd->add_option("--corpus-format", options.corpus_format, "documents | propositions");
    cmd->add_option("--beam", options.decode.beam_size, "beam size");
    cmd->add_flag("--adaptive,!--no-adaptive", options.decode.adaptive_beam,
                  "greedy expansion for unconstrained hypotheses");
    cmd->add_option("--max-steps", options.decode.max_steps, "decode step budget");
    cmd->add_option("--max-key-tokens", options.decode.max_key_tokens,
                    "cap on constrained span length");
    cmd->add_option("--min-substring-len", options.min_substring_len_flag,
                    "close floor for paragraph indexes (0 = sidecar value)");
    cmd->add_flag("--no-repeat-keys", options.decode.no_repeat_keys,
                  "mask continuations that resolve only to already-emitted keys");
    cmd->add_option("--locate-limit", options.decode.locate_limit,
                    "occurrences resolved per span");
    cmd->add_option("--eos-token", options.decode.eos_token, "id that finishes a hypothesis");
    cmd->add_option("--seed", options.seed, "rng seed, echoed into reports");
}

int cmd_build_index(const std::string& corpus_path, const std::string& format,
                    const std::string& strategy, const std::string& scheme,
                    std::uint32_t min_substring_len, std::uint32_t sample_rate,
                    const std::string& out_stem, std::size_t vocab_size) {
    DocumentSet docs = load_corpus(corpus_path, parse_format(format));
    KeyExtractionOptions options;
    options.min_substring_len = min_substring_len;
    IndexBundle bundle = build_index_bundle(docs, key_strategy_from_string(strategy),
                                            vocab_scheme_from_string(scheme), options, sample_rate,
                                            vocab_size);
    bundle.save(out_stem);
    std::cout << "indexed keys=" << bundle.keys.size() << " tokens=" << bundle.index.text_length()
              << " vocab=" << bundle.vocab.size() << " out=" << out_stem << "\n";
    return 0;
}

int cmd_generate(EngineOptions& options, const std::string& question,
                 const std::string& trace_path, const std::string& out_path) {
    Engine engine = make_engine(options);
    DecodeResult result = engine.answer(question, !trace_path.empty());
    if (!trace_path.empty()) {
        std::ofstream trace(trace_path);
        if (!trace) throw DataError("cannot write trace file: " + trace_path);
        trace << result.trace.to_jsonl();
    }
    const std::string record = generation_output_to_json(result.outputs.at(0));
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw DataError("cannot write output file: " + out_path);
        for (const auto& output : result.outputs) {
            out << generation_output_to_json(output) << '\n';
        }
    }
    std::cout << record << "\n";
    return 0;
}

int cmd_eval(EngineOptions& options, const std::string& dataset, const std::string& out_dir,
             int parallel, bool no_resume) {
    Engine engine = make_engine(options);
    RunEvalOptions run;
    run.out_dir = out_dir;
    run.parallelism = parallel;
    run.resume = !no_resume;
    EvalReport report = run_eval(engine, dataset, run);
    std::cout << "examples=" << report.rows.size() << " mean_f1=" << report.mean_f1
              << " hits_at_1=" << report.hits_rate << " out=" << out_dir << "\n";
    return 0;
}

int cmd_inspect(const std::string& index_stem, const std::string& prefix, int top) {
    if (index_stem.empty()) throw UsageError("--index is required");
    IndexBundle bundle = IndexBundle::load(index_stem);
    MatchRange range = bundle.index.root();
    for (TokenId t : bundle.vocab.encode(prefix)) {
        range = bundle.index.extend(range, t);
    }
    if (range.empty()) {
        std::cout << "no matches\n";
        return 0;
    }
    auto conts = bundle.index.continuations(range);
    std::sort(conts.begin(), conts.end(), [](const auto& a, const auto& b) {
        if (a.second.count() != b.second.count()) return a.second.count() > b.second.count();
        return a.first < b.first;
    });
    if (top > 0 && conts.size() > static_cast<std::size_t>(top)) conts.resize(top);
    std::string line;
    for (const auto& [token, sub] : conts) {
        if (!line.empty()) line += ", ";
        line += bundle.vocab.surface(token) + " (" + std::to_string(sub.count()) + ")";
    }
    std::cout << (line.empty() ? "no matches" : line) << "\n";
    return 0;
}

int cmd_ablate(EngineOptions& options, const std::string& mode, const std::string& dataset,
               const std::string& out_dir, const std::string& beams_csv,
               const std::string& plain_template) {
    if (mode == "beam") {
        Engine engine = make_engine(options);
        std::vector<std::uint32_t> beams;
        std::stringstream ss(beams_csv);
        std::string item;
        while (std::getline(ss, item, ',')) beams.push_back(std::stoul(item));
        if (beams.empty()) throw UsageError("--beams must list at least one size");
        auto rows = ablation_beam(engine, dataset, beams, out_dir);
        for (const auto& row : rows) {
            std::cout << "beam=" << row.beam << " f1=" << row.mean_f1
                      << " hits_at_1=" << row.hits_rate << "\n";
        }
        return 0;
    }
    if (mode == "interleave") {
        Engine keyword_engine = make_engine(options);
        EngineOptions plain = options;
        plain.template_path = plain_template;
        Engine plain_engine = make_engine(plain);
        auto rows = ablation_interleave(keyword_engine, plain_engine, dataset, out_dir);
        for (const auto& row : rows) {
            std::cout << "keywords=" << (row.keywords ? "on" : "off")
                      << " adaptive=" << (row.adaptive ? "on" : "off") << " f1=" << row.mean_f1
                      << " hits_at_1=" << row.hits_rate << "\n";
        }
        return 0;
    }
    throw UsageError("unknown ablation mode: " + mode + " (beam | interleave)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"corpus-constrained generation and retrieval engine"};
    app.require_subcommand(1);
    // key=value config file; keys live under a [subcommand] section and are
    // overridden by command-line flags.
    app.set_config("--config", "", "config file ([subcommand] sections, key=value)");

    // build-index
    std::string corpus_path, corpus_format = "documents", strategy = "sentence", scheme = "byte";
    std::string out_stem;
    std::uint32_t min_substring_len = 8, sample_rate = 32;
    std::size_t ext_vocab_size = 0;
    auto* build = app.add_subcommand("build-index", "tokenize a corpus and build the index bundle");
    build->add_option("--corpus", corpus_path, "corpus JSONL")->required();
    build->add_option("--format", corpus_format, "documents | propositions | pretokenized");
    build->add_option("--strategy", strategy,
                      "title | paragraph | paragraph-with-title | sentence | "
                      "sentence-with-title | proposition");
    build->add_option("--scheme", scheme, "byte | word | external");
    build->add_option("--min-substring-len", min_substring_len, "paragraph-mode close floor");
    build->add_option("--sample-rate", sample_rate, "suffix-array sample rate");
    build->add_option("--vocab-size", ext_vocab_size,
                      "external-scheme vocab size (0 = largest id + 1)");
    build->add_option("--out", out_stem, "output bundle stem")->required();

    // generate
    EngineOptions gen_options;
    std::string question, trace_path, gen_out;
    auto* generate = app.add_subcommand("generate", "answer one question");
    add_engine_flags(generate, gen_options);
    generate->add_option("--question", question, "question text")->required();
    generate->add_option("--trace", trace_path, "write the beam trace JSONL here");
    generate->add_option("--out", gen_out, "write all beam outputs JSONL here");

    // eval
    EngineOptions eval_options;
    std::string dataset, eval_out = "eval_out";
    int parallel = 1;
    bool no_resume = false;
    auto* eval = app.add_subcommand("eval", "run a QA dataset end to end");
    add_engine_flags(eval, eval_options);
    eval->add_option("--dataset", dataset, "dataset JSONL")->required();
    eval->add_option("--out", eval_out, "output directory");
    eval->add_option("--parallel", parallel, "concurrent examples");
    eval->add_flag("--no-resume", no_resume, "ignore existing per-example results");

    // inspect
    std::string inspect_stem, inspect_prefix;
    int inspect_top = 20;
    auto* inspect = app.add_subcommand("inspect", "list continuations for a prefix");
    inspect->add_option("--index", inspect_stem, "index bundle stem")->required();
    inspect->add_option("--prefix", inspect_prefix, "prefix text (empty = root)");
    inspect->add_option("--top", inspect_top, "max continuations shown");

    // ablate
    EngineOptions ablate_options;
    std::string ablate_mode = "beam", ablate_dataset, ablate_out = "ablation_out";
    std::string beams_csv = "1,5,10", plain_template;
    auto* ablate = app.add_subcommand("ablate", "desk-scale ablation runners");
    add_engine_flags(ablate, ablate_options);
    ablate->add_option("--mode", ablate_mode, "beam | interleave");
    ablate->add_option("--dataset", ablate_dataset, "dataset JSONL")->required();
    ablate->add_option("--out", ablate_out, "output directory");
    ablate->add_option("--beams", beams_csv, "comma-separated beam sizes");
    ablate->add_option("--plain-template", plain_template,
                       "template without keyword interleaving (interleave mode)");

    std::string dump_config_path;
    app.add_option("--dump-config", dump_config_path,
                   "write the effective configuration to this file and continue");

    try {
        app.parse(argc, argv);
        if (!dump_config_path.empty()) {
            std::ofstream out(dump_config_path);
            if (!out) throw DataError("cannot write config file: " + dump_config_path);
            // Only options that were actually set, minus the dump flag, so
            // the file replays the run when passed back through --config.
            std::istringstream lines(app.config_to_str(false, false));
            std::string line;
            while (std::getline(lines, line)) {
                if (line.rfind("dump-config=", 0) == 0) continue;
                out << line << '\n';
            }
        }
        if (build->parsed()) {
            return cmd_build_index(corpus_path, corpus_format, strategy, scheme,
                                   min_substring_len, sample_rate, out_stem, ext_vocab_size);
        }
        if (generate->parsed()) return cmd_generate(gen_options, question, trace_path, gen_out);
        if (eval->parsed()) return cmd_eval(eval_options, dataset, eval_out, parallel, no_resume);
        if (inspect->parsed()) return cmd_inspect(inspect_stem, inspect_prefix, inspect_top);
        if (ablate->parsed()) {
            return cmd_ablate(ablate_options, ablate_mode, ablate_dataset, ablate_out, beams_csv,
                              plain_template);
        }
        return 0;
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const UsageError& e) {
        std::cerr << "error: usage: " << e.what() << "\n";
        return 1;
    } catch (const DeadEndError& e) {
        std::cerr << "error: dead-end: " << e.what() << " partial=" << e.best_partial << "\n";
        return 3;
    } catch (const TransportError& e) {
        std::cerr << "error: transport: " << e.what() << "\n";
        return 4;
    } catch (const DataError& e) {
        std::cerr << "error: data: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: data: " << e.what() << "\n";
        return 2;
    }
}

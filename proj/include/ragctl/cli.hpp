#pragma once

// Command-line front end. Kept in a header so tests can drive it in-process.
// Exit codes: 0 success, 1 record-level failures, 2 usage/config/input error.

#include <iostream>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ragctl/harness.hpp"

namespace ragctl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRecordFailures = 1;
inline constexpr int kExitUsage = 2;

struct Options {
    // shared
    std::size_t budget = 3;
    std::size_t top_k = 3;
    std::string normalization = "squad";
    std::size_t parallelism = 1;
    std::uint64_t seed = 0;
    std::string out;

    // inputs
    std::string corpus;
    std::string dataset;
    std::string index;
    std::string predictions;
    std::string transcripts_a;
    std::string transcripts_b;
    std::string subset;
    std::string rollouts;
    std::string samples;

    // generator
    std::string backend = "replay";
    std::string replay;
    std::string teacher_backend = "replay";
    std::string teacher_replay;
    std::string endpoint = "http://127.0.0.1:8000";
    std::string model = "default";
    double temperature = 0.0;
    int max_tokens = 256;
    int timeout_s = 60;
    int max_attempts = 3;

    // planner
    std::string fallback = "append";
    std::size_t max_repairs = 1;

    // misc
    std::vector<std::size_t> budgets{3, 5, 7, 10};
    std::size_t attempts = 3;
    std::string split = "sft";
    std::string system = "ragctl";
    std::string name_a = "A";
    std::string name_b = "B";
    std::string default_dataset = "default";
    double k1 = 1.2;
    double b = 0.75;
    bool timings = false;
};

inline FallbackPolicy parse_fallback(const std::string& s) {
    if (s == "append") return FallbackPolicy::AppendFallbackMessage;
    if (s == "finalize") return FallbackPolicy::ForceFinalize;
    throw Error(ErrorCode::InvalidConfig, "unknown fallback policy '" + s + "'");
}

inline GeneratorSettings generator_settings(const Options& o, const std::string& backend,
                                            const std::string& replay) {
    GeneratorSettings g;
    g.backend = backend;
    g.replay_path = replay;
    g.remote.endpoint = o.endpoint;
    g.remote.model = o.model;
    g.remote.temperature = o.temperature;
    g.remote.max_tokens = o.max_tokens;
    g.remote.timeout = std::chrono::seconds(o.timeout_s);
    g.remote.retry.max_attempts = o.max_attempts;
    g.remote.seed = o.seed;
    return g;
}

inline RunConfig run_config(const Options& o) {
    RunConfig cfg;
    cfg.dataset_path = o.dataset;
    cfg.index_path = o.index;
    cfg.generator = generator_settings(o, o.backend, o.replay);
    cfg.planner.max_rounds = o.budget;
    cfg.planner.top_k = o.top_k;
    cfg.planner.fallback_policy = parse_fallback(o.fallback);
    cfg.planner.max_repairs = o.max_repairs;
    cfg.mode = parse_normalization(o.normalization);
    cfg.parallelism = o.parallelism;
    cfg.output_dir = o.out;
    cfg.seed = o.seed;
    cfg.record_timings = o.timings;
    cfg.system_name = o.system;
    cfg.default_dataset = o.default_dataset;
    return cfg;
}

/// Parses argv and dispatches. Diagnostics go to err, summaries to out.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
    Options o;
    CLI::App app{"Token-controlled retrieval planning, supervision and evaluation"};
    app.set_config("--config", "", "TOML/INI file; flags override file values");
    app.require_subcommand(1);

    auto shared = [&](CLI::App* sub) {
        sub->add_option("--budget", o.budget, "Retrieval budget B");
        sub->add_option("--top-k", o.top_k, "Passages per retrieval");
        sub->add_option("--normalization", o.normalization, "minimal | squad")
            ->check(CLI::IsMember({"minimal", "squad"}));
        sub->add_option("--parallelism", o.parallelism, "Worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--seed", o.seed, "Seed forwarded to sampling backends");
        sub->add_option("--out", o.out, "Output directory or file");
    };
    auto generator = [&](CLI::App* sub) {
        sub->add_option("--backend", o.backend, "replay | remote")->check(CLI::IsMember({"replay", "remote"}));
        sub->add_option("--replay", o.replay, "Replay scripts (JSONL {id, turns[], on_finalize?})");
        sub->add_option("--endpoint", o.endpoint, "Chat backend base URL");
        sub->add_option("--model", o.model, "Model name sent to the backend");
        sub->add_option("--temperature", o.temperature);
        sub->add_option("--max-tokens", o.max_tokens);
        sub->add_option("--timeout", o.timeout_s, "Request timeout in seconds");
        sub->add_option("--max-attempts", o.max_attempts, "Attempts per request including the first");
    };
    auto planner = [&](CLI::App* sub) {
        sub->add_option("--dataset", o.dataset, "QA rows (JSONL {id, question, answers[], dataset?})")->required();
        sub->add_option("--index", o.index, "Index built by 'index'; omit to disable retrieval");
        sub->add_option("--fallback", o.fallback, "append | finalize")->check(CLI::IsMember({"append", "finalize"}));
        sub->add_option("--max-repairs", o.max_repairs, "Consecutive non-progress turns tolerated");
        sub->add_option("--system", o.system, "Row label in reports");
        sub->add_option("--default-dataset", o.default_dataset, "Dataset name for rows without one");
        sub->add_flag("--timings", o.timings, "Record per-step wall time in transcripts");
    };

    auto* index = app.add_subcommand("index", "Build a BM25 index from a passage corpus");
    index->add_option("--corpus", o.corpus, "Passages (JSONL {id, title?, text})")->required();
    index->add_option("--out", o.out, "Index file to write")->required();
    index->add_option("--k1", o.k1);
    index->add_option("--b", o.b);

    auto* run_cmd = app.add_subcommand("run", "Run the planner over a dataset and score it");
    shared(run_cmd);
    generator(run_cmd);
    planner(run_cmd);

    auto* sweep = app.add_subcommand("sweep", "Repeat 'run' across retrieval budgets");
    shared(sweep);
    generator(sweep);
    planner(sweep);
    sweep->add_option("--budgets", o.budgets, "Budgets to sweep")->delimiter(',');

    auto* compare = app.add_subcommand("compare", "Score two systems on a subset of paired episodes");
    compare->add_option("--normalization", o.normalization)->check(CLI::IsMember({"minimal", "squad"}));
    compare->add_option("--out", o.out, "Output directory");
    compare->add_option("--a", o.transcripts_a, "Transcripts of system A")->required();
    compare->add_option("--b", o.transcripts_b, "Transcripts of system B")->required();
    compare->add_option("--dataset", o.dataset, "References")->required();
    compare->add_option("--subset", o.subset, "e.g. \"A>=1 && B==0\"")->required();
    compare->add_option("--name-a", o.name_a);
    compare->add_option("--name-b", o.name_b);

    auto* supervise = app.add_subcommand("supervise", "Probe, classify and export supervision samples");
    shared(supervise);
    generator(supervise);
    supervise->add_option("--dataset", o.dataset, "Questions (JSONL {id, question, answers[]})")->required();
    supervise->add_option("--index", o.index)->required();
    supervise->add_option("--attempts", o.attempts, "Parametric probes per question");
    supervise->add_option("--teacher-backend", o.teacher_backend)->check(CLI::IsMember({"replay", "remote"}));
    supervise->add_option("--teacher-replay", o.teacher_replay, "Teacher replay scripts");
    supervise->add_option("--split", o.split, "sft | rl")->check(CLI::IsMember({"sft", "rl"}));

    auto* reward = app.add_subcommand("reward", "Score rollouts against supervision samples");
    reward->add_option("--budget", o.budget, "Retrieval budget used to validate trajectories");
    reward->add_option("--rollouts", o.rollouts, "Rollouts (JSONL {id, rollout})")->required();
    reward->add_option("--samples", o.samples, "Exported supervision samples")->required();
    reward->add_option("--out", o.out, "Reward file to write")->required();

    auto* score = app.add_subcommand("score", "Score a predictions file");
    score->add_option("--normalization", o.normalization)->check(CLI::IsMember({"minimal", "squad"}));
    score->add_option("--out", o.out, "Output directory");
    score->add_option("--predictions", o.predictions, "Predictions (JSONL {id, prediction, dataset?})")->required();
    score->add_option("--dataset", o.dataset, "References")->required();
    score->add_option("--system", o.system);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (index->parsed()) {
            const auto s = cmd_index(o.corpus, o.out, Bm25Params{o.k1, o.b});
            out << "doc_count " << s.doc_count << "\navg_doc_length " << detail::fixed(s.avg_doc_length, 4)
                << "\nterm_count " << s.term_count << "\n";
            return kExitOk;
        }
        if (run_cmd->parsed()) {
            const auto r = cmd_run(run_config(o));
            out << render_report_text(r.report);
            return r.failures ? kExitRecordFailures : kExitOk;
        }
        if (sweep->parsed()) {
            const auto cells = cmd_sweep(run_config(o), o.budgets);
            out << render_sweep_table(cells);
            for (const auto& c : cells) {
                if (c.failures) return kExitRecordFailures;
            }
            return kExitOk;
        }
        if (compare->parsed()) {
            const auto c = cmd_compare(o.transcripts_a, o.transcripts_b, o.dataset, SubsetSpec::parse(o.subset),
                                       parse_normalization(o.normalization), o.out, o.name_a, o.name_b);
            out << render_compare_text(c, o.name_a, o.name_b);
            return kExitOk;
        }
        if (supervise->parsed()) {
            SuperviseConfig cfg;
            cfg.questions_path = o.dataset;
            cfg.index_path = o.index;
            cfg.probe = generator_settings(o, o.backend, o.replay);
            cfg.teacher = generator_settings(o, o.teacher_backend, o.teacher_replay);
            cfg.attempts_n = o.attempts;
            cfg.top_k = o.top_k;
            cfg.max_rounds = o.budget;
            cfg.mode = parse_normalization(o.normalization);
            cfg.split = o.split == "rl" ? DatasetSplit::Rl : DatasetSplit::Sft;
            cfg.output_dir = o.out;
            cfg.seed = o.seed;
            const auto s = cmd_supervise(cfg);
            for (const auto& [kind, n] : s.counts) out << kind << " " << n << "\n";
            for (const auto& [id, reason] : s.skipped) err << "skipped " << id << ": " << reason << "\n";
            return kExitOk;
        }
        if (reward->parsed()) {
            const auto r = cmd_reward(o.rollouts, o.samples, o.out, o.budget);
            out << "scored " << r.scored << "\nerrors " << r.errors << "\n";
            return r.errors ? kExitRecordFailures : kExitOk;
        }
        if (score->parsed()) {
            const auto r = cmd_score(o.predictions, o.dataset, parse_normalization(o.normalization), o.out, o.system);
            out << render_report_text(r);
            return kExitOk;
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}

}  // namespace ragctl::cli

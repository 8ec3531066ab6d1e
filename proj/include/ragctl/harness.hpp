#pragma once

// Command implementations behind the ragctl CLI. Each command reads its
// inputs, runs the library, writes its outputs and returns a summary; the
// CLI only parses flags and maps the summary to an exit code.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "ragctl/chat_backend.hpp"
#include "ragctl/planner.hpp"
#include "ragctl/records.hpp"
#include "ragctl/report.hpp"
#include "ragctl/retrieval_index.hpp"
#include "ragctl/reward.hpp"
#include "ragctl/supervision.hpp"

namespace ragctl {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Generators

struct GeneratorSettings {
    std::string backend = "replay";  // "replay" or "remote"
    fs::path replay_path;
    ChatBackendConfig remote;
};

/// Replay: one fresh script per question id. Remote: one shared backend.
inline GeneratorFactory make_generator_factory(const GeneratorSettings& settings,
                                               std::optional<std::uint64_t> seed = std::nullopt) {
    if (settings.backend == "replay") {
        auto scripts = std::make_shared<const std::map<std::string, ReplayScript>>(
            read_replay_scripts(settings.replay_path));
        return [scripts](const QaItem& item) -> std::shared_ptr<Generator> {
            auto it = scripts->find(item.id);
            if (it == scripts->end()) {
                throw Error(ErrorCode::ScriptExhausted, "no replay script for " + item.id);
            }
            return std::make_shared<ReplayGenerator>(it->second);
        };
    }
    if (settings.backend == "remote") {
        auto cfg = settings.remote;
        if (seed && !cfg.seed) cfg.seed = seed;
        auto backend = std::make_shared<ChatBackend>(cfg);
        return [backend](const QaItem&) -> std::shared_ptr<Generator> { return backend; };
    }
    throw Error(ErrorCode::InvalidConfig, "unknown backend '" + settings.backend + "'");
}

inline void require_exists(const fs::path& p, std::string_view what) {
    if (!fs::exists(p)) throw Error(ErrorCode::Io, std::string(what) + " not found: " + p.string());
}

// ---------------------------------------------------------------------------
// index

struct IndexSummary {
    std::size_t doc_count = 0;
    double avg_doc_length = 0.0;
    std::size_t term_count = 0;
};

inline IndexSummary cmd_index(const fs::path& corpus_path, const fs::path& out_path,
                              Bm25Params params = {}) {
    require_exists(corpus_path, "corpus");
    auto index = build_index(read_corpus(corpus_path), params);
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    index.save(out_path);
    return {index.doc_count(), index.avg_doc_length(), index.term_count()};
}

// ---------------------------------------------------------------------------
// run

struct RunConfig {
    fs::path dataset_path;
    fs::path index_path;  // empty: no retrieval available
    GeneratorSettings generator;
    PlannerConfig planner;
    NormalizationMode mode = NormalizationMode::SquadStyle;
    std::size_t parallelism = 1;
    fs::path output_dir;
    std::uint64_t seed = 0;
    bool record_timings = false;
    std::string system_name = "ragctl";
    std::string default_dataset = "default";
};

struct RunOutcome {
    std::vector<TranscriptRecord> records;
    ScoreReport report;
    std::size_t failures = 0;
};

inline void validate_run_config(const RunConfig& cfg) {
    require_exists(cfg.dataset_path, "dataset");
    if (!cfg.index_path.empty()) require_exists(cfg.index_path, "index");
    if (cfg.generator.backend == "replay") require_exists(cfg.generator.replay_path, "replay script");
    if (cfg.parallelism == 0) throw Error(ErrorCode::InvalidConfig, "parallelism must be >= 1");
    if (cfg.planner.top_k == 0) throw Error(ErrorCode::InvalidConfig, "top-k must be >= 1");
}

/// Runs a dataset through the planner with an already-loaded index. Writes
/// transcripts.jsonl, report.json and report.txt into dir when dir is set.
inline RunOutcome run_dataset(const RunConfig& cfg, const std::vector<QaItem>& items,
                              const PassageIndex* index, const fs::path& dir) {
    auto factory = make_generator_factory(cfg.generator, cfg.seed);
    const auto results = batch_run(items, cfg.planner, factory, index, cfg.parallelism);

    RunOutcome out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        out.records.push_back(make_transcript_record(items[i], results[i], cfg.mode, cfg.record_timings));
        if (!results[i].ok()) ++out.failures;
    }
    out.report = build_report(out.records, reference_map(items), cfg.mode, cfg.system_name);
    if (!dir.empty()) {
        write_text(dir / "transcripts.jsonl", transcripts_to_jsonl(out.records));
        write_text(dir / "report.json", to_json(out.report).dump(2) + "\n");
        write_text(dir / "report.txt", render_report_text(out.report));
    }
    return out;
}

inline std::optional<PassageIndex> load_optional_index(const fs::path& path) {
    if (path.empty()) return std::nullopt;
    return load_index(path);
}

inline RunOutcome cmd_run(const RunConfig& cfg) {
    validate_run_config(cfg);
    const auto items = read_dataset(cfg.dataset_path, cfg.default_dataset);
    const auto index = load_optional_index(cfg.index_path);
    return run_dataset(cfg, items, index ? &*index : nullptr, cfg.output_dir);
}

// ---------------------------------------------------------------------------
// sweep

struct SweepCell {
    std::size_t budget = 0;
    ScoreReport report;
    std::size_t failures = 0;
};

inline std::string render_sweep_table(const std::vector<SweepCell>& cells) {
    using detail::fixed;
    using detail::pad_left;
    std::vector<std::string> datasets;
    for (const auto& c : cells) {
        for (const auto& [name, stats] : c.report.retrieval_by_dataset) {
            if (std::find(datasets.begin(), datasets.end(), name) == datasets.end()) datasets.push_back(name);
        }
    }
    std::size_t w = 8;
    for (const auto& d : datasets) w = std::max(w, d.size() + 1);

    std::string out = "Avg.Count per dataset under retrieval budget B\n";
    out += pad_left("Max B", 6) + " |";
    for (const auto& d : datasets) out += pad_left(d, w);
    out += pad_left("Avg", w) + " |" + pad_left("Avg.Score", 10) + "\n";
    out += std::string(7, '-') + "+" + std::string(w * (datasets.size() + 1), '-') + "+" + std::string(10, '-') + "\n";
    for (const auto& c : cells) {
        out += pad_left(std::to_string(c.budget), 6) + " |";
        for (const auto& d : datasets) {
            std::string v = "-";
            for (const auto& [name, stats] : c.report.retrieval_by_dataset) {
                if (name == d) v = fixed(stats.mean, 2);
            }
            out += pad_left(v, w);
        }
        out += pad_left(c.report.retrieval_overall ? fixed(c.report.retrieval_overall->mean, 2) : "-", w);
        out += " |" + pad_left(c.report.avg_score ? fixed(*c.report.avg_score * 100, 1) : "-", 10) + "\n";
    }
    out += "\nRetrieval-count distribution (fraction of examples with r retrievals)\n";
    for (const auto& c : cells) {
        out += "B=" + std::to_string(c.budget) + ":";
        if (c.report.retrieval_overall) {
            for (const auto& [r, f] : c.report.retrieval_overall->distribution) {
                out += "  r=" + std::to_string(r) + " " + fixed(f, 3);
            }
        }
        out += "\n";
    }
    return out;
}

inline nlohmann::json to_json(const std::vector<SweepCell>& cells) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : cells) {
        nlohmann::json by_dataset = nlohmann::json::object();
        for (const auto& [name, stats] : c.report.retrieval_by_dataset) by_dataset[name] = to_json(stats);
        arr.push_back({{"budget", c.budget},
                       {"avg_score", c.report.avg_score ? nlohmann::json(*c.report.avg_score) : nlohmann::json()},
                       {"mean_count", c.report.retrieval_overall ? nlohmann::json(c.report.retrieval_overall->mean)
                                                                 : nlohmann::json()},
                       {"distribution", c.report.retrieval_overall ? to_json(*c.report.retrieval_overall)["distribution"]
                                                                   : nlohmann::json::object()},
                       {"by_dataset", by_dataset},
                       {"failures", c.failures}});
    }
    return {{"budgets", arr}};
}

/// One run per budget with everything else fixed; outputs land in
/// output_dir/B<b>/ plus sweep.json and sweep.txt.
inline std::vector<SweepCell> cmd_sweep(const RunConfig& cfg, const std::vector<std::size_t>& budgets) {
    if (budgets.empty()) throw Error(ErrorCode::InvalidConfig, "sweep needs at least one budget");
    validate_run_config(cfg);
    const auto items = read_dataset(cfg.dataset_path, cfg.default_dataset);
    const auto index = load_optional_index(cfg.index_path);
    std::vector<SweepCell> cells;
    for (auto b : budgets) {
        RunConfig run = cfg;
        run.planner.max_rounds = b;
        const fs::path dir = cfg.output_dir.empty() ? fs::path{} : cfg.output_dir / ("B" + std::to_string(b));
        auto outcome = run_dataset(run, items, index ? &*index : nullptr, dir);
        cells.push_back({b, std::move(outcome.report), outcome.failures});
    }
    if (!cfg.output_dir.empty()) {
        write_text(cfg.output_dir / "sweep.json", to_json(cells).dump(2) + "\n");
        write_text(cfg.output_dir / "sweep.txt", render_sweep_table(cells));
    }
    return cells;
}

// ---------------------------------------------------------------------------
// compare

/// Conjunction of comparisons on the retrieval counts of two paired systems,
/// written like "A>=1 && B==0" (',' also separates clauses).
class SubsetSpec {
public:
    struct Clause {
        char side;  // 'A' or 'B'
        std::string op;
        long value;
    };

    static SubsetSpec parse(std::string_view spec) {
        SubsetSpec out;
        out.source_.assign(spec);
        std::string s;
        for (char c : spec) {
            if (!text::is_space(c)) s.push_back(c);
        }
        s = text::replace_all(s, "&&", ",");
        std::size_t start = 0;
        while (start <= s.size()) {
            const auto end = std::min(s.find(',', start), s.size());
            const std::string clause = s.substr(start, end - start);
            if (!clause.empty()) out.clauses_.push_back(parse_clause(clause));
            start = end + 1;
        }
        if (out.clauses_.empty()) throw Error(ErrorCode::ParseError, "empty subset spec");
        return out;
    }

    bool matches(std::size_t a_count, std::size_t b_count) const {
        for (const auto& c : clauses_) {
            const long v = static_cast<long>(c.side == 'A' ? a_count : b_count);
            bool ok = false;
            if (c.op == ">=") ok = v >= c.value;
            else if (c.op == "<=") ok = v <= c.value;
            else if (c.op == "==") ok = v == c.value;
            else if (c.op == "!=") ok = v != c.value;
            else if (c.op == ">") ok = v > c.value;
            else if (c.op == "<") ok = v < c.value;
            if (!ok) return false;
        }
        return true;
    }

    const std::string& source() const { return source_; }

private:
    static Clause parse_clause(const std::string& c) {
        if (c.size() < 3 || (c[0] != 'A' && c[0] != 'B')) {
            throw Error(ErrorCode::ParseError, "bad subset clause '" + c + "'");
        }
        static const char* ops[] = {">=", "<=", "==", "!=", ">", "<"};
        for (const char* op : ops) {
            const std::string o(op);
            if (c.compare(1, o.size(), o) == 0) {
                const std::string num = c.substr(1 + o.size());
                if (num.empty() || !std::all_of(num.begin(), num.end(), ::isdigit)) {
                    throw Error(ErrorCode::ParseError, "bad count in subset clause '" + c + "'");
                }
                return {c[0], o, std::stol(num)};
            }
        }
        throw Error(ErrorCode::ParseError, "bad operator in subset clause '" + c + "'");
    }

    std::string source_;
    std::vector<Clause> clauses_;
};

struct SubsetGroup {
    std::string dataset;
    std::size_t total = 0;
    std::size_t subset = 0;
    double fraction = 0.0;
    std::optional<MetricRow> a;  // empty when the subset is empty
    std::optional<MetricRow> b;
};

struct CompareOutcome {
    std::string spec;
    std::vector<SubsetGroup> groups;  // per dataset
    SubsetGroup overall;
};

inline CompareOutcome compare_transcripts(const std::vector<TranscriptRecord>& a,
                                          const std::vector<TranscriptRecord>& b,
                                          const ReferenceMap& refs, const SubsetSpec& spec,
                                          NormalizationMode mode) {
    std::map<std::string, const TranscriptRecord*> by_id_b;
    for (const auto& r : b) by_id_b[r.id] = &r;
    std::set<std::string> ids_a;
    for (const auto& r : a) ids_a.insert(r.id);
    if (ids_a.size() != by_id_b.size() ||
        !std::all_of(ids_a.begin(), ids_a.end(), [&](const auto& id) { return by_id_b.count(id) > 0; })) {
        throw Error(ErrorCode::IdMismatch, "transcript files cover different question ids");
    }

    CompareOutcome out;
    out.spec = spec.source();
    std::vector<std::string> order;
    std::map<std::string, std::pair<std::vector<Prediction>, std::vector<Prediction>>> picked;
    std::map<std::string, std::size_t> totals;
    std::vector<Prediction> all_a, all_b;
    for (const auto& ra : a) {
        const TranscriptRecord& rb = *by_id_b.at(ra.id);
        if (!totals.count(ra.dataset)) order.push_back(ra.dataset);
        ++totals[ra.dataset];
        if (!spec.matches(ra.rounds_used, rb.rounds_used)) continue;
        picked[ra.dataset].first.push_back({ra.dataset, ra.id, ra.final_answer});
        picked[ra.dataset].second.push_back({ra.dataset, rb.id, rb.final_answer});
        all_a.push_back({"all", ra.id, ra.final_answer});
        all_b.push_back({"all", rb.id, rb.final_answer});
    }

    auto group = [&](const std::string& name, std::size_t total, const std::vector<Prediction>& pa,
                     const std::vector<Prediction>& pb) {
        SubsetGroup g;
        g.dataset = name;
        g.total = total;
        g.subset = pa.size();
        g.fraction = total ? static_cast<double>(pa.size()) / static_cast<double>(total) : 0.0;
        if (!pa.empty()) {
            g.a = score_predictions(pa, refs, mode).front();
            g.b = score_predictions(pb, refs, mode).front();
            g.a->dataset = g.b->dataset = name;
        }
        return g;
    };
    for (const auto& name : order) {
        const auto& [pa, pb] = picked[name];
        out.groups.push_back(group(name, totals[name], pa, pb));
    }
    out.overall = group("all", a.size(), all_a, all_b);
    return out;
}

inline nlohmann::json to_json(const SubsetGroup& g) {
    return {{"dataset", g.dataset},
            {"total", g.total},
            {"subset", g.subset},
            {"fraction", g.fraction},
            {"empty", g.subset == 0},
            {"a", g.a ? to_json(*g.a) : nlohmann::json()},
            {"b", g.b ? to_json(*g.b) : nlohmann::json()}};
}

inline nlohmann::json to_json(const CompareOutcome& c) {
    nlohmann::json groups = nlohmann::json::array();
    for (const auto& g : c.groups) groups.push_back(to_json(g));
    return {{"spec", c.spec}, {"groups", groups}, {"overall", to_json(c.overall)}};
}

inline std::string render_compare_text(const CompareOutcome& c, const std::string& name_a,
                                       const std::string& name_b) {
    std::vector<std::string> datasets;
    TableLine la{name_a, {}, std::nullopt}, lb{name_b, {}, std::nullopt};
    std::string fractions = "Subset:";
    for (const auto& g : c.groups) {
        datasets.push_back(g.dataset);
        la.cells.push_back(g.a);
        lb.cells.push_back(g.b);
        fractions += "  " + g.dataset + " " + detail::fixed(g.fraction * 100, 1) + "% (" +
                     std::to_string(g.subset) + "/" + std::to_string(g.total) + ")";
    }
    std::vector<MetricRow> rows_a, rows_b;
    for (const auto& g : c.groups) {
        if (g.a) rows_a.push_back(*g.a);
        if (g.b) rows_b.push_back(*g.b);
    }
    if (!rows_a.empty()) la.avg = avg_score(rows_a);
    if (!rows_b.empty()) lb.avg = avg_score(rows_b);
    return "Subset spec: " + c.spec + "\n" + fractions + "\n\n" + render_metric_table(datasets, {la, lb});
}

inline CompareOutcome cmd_compare(const fs::path& transcripts_a, const fs::path& transcripts_b,
                                  const fs::path& dataset_path, const SubsetSpec& spec,
                                  NormalizationMode mode, const fs::path& output_dir = {},
                                  const std::string& name_a = "A", const std::string& name_b = "B") {
    require_exists(transcripts_a, "transcripts A");
    require_exists(transcripts_b, "transcripts B");
    require_exists(dataset_path, "dataset");
    auto outcome = compare_transcripts(read_transcripts(transcripts_a), read_transcripts(transcripts_b),
                                       reference_map(read_dataset(dataset_path)), spec, mode);
    if (!output_dir.empty()) {
        write_text(output_dir / "compare.json", to_json(outcome).dump(2) + "\n");
        write_text(output_dir / "compare.txt", render_compare_text(outcome, name_a, name_b));
    }
    return outcome;
}

// ---------------------------------------------------------------------------
// supervise

struct SuperviseConfig {
    fs::path questions_path;
    fs::path index_path;
    GeneratorSettings probe;
    GeneratorSettings teacher;
    std::size_t attempts_n = 3;
    std::size_t top_k = 3;
    std::size_t max_rounds = 3;
    NormalizationMode mode = NormalizationMode::SquadStyle;
    DatasetSplit split = DatasetSplit::Sft;
    fs::path output_dir;
    std::uint64_t seed = 0;
};

struct SuperviseOutcome {
    std::vector<SupervisionSample> samples;
    std::map<std::string, std::size_t> counts;
    std::vector<std::pair<std::string, std::string>> skipped;  // id, reason
    std::size_t written = 0;
};

/// Probes, classifies and builds one sample. Throws on generator or teacher failure.
inline SupervisionSample forge_sample(const QaItem& item, Generator& probe, Generator* teacher,
                                      const PassageIndex& index, const SuperviseConfig& cfg) {
    auto parametric = probe_parametric(item.question, item.answers, probe, cfg.attempts_n, cfg.mode);
    auto retrieval = probe_retrieval(item.question, item.answers, probe, index, cfg.top_k, cfg.mode);
    const auto kind = classify(parametric, retrieval);
    std::optional<std::string> teacher_query;
    if (kind == SupervisionType::Gamma) {
        if (!teacher) throw Error(ErrorCode::TeacherFailure, "no teacher configured");
        const auto passages = index.search(item.question, cfg.top_k);
        const std::string partial = retrieval.attempts.empty() ? "" : retrieval.attempts.front().answer;
        teacher_query = teacher_followup_query(item.question, partial, passages, *teacher);
    }
    return build_sample(item.id, item.question, item.answers, kind, std::move(parametric),
                        std::move(retrieval), std::move(teacher_query), cfg.max_rounds);
}

inline SuperviseOutcome cmd_supervise(const SuperviseConfig& cfg) {
    require_exists(cfg.questions_path, "questions");
    require_exists(cfg.index_path, "index");
    const auto items = read_dataset(cfg.questions_path);
    const auto index = load_index(cfg.index_path);
    auto probe_factory = make_generator_factory(cfg.probe, cfg.seed);
    std::optional<GeneratorFactory> teacher_factory;
    if (!cfg.teacher.backend.empty() &&
        (cfg.teacher.backend != "replay" || !cfg.teacher.replay_path.empty())) {
        teacher_factory = make_generator_factory(cfg.teacher, cfg.seed);
    }

    SuperviseOutcome out;
    for (const auto& item : items) {
        try {
            auto probe = probe_factory(item);
            std::shared_ptr<Generator> teacher;
            if (teacher_factory) {
                try {
                    teacher = (*teacher_factory)(item);
                } catch (const Error&) {
                    // no teacher script for this id; only matters for gamma
                }
            }
            out.samples.push_back(forge_sample(item, *probe, teacher.get(), index, cfg));
        } catch (const Error& e) {
            out.skipped.emplace_back(item.id, e.what());
        }
    }
    for (auto k : kAllSupervisionTypes) out.counts[std::string(to_string(k))] = 0;
    for (const auto& s : out.samples) ++out.counts[std::string(to_string(s.kind))];

    if (!cfg.output_dir.empty()) {
        const auto path = cfg.output_dir / (std::string(to_string(cfg.split)) + ".jsonl");
        fs::create_directories(cfg.output_dir);
        out.written = export_dataset(out.samples, cfg.split, path, cfg.max_rounds);
        std::string skipped;
        for (const auto& [id, reason] : out.skipped) {
            skipped += nlohmann::json{{"id", id}, {"reason", reason}}.dump() + "\n";
        }
        write_text(cfg.output_dir / (std::string(to_string(cfg.split)) + ".skipped.jsonl"), skipped);
    }
    return out;
}

// ---------------------------------------------------------------------------
// reward

struct RewardOutcome {
    std::size_t scored = 0;
    std::size_t errors = 0;
    std::vector<nlohmann::json> records;
};

/// Rollouts are {id, rollout} lines; samples are an exported dataset. Bad
/// lines produce an error record and the run continues.
inline RewardOutcome cmd_reward(const fs::path& rollouts_path, const fs::path& samples_path,
                                const fs::path& out_path, std::size_t max_rounds = 3,
                                const RewardConfig& reward_cfg = {}) {
    require_exists(rollouts_path, "rollouts");
    require_exists(samples_path, "samples");
    std::map<std::string, SupervisionSample> samples;
    for (const auto& j : read_jsonl_strict(samples_path)) {
        try {
            auto s = sample_from_json(j);
            samples.emplace(s.id, std::move(s));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::ParseError, samples_path.string() + ": " + e.what());
        }
    }

    RewardOutcome out;
    for (const auto& line : read_jsonl(rollouts_path)) {
        nlohmann::json rec;
        rec["line"] = line.line_no;
        try {
            if (!line.value) throw Error(ErrorCode::ParseError, line.error);
            const auto& j = *line.value;
            if (!j.contains("id") || !j.contains("rollout") || !j["rollout"].is_string()) {
                throw Error(ErrorCode::ParseError, "line " + std::to_string(line.line_no) +
                                                       ": expected {id, rollout}");
            }
            const std::string id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
            rec["id"] = id;
            auto it = samples.find(id);
            if (it == samples.end()) throw Error(ErrorCode::IdMismatch, "no sample for rollout " + id);
            const auto r = total_reward(parse_trajectory(j["rollout"].get<std::string>()), it->second,
                                        max_rounds, reward_cfg);
            rec["r_ans"] = r.r_ans;
            rec["r_ctrl"] = r.r_ctrl;
            rec["R"] = r.total;
            ++out.scored;
        } catch (const Error& e) {
            rec["error"] = e.what();
            ++out.errors;
        }
        out.records.push_back(std::move(rec));
    }
    std::string body;
    for (const auto& r : out.records) body += r.dump() + "\n";
    write_text(out_path, body);
    return out;
}

// ---------------------------------------------------------------------------
// score

/// Scores a predictions file {id, prediction} against the dataset references.
inline ScoreReport cmd_score(const fs::path& predictions_path, const fs::path& dataset_path,
                             NormalizationMode mode, const fs::path& output_dir = {},
                             const std::string& system_name = "ragctl") {
    require_exists(predictions_path, "predictions");
    require_exists(dataset_path, "dataset");
    const auto items = read_dataset(dataset_path);
    std::map<std::string, std::string> dataset_of;
    for (const auto& q : items) dataset_of[q.id] = q.dataset;
    std::vector<Prediction> preds;
    for (const auto& j : read_jsonl_strict(predictions_path)) {
        try {
            const std::string id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
            auto it = dataset_of.find(id);
            if (it == dataset_of.end()) throw Error(ErrorCode::IdMismatch, "unknown prediction id " + id);
            preds.push_back({j.value("dataset", it->second), id, j.at("prediction").get<std::string>()});
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::ParseError, predictions_path.string() + ": " + e.what());
        }
    }
    ScoreReport report;
    report.system = system_name;
    report.mode = mode;
    report.episodes = preds.size();
    report.rows = score_predictions(preds, reference_map(items), mode);
    if (!report.rows.empty()) report.avg_score = avg_score(report.rows);
    if (!output_dir.empty()) {
        write_text(output_dir / "score.json", to_json(report).dump(2) + "\n");
        write_text(output_dir / "score.txt", render_report_text(report));
    }
    return report;
}

}  // namespace ragctl

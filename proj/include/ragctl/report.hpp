#pragma once

// Score reports: per-dataset EM / ROUGE / F1 rows, Avg.Score, retrieval
// counts and answer presence, as JSON and as an aligned text table.

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ragctl/metrics.hpp"
#include "ragctl/records.hpp"

namespace ragctl {

struct ScoreReport {
    std::string system = "ragctl";
    NormalizationMode mode = NormalizationMode::SquadStyle;
    std::vector<MetricRow> rows;
    std::optional<double> avg_score;
    std::vector<std::pair<std::string, RetrievalStats>> retrieval_by_dataset;
    std::optional<RetrievalStats> retrieval_overall;
    std::map<std::size_t, double> presence_at_k;
    std::size_t episodes = 0;
    std::size_t failures = 0;
};

using ReferenceMap = std::map<std::string, std::vector<std::string>>;

inline ReferenceMap reference_map(const std::vector<QaItem>& items) {
    ReferenceMap refs;
    for (const auto& q : items) refs[q.id] = q.answers;
    return refs;
}

inline const std::vector<std::string>& references_for(const ReferenceMap& refs, const std::string& id) {
    auto it = refs.find(id);
    if (it == refs.end()) throw Error(ErrorCode::IdMismatch, "no references for question " + id);
    if (it->second.empty()) throw Error(ErrorCode::EmptyReferences, "question " + id);
    return it->second;
}

/// Scores a set of predictions grouped by dataset (first-appearance order).
/// Each entry is (dataset, id, prediction).
struct Prediction {
    std::string dataset;
    std::string id;
    std::string text;
};

inline std::vector<MetricRow> score_predictions(const std::vector<Prediction>& preds,
                                                const ReferenceMap& refs, NormalizationMode mode) {
    std::vector<MetricRow> rows;
    std::map<std::string, std::size_t> slot;
    for (const auto& p : preds) {
        auto [it, inserted] = slot.try_emplace(p.dataset, rows.size());
        if (inserted) rows.push_back(MetricRow{p.dataset});
        MetricRow& row = rows[it->second];
        const auto& r = references_for(refs, p.id);
        row.em += exact_match(p.text, r, mode);
        row.cover_em += cover_em(p.text, r, mode);
        row.f1 += token_f1(p.text, r, mode);
        row.rouge_avg += rouge(p.text, r, mode).avg;
        ++row.count;
    }
    for (auto& row : rows) {
        const double n = static_cast<double>(row.count);
        row.em /= n;
        row.cover_em /= n;
        row.f1 /= n;
        row.rouge_avg /= n;
    }
    return rows;
}

/// Failed episodes count as empty predictions.
inline ScoreReport build_report(const std::vector<TranscriptRecord>& records, const ReferenceMap& refs,
                                NormalizationMode mode, std::string system = "ragctl") {
    ScoreReport report;
    report.system = std::move(system);
    report.mode = mode;
    report.episodes = records.size();

    std::vector<Prediction> preds;
    std::vector<std::string> order;
    std::map<std::string, std::vector<std::size_t>> counts_by_dataset;
    std::vector<std::size_t> all_counts;
    std::map<std::size_t, double> presence_sum;
    for (const auto& r : records) {
        preds.push_back({r.dataset, r.id, r.final_answer});
        if (!counts_by_dataset.count(r.dataset)) order.push_back(r.dataset);
        auto& counts = counts_by_dataset[r.dataset];
        if (r.failed()) {
            ++report.failures;
            continue;
        }
        counts.push_back(r.rounds_used);
        all_counts.push_back(r.rounds_used);
        for (const auto& [k, v] : r.presence) presence_sum[k] += v;
    }
    report.rows = score_predictions(preds, refs, mode);
    if (!report.rows.empty()) report.avg_score = avg_score(report.rows);
    for (const auto& name : order) {
        const auto& counts = counts_by_dataset[name];
        if (!counts.empty()) report.retrieval_by_dataset.emplace_back(name, retrieval_stats_from_counts(counts));
    }
    if (!all_counts.empty()) {
        report.retrieval_overall = retrieval_stats_from_counts(all_counts);
        for (const auto& [k, sum] : presence_sum) {
            report.presence_at_k[k] = sum / static_cast<double>(all_counts.size());
        }
    }
    return report;
}

inline nlohmann::json to_json(const RetrievalStats& s) {
    nlohmann::json dist = nlohmann::json::object();
    for (const auto& [r, f] : s.distribution) dist[std::to_string(r)] = f;
    return {{"mean", s.mean}, {"distribution", dist}};
}

inline nlohmann::json to_json(const MetricRow& row) {
    return {{"dataset", row.dataset}, {"em", row.em},   {"rouge", row.rouge_avg},
            {"f1", row.f1},           {"cover_em", row.cover_em}, {"count", row.count}};
}

inline nlohmann::json to_json(const ScoreReport& r) {
    nlohmann::json j;
    j["system"] = r.system;
    j["normalization"] = std::string(to_string(r.mode));
    j["episodes"] = r.episodes;
    j["failures"] = r.failures;
    auto& rows = j["rows"] = nlohmann::json::array();
    for (const auto& row : r.rows) rows.push_back(to_json(row));
    j["avg_score"] = r.avg_score ? nlohmann::json(*r.avg_score) : nlohmann::json();
    nlohmann::json by_dataset = nlohmann::json::object();
    for (const auto& [name, stats] : r.retrieval_by_dataset) by_dataset[name] = to_json(stats);
    j["retrieval"] = {{"by_dataset", by_dataset},
                      {"overall", r.retrieval_overall ? to_json(*r.retrieval_overall) : nlohmann::json()}};
    nlohmann::json presence = nlohmann::json::object();
    for (const auto& [k, v] : r.presence_at_k) presence[std::to_string(k)] = v;
    j["answer_presence"] = presence;
    return j;
}

inline RetrievalStats retrieval_stats(std::span<const Episode> episodes) {
    std::vector<std::size_t> counts;
    counts.reserve(episodes.size());
    for (const auto& ep : episodes) counts.push_back(ep.state.rounds_used);
    return retrieval_stats_from_counts(counts);
}

// ---------------------------------------------------------------------------
// Text rendering

namespace detail {

inline std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

inline std::string pad_left(std::string s, std::size_t width) {
    if (s.size() < width) s.insert(0, width - s.size(), ' ');
    return s;
}

inline std::string pad_right(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

}  // namespace detail

struct TableLine {
    std::string label;
    std::vector<std::optional<MetricRow>> cells;  // aligned with the dataset columns
    std::optional<double> avg;
};

/// One three-column group (EM, ROUGE, F1) per dataset, values x100, then Avg.Score.
inline std::string render_metric_table(const std::vector<std::string>& datasets,
                                       const std::vector<TableLine>& lines) {
    using detail::fixed;
    using detail::pad_left;
    using detail::pad_right;
    std::size_t label_w = 6;
    for (const auto& l : lines) label_w = std::max(label_w, l.label.size());
    const std::size_t group_w = 21;  // "    EM  ROUGE     F1"

    std::string out = pad_right("Method", label_w) + " |";
    for (const auto& d : datasets) out += " " + pad_right(d, group_w) + " |";
    out += " Avg.Score\n";
    out += pad_right("", label_w) + " |";
    for (std::size_t i = 0; i < datasets.size(); ++i) {
        out += " " + pad_left("EM", 6) + pad_left("ROUGE", 7) + pad_left("F1", 7) + pad_left("", group_w - 20) + " |";
    }
    out += std::string(10, ' ') + "\n";
    out += std::string(label_w + 1, '-') + "+";
    for (std::size_t i = 0; i < datasets.size(); ++i) out += std::string(group_w + 2, '-') + "+";
    out += std::string(10, '-') + "\n";
    for (const auto& l : lines) {
        out += pad_right(l.label, label_w) + " |";
        for (const auto& cell : l.cells) {
            if (cell) {
                out += " " + pad_left(fixed(cell->em * 100, 1), 6) +
                       pad_left(fixed(cell->rouge_avg * 100, 1), 7) +
                       pad_left(fixed(cell->f1 * 100, 1), 7) + pad_left("", group_w - 20) + " |";
            } else {
                out += " " + pad_left("-", 6) + pad_left("-", 7) + pad_left("-", 7) +
                       pad_left("", group_w - 20) + " |";
            }
        }
        out += " " + pad_left(l.avg ? fixed(*l.avg * 100, 1) : "-", 9) + "\n";
    }
    return out;
}

inline std::string render_report_text(const ScoreReport& r) {
    using detail::fixed;
    std::string out = "Normalization: " + std::string(to_string(r.mode)) + "\n";
    out += "Episodes: " + std::to_string(r.episodes) + " (failures: " + std::to_string(r.failures) + ")\n\n";
    if (r.rows.empty()) return out + "(no episodes)\n";

    std::vector<std::string> datasets;
    TableLine line{r.system, {}, r.avg_score};
    for (const auto& row : r.rows) {
        datasets.push_back(row.dataset);
        line.cells.emplace_back(row);
    }
    out += render_metric_table(datasets, {line});

    out += "\nCoverEM:";
    for (const auto& row : r.rows) out += "  " + row.dataset + " " + fixed(row.cover_em * 100, 1);
    out += "\n";

    if (r.retrieval_overall) {
        out += "\nAvg.Count:";
        for (const auto& [name, stats] : r.retrieval_by_dataset) out += "  " + name + " " + fixed(stats.mean, 2);
        out += "  Avg " + fixed(r.retrieval_overall->mean, 2) + "\n";
        out += "Retrieval distribution:";
        for (const auto& [count, frac] : r.retrieval_overall->distribution) {
            out += "  r=" + std::to_string(count) + " " + fixed(frac * 100, 1) + "%";
        }
        out += "\n";
        out += "Answer presence:";
        for (const auto& [k, v] : r.presence_at_k) out += "  @" + std::to_string(k) + " " + fixed(v * 100, 1) + "%";
        out += "\n";
    }
    return out;
}

}  // namespace ragctl

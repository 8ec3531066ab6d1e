#pragma once

// Open-domain QA metrics: EM, CoverEM, token F1, ROUGE-1/2/L, sentence BLEU,
// Avg.Score aggregation, answer presence and retrieval-count statistics.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ragctl/error.hpp"
#include "ragctl/text.hpp"

namespace ragctl {

enum class NormalizationMode {
    Minimal,     // lowercase, collapse whitespace
    SquadStyle,    // Minimal plus punctuation and article removal
};

constexpr std::string_view to_string(NormalizationMode m) {
    return m == NormalizationMode::Minimal ? "minimal" : "squad";
}

inline NormalizationMode parse_normalization(std::string_view s) {
    if (s == "minimal") return NormalizationMode::Minimal;
    if (s == "squad") return NormalizationMode::SquadStyle;
    throw Error(ErrorCode::InvalidConfig, "unknown normalization mode '" + std::string(s) + "'");
}

inline std::string normalize(std::string_view s, NormalizationMode mode) {
    std::string lowered = text::lower(s);
    if (mode == NormalizationMode::SquadStyle) {
        std::string no_punct;
        no_punct.reserve(lowered.size());
        for (char c : lowered) {
            const auto u = static_cast<unsigned char>(c);
            const bool punct = u < 0x80 && std::ispunct(u);
            if (!punct) no_punct.push_back(c);
        }
        std::vector<std::string> kept;
        for (auto& w : text::split_whitespace(no_punct)) {
            if (w != "a" && w != "an" && w != "the") kept.push_back(std::move(w));
        }
        return text::join(kept, " ");
    }
    return text::join(text::split_whitespace(lowered), " ");
}

inline std::vector<std::string> normalized_tokens(std::string_view s, NormalizationMode mode) {
    return text::split_whitespace(normalize(s, mode));
}

namespace detail {

inline void require_refs(std::span<const std::string> refs) {
    if (refs.empty()) throw Error(ErrorCode::EmptyReferences, "at least one reference required");
}

inline std::size_t multiset_overlap(std::vector<std::string> a, std::vector<std::string> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0, common = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) {
            ++common, ++i, ++j;
        } else if (a[i] < b[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    return common;
}

inline std::vector<std::string> ngrams(const std::vector<std::string>& tokens, std::size_t n) {
    std::vector<std::string> out;
    if (tokens.size() < n) return out;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string g = tokens[i];
        for (std::size_t j = 1; j < n; ++j) {
            g += '\x1f';
            g += tokens[i + j];
        }
        out.push_back(std::move(g));
    }
    return out;
}

inline double f_measure(double overlap, double pred_len, double ref_len) {
    if (overlap <= 0.0 || pred_len <= 0.0 || ref_len <= 0.0) return 0.0;
    const double p = overlap / pred_len;
    const double r = overlap / ref_len;
    return 2.0 * p * r / (p + r);
}

inline std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

}  // namespace detail

inline int exact_match(std::string_view pred, std::span<const std::string> refs,
                       NormalizationMode mode = NormalizationMode::SquadStyle) {
    detail::require_refs(refs);
    const auto p = normalize(pred, mode);
    for (const auto& r : refs) {
        if (p == normalize(r, mode)) return 1;
    }
    return 0;
}

/// 1 iff the normalized prediction contains some normalized reference as a
/// contiguous substring. References that normalize to "" never match.
inline int cover_em(std::string_view pred, std::span<const std::string> refs,
                    NormalizationMode mode = NormalizationMode::SquadStyle) {
    detail::require_refs(refs);
    const auto p = normalize(pred, mode);
    for (const auto& r : refs) {
        const auto nr = normalize(r, mode);
        if (nr.empty()) {
            if (p.empty()) return 1;  // keeps EM <= CoverEM when both are empty
            continue;
        }
        if (p.find(nr) != std::string::npos) return 1;
    }
    return 0;
}

inline double token_f1(std::string_view pred, std::span<const std::string> refs,
                       NormalizationMode mode = NormalizationMode::SquadStyle) {
    detail::require_refs(refs);
    const auto p = normalized_tokens(pred, mode);
    double best = 0.0;
    for (const auto& r : refs) {
        const auto rt = normalized_tokens(r, mode);
        double f;
        if (p.empty() && rt.empty()) {
            f = 1.0;
        } else if (p.empty() || rt.empty()) {
            f = 0.0;
        } else {
            f = detail::f_measure(static_cast<double>(detail::multiset_overlap(p, rt)),
                                  static_cast<double>(p.size()), static_cast<double>(rt.size()));
        }
        best = std::max(best, f);
    }
    return best;
}

struct RougeScores {
    double r1 = 0.0;
    double r2 = 0.0;
    double rl = 0.0;
    double avg = 0.0;
};

/// Max-over-references F-measures. An n-gram order with no n-grams on
/// either side scores 0.
inline RougeScores rouge(std::string_view pred, std::span<const std::string> refs,
                         NormalizationMode mode = NormalizationMode::SquadStyle) {
    detail::require_refs(refs);
    const auto p = normalized_tokens(pred, mode);
    RougeScores best;
    for (const auto& r : refs) {
        const auto rt = normalized_tokens(r, mode);
        const auto pn2 = detail::ngrams(p, 2);
        const auto rn2 = detail::ngrams(rt, 2);
        const double r1 = detail::f_measure(static_cast<double>(detail::multiset_overlap(p, rt)),
                                            static_cast<double>(p.size()),
                                            static_cast<double>(rt.size()));
        const double r2 = detail::f_measure(static_cast<double>(detail::multiset_overlap(pn2, rn2)),
                                            static_cast<double>(pn2.size()),
                                            static_cast<double>(rn2.size()));
        const double rl = detail::f_measure(static_cast<double>(detail::lcs_length(p, rt)),
                                            static_cast<double>(p.size()),
                                            static_cast<double>(rt.size()));
        best.r1 = std::max(best.r1, r1);
        best.r2 = std::max(best.r2, r2);
        best.rl = std::max(best.rl, rl);
    }
    best.avg = (best.r1 + best.r2 + best.rl) / 3.0;
    return best;
}

/// Sentence-level BLEU over lowercase whitespace tokens. The maximum n-gram
/// order is min(4, |pred|) with uniform weights; orders >= 2 use add-one
/// smoothing, unigram precision is unsmoothed.
inline double bleu(std::string_view pred, std::string_view ref) {
    const auto p = normalized_tokens(pred, NormalizationMode::Minimal);
    const auto r = normalized_tokens(ref, NormalizationMode::Minimal);
    if (p.empty()) return 0.0;
    const std::size_t max_order = std::min<std::size_t>(4, p.size());
    double log_sum = 0.0;
    for (std::size_t n = 1; n <= max_order; ++n) {
        const auto pg = detail::ngrams(p, n);
        const auto rg = detail::ngrams(r, n);
        const double matches = static_cast<double>(detail::multiset_overlap(pg, rg));
        const double total = static_cast<double>(pg.size());
        double precision;
        if (n == 1) {
            if (matches == 0.0) return 0.0;
            precision = matches / total;
        } else {
            precision = (matches + 1.0) / (total + 1.0);
        }
        log_sum += std::log(precision);
    }
    const double c = static_cast<double>(p.size());
    const double rl = static_cast<double>(r.size());
    const double bp = c > rl ? 1.0 : std::exp(1.0 - rl / c);
    return bp * std::exp(log_sum / static_cast<double>(max_order));
}

// ---------------------------------------------------------------------------
// Aggregation

struct MetricRow {
    std::string dataset;
    double em = 0.0;
    double rouge_avg = 0.0;
    double f1 = 0.0;
    double cover_em = 0.0;  // reported alongside, not part of Avg.Score
    std::size_t count = 0;
};

/// Unweighted mean over every (dataset, metric) cell: EM, ROUGE, F1.
inline double avg_score(std::span<const MetricRow> rows) {
    if (rows.empty()) throw Error(ErrorCode::EmptyRows, "avg_score needs at least one row");
    double total = 0.0;
    for (const auto& row : rows) total += row.em + row.rouge_avg + row.f1;
    return total / (3.0 * static_cast<double>(rows.size()));
}

struct RetrievalStats {
    double mean = 0.0;
    std::map<std::size_t, double> distribution;  // retrieval count -> fraction
};

inline RetrievalStats retrieval_stats_from_counts(std::span<const std::size_t> counts) {
    if (counts.empty()) throw Error(ErrorCode::EmptyInput, "no episodes");
    RetrievalStats stats;
    std::map<std::size_t, std::size_t> hist;
    double total = 0.0;
    for (auto c : counts) {
        total += static_cast<double>(c);
        ++hist[c];
    }
    const double n = static_cast<double>(counts.size());
    stats.mean = total / n;
    for (const auto& [r, k] : hist) stats.distribution[r] = static_cast<double>(k) / n;
    return stats;
}

/// 1 iff some normalized reference occurs in the normalized text.
inline int contains_answer(std::string_view passage_text, std::span<const std::string> refs,
                           NormalizationMode mode) {
    const auto hay = normalize(passage_text, mode);
    for (const auto& r : refs) {
        const auto needle = normalize(r, mode);
        if (!needle.empty() && hay.find(needle) != std::string::npos) return 1;
    }
    return 0;
}

}  // namespace ragctl

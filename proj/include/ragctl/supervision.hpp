#pragma once

// Structured supervision: probe a backbone with and without retrieval,
// classify each question into one of four answerability types, and emit the
// control-token target trajectory for that type.
//
//   Alpha  [ANSWER] gold [SOLVED]
//   Beta   [INTERMEDIARY] partial [RETRIEVE] question [ANSWER] gold [SOLVED]
//   Gamma  [INTERMEDIARY] a1 [RETRIEVE] question [INTERMEDIARY] a2 [RETRIEVE] teacher-query
//          [ANSWER] gold [SOLVED]
//   Theta  [INTERMEDIARY] covered [RETRIEVE] question [ANSWER] gold [SOLVED]

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ragctl/control_grammar.hpp"
#include "ragctl/error.hpp"
#include "ragctl/generator.hpp"
#include "ragctl/metrics.hpp"
#include "ragctl/retrieval_index.hpp"

namespace ragctl {

struct ProbeAttempt {
    std::string answer;
    int em = 0;
    int cover_em = 0;
};

struct ProbeOutcome {
    std::vector<ProbeAttempt> attempts;
    bool with_retrieval = false;
    std::vector<std::string> passages_used;
    bool empty_retrieval = false;  // retrieval probe ran with zero passages
};

enum class SupervisionType { Alpha, Beta, Gamma, Theta };

inline constexpr std::array<SupervisionType, 4> kAllSupervisionTypes = {
    SupervisionType::Alpha, SupervisionType::Beta, SupervisionType::Gamma, SupervisionType::Theta};

constexpr std::string_view to_string(SupervisionType k) {
    switch (k) {
        case SupervisionType::Alpha: return "alpha";
        case SupervisionType::Beta: return "beta";
        case SupervisionType::Gamma: return "gamma";
        case SupervisionType::Theta: return "theta";
    }
    return "";
}

inline SupervisionType parse_supervision_type(std::string_view s) {
    for (auto k : kAllSupervisionTypes) {
        if (to_string(k) == s) return k;
    }
    throw Error(ErrorCode::ParseError, "unknown supervision type '" + std::string(s) + "'");
}

struct SupervisionSample {
    std::string id;
    std::string question;
    std::vector<std::string> references;
    SupervisionType kind = SupervisionType::Alpha;
    Trajectory target;
    std::optional<std::string> teacher_query;
    ProbeOutcome parametric;
    ProbeOutcome retrieval;
};

inline constexpr std::string_view kProbeInstruction =
    "Answer the question with a short factual answer. Reply with the answer only.";

inline constexpr std::string_view kTeacherInstruction =
    "You help a question-answering system plan its next retrieval step.";

namespace detail {

/// The answer carried by a probe response: the Answer segment when the
/// backbone uses control tokens, otherwise the whole reply.
inline std::string extract_probe_answer(std::string_view reply) {
    auto t = parse_trajectory(reply);
    if (auto a = final_answer_text(t)) return *a;
    return std::string(text::trim(strip_control_tokens(reply)));
}

inline ProbeAttempt score_attempt(std::string answer, std::span<const std::string> refs,
                                  NormalizationMode mode) {
    ProbeAttempt a;
    a.em = exact_match(answer, refs, mode);
    a.cover_em = cover_em(answer, refs, mode);
    a.answer = std::move(answer);
    return a;
}

inline std::string render_passages(std::span<const RetrievedPassage> passages) {
    std::string out;
    for (std::size_t k = 0; k < passages.size(); ++k) {
        const auto& p = passages[k].passage;
        out += "[" + std::to_string(k + 1) + "] " + escape_title(p.title) + ": " +
               escape_field(p.text) + "\n";
    }
    return out;
}

inline std::string ask(Generator& gen, std::span<const ChatMessage> messages, ErrorCode on_failure) {
    try {
        return gen.complete(messages);
    } catch (const std::exception& e) {
        throw Error(on_failure, e.what());
    }
}

inline std::string clean_text(std::string_view s) {
    auto stripped = strip_control_tokens(s);
    return text::join(text::split_whitespace(stripped), " ");
}

}  // namespace detail

/// attempts_n generations without evidence, each scored for EM and CoverEM.
inline ProbeOutcome probe_parametric(std::string_view question, std::span<const std::string> refs,
                                     Generator& gen, std::size_t attempts_n,
                                     NormalizationMode mode = NormalizationMode::SquadStyle) {
    if (attempts_n == 0) throw Error(ErrorCode::InvalidConfig, "attempts_n must be >= 1");
    const std::vector<ChatMessage> messages = {
        {"system", std::string(kProbeInstruction)},
        {"user", "Question: " + detail::escape_field(question)}};
    ProbeOutcome out;
    for (std::size_t i = 0; i < attempts_n; ++i) {
        auto reply = detail::ask(gen, messages, ErrorCode::GeneratorFailure);
        out.attempts.push_back(detail::score_attempt(detail::extract_probe_answer(reply), refs, mode));
    }
    return out;
}

/// One generation with the top_k retrieved passages in context.
inline ProbeOutcome probe_retrieval(std::string_view question, std::span<const std::string> refs,
                                    Generator& gen, const PassageIndex& idx, std::size_t top_k,
                                    NormalizationMode mode = NormalizationMode::SquadStyle) {
    const auto passages = idx.search(question, top_k);
    ProbeOutcome out;
    out.with_retrieval = true;
    out.empty_retrieval = passages.empty();
    for (const auto& p : passages) out.passages_used.push_back(p.passage.id);
    std::string user = "Passages:\n" + detail::render_passages(passages) + "\nQuestion: " +
                       detail::escape_field(question);
    const std::vector<ChatMessage> messages = {{"system", std::string(kProbeInstruction)},
                                               {"user", std::move(user)}};
    auto reply = detail::ask(gen, messages, ErrorCode::GeneratorFailure);
    out.attempts.push_back(detail::score_attempt(detail::extract_probe_answer(reply), refs, mode));
    return out;
}

/// Decision order: Alpha, Beta, Gamma, then Theta for everything left.
inline SupervisionType classify(const ProbeOutcome& parametric, const ProbeOutcome& retrieval) {
    const auto& pa = parametric.attempts;
    const bool all_em = !pa.empty() && std::all_of(pa.begin(), pa.end(),
                                                   [](const ProbeAttempt& a) { return a.em == 1; });
    if (all_em) return SupervisionType::Alpha;
    const bool partial = std::any_of(pa.begin(), pa.end(), [](const ProbeAttempt& a) {
        return a.cover_em == 1 && a.em == 0;
    });
    if (partial) return SupervisionType::Beta;
    const auto& ra = retrieval.attempts;
    const bool retrieval_miss = std::all_of(ra.begin(), ra.end(), [](const ProbeAttempt& a) {
        return a.em == 0 && a.cover_em == 0;
    });
    if (retrieval_miss) return SupervisionType::Gamma;
    return SupervisionType::Theta;
}

inline std::vector<ChatMessage> teacher_messages(std::string_view question,
                                                 std::string_view intermediary,
                                                 std::span<const RetrievedPassage> passages) {
    std::string user = "Original question: " + detail::escape_field(question) + "\n" +
                       "Partial answer: " + detail::escape_field(intermediary) + "\n" +
                       "Retrieved documents:\n" + detail::render_passages(passages) + "\n" +
                       "Correct the partial answer using the documents, then write one search "
                       "query aimed at the information that is still missing. Reply with the "
                       "query only.";
    return {{"system", std::string(kTeacherInstruction)}, {"user", std::move(user)}};
}

inline std::string teacher_followup_query(std::string_view question, std::string_view intermediary,
                                          std::span<const RetrievedPassage> passages,
                                          Generator& teacher) {
    const auto messages = teacher_messages(question, intermediary, passages);
    auto reply = detail::ask(teacher, messages, ErrorCode::TeacherFailure);
    auto query = detail::clean_text(reply);
    if (query.empty()) throw Error(ErrorCode::EmptyTeacherQuery, "teacher returned no query");
    return query;
}

namespace detail {

inline std::string branch(ControlToken t, std::string_view body) {
    std::string out(surface(t));
    if (!body.empty()) {
        out += ' ';
        out += body;
    }
    return out;
}

inline std::string best_cover_answer(const ProbeOutcome& p) {
    for (const auto& a : p.attempts) {
        if (a.cover_em == 1) return a.answer;
    }
    return p.attempts.empty() ? std::string{} : p.attempts.front().answer;
}

}  // namespace detail

/// Instantiates the target trajectory for kind. Gamma needs the teacher
/// query and a budget of at least two rounds.
inline SupervisionSample build_sample(std::string id, std::string_view question,
                                      std::vector<std::string> refs, SupervisionType kind,
                                      ProbeOutcome parametric, ProbeOutcome retrieval,
                                      std::optional<std::string> teacher_query,
                                      std::size_t max_rounds = 3) {
    if (refs.empty()) throw Error(ErrorCode::EmptyReferences, "sample " + id + " has no references");
    if (classify(parametric, retrieval) != kind) {
        throw Error(ErrorCode::InconsistentKind,
                    std::string(to_string(kind)) + " disagrees with probe outcomes for " + id);
    }
    if ((kind == SupervisionType::Gamma) != teacher_query.has_value()) {
        throw Error(ErrorCode::InconsistentKind, "teacher query is required for gamma samples only");
    }

    const std::string gold = detail::clean_text(refs.front());
    const std::string q1 = detail::clean_text(question);
    const std::string answer = detail::branch(ControlToken::Answer, gold) + " " +
                               std::string(surface(ControlToken::Solved));
    auto hop = [](std::string_view partial, std::string_view query) {
        return detail::branch(ControlToken::Intermediary, partial) + " " +
               detail::branch(ControlToken::Retrieve, query) + " ";
    };

    std::string target;
    switch (kind) {
        case SupervisionType::Alpha: target = answer; break;
        case SupervisionType::Beta:
            target = hop(detail::clean_text(detail::best_cover_answer(parametric)), q1) + answer;
            break;
        case SupervisionType::Theta:
            // the intermediary precedes retrieval, so it carries parametric knowledge
            target = hop(detail::clean_text(detail::best_cover_answer(parametric)), q1) + answer;
            break;
        case SupervisionType::Gamma: {
            if (max_rounds < 2) {
                throw Error(ErrorCode::InvalidConfig, "gamma targets need a budget of two rounds");
            }
            const std::string q2 = detail::clean_text(*teacher_query);
            if (q2.empty()) throw Error(ErrorCode::EmptyTeacherQuery, "teacher query is blank");
            const std::string a1 = detail::clean_text(detail::best_cover_answer(parametric));
            const std::string a2 = detail::clean_text(detail::best_cover_answer(retrieval));
            target = hop(a1, q1) + hop(a2, q2) + answer;
            teacher_query = q2;
            break;
        }
    }

    SupervisionSample s;
    s.id = std::move(id);
    s.question.assign(question);
    s.references = std::move(refs);
    s.kind = kind;
    s.target = parse_trajectory(target);
    s.teacher_query = std::move(teacher_query);
    s.parametric = std::move(parametric);
    s.retrieval = std::move(retrieval);
    return s;
}

/// Checks a target against the grammar and its kind's control-sequence shape.
inline bool target_matches_kind(const SupervisionSample& s, std::size_t max_rounds) {
    if (!validate(s.target, max_rounds).valid) return false;
    const auto seq = control_string(control_sequence(s.target));
    const auto retrieves = std::count(seq.begin(), seq.end(), 'R');
    switch (s.kind) {
        case SupervisionType::Alpha: return seq == "AS";
        case SupervisionType::Beta: return seq.rfind("IR", 0) == 0;
        case SupervisionType::Gamma: return retrieves >= 2 && seq.size() >= 2 && seq.substr(seq.size() - 2) == "AS";
        case SupervisionType::Theta: return seq == "IRAS";
    }
    return false;
}

// ---------------------------------------------------------------------------
// Export

enum class DatasetSplit { Sft, Rl };

constexpr std::string_view to_string(DatasetSplit s) { return s == DatasetSplit::Sft ? "sft" : "rl"; }

inline nlohmann::json to_json(const ProbeOutcome& p) {
    nlohmann::json attempts = nlohmann::json::array();
    for (const auto& a : p.attempts) {
        attempts.push_back({{"answer", a.answer}, {"em", a.em}, {"cover_em", a.cover_em}});
    }
    return {{"attempts", attempts},
            {"with_retrieval", p.with_retrieval},
            {"passages_used", p.passages_used},
            {"empty_retrieval", p.empty_retrieval}};
}

inline ProbeOutcome probe_from_json(const nlohmann::json& j) {
    ProbeOutcome p;
    for (const auto& a : j.at("attempts")) {
        p.attempts.push_back({a.at("answer").get<std::string>(), a.at("em").get<int>(),
                              a.at("cover_em").get<int>()});
    }
    p.with_retrieval = j.value("with_retrieval", false);
    p.passages_used = j.value("passages_used", std::vector<std::string>{});
    p.empty_retrieval = j.value("empty_retrieval", false);
    return p;
}

inline nlohmann::json to_json(const SupervisionSample& s) {
    nlohmann::json j;
    j["id"] = s.id;
    j["question"] = s.question;
    j["kind"] = std::string(to_string(s.kind));
    j["target"] = render(s.target);
    j["control_sequence"] = control_string(control_sequence(s.target));
    j["references"] = s.references;
    j["teacher_query"] = s.teacher_query ? nlohmann::json(*s.teacher_query) : nlohmann::json();
    j["provenance"] = {{"parametric", to_json(s.parametric)}, {"retrieval", to_json(s.retrieval)}};
    return j;
}

inline SupervisionSample sample_from_json(const nlohmann::json& j) {
    SupervisionSample s;
    s.id = j.at("id").get<std::string>();
    s.question = j.at("question").get<std::string>();
    s.kind = parse_supervision_type(j.at("kind").get<std::string>());
    s.target = parse_trajectory(j.at("target").get<std::string>());
    s.references = j.at("references").get<std::vector<std::string>>();
    if (auto it = j.find("teacher_query"); it != j.end() && it->is_string()) {
        s.teacher_query = it->get<std::string>();
    }
    if (auto it = j.find("provenance"); it != j.end()) {
        s.parametric = probe_from_json(it->at("parametric"));
        s.retrieval = probe_from_json(it->at("retrieval"));
    }
    return s;
}

inline std::filesystem::path summary_path(const std::filesystem::path& dataset_path) {
    auto p = dataset_path;
    p.replace_extension(".summary.json");
    return p;
}

/// Writes samples sorted by id as JSON lines, plus a per-kind summary next
/// to it. Returns the number of records written.
inline std::size_t export_dataset(std::vector<SupervisionSample> samples, DatasetSplit split,
                                  const std::filesystem::path& path, std::size_t max_rounds = 3) {
    std::sort(samples.begin(), samples.end(),
              [](const SupervisionSample& a, const SupervisionSample& b) { return a.id < b.id; });
    std::map<std::string, std::size_t> counts;
    for (auto k : kAllSupervisionTypes) counts[std::string(to_string(k))] = 0;
    for (const auto& s : samples) {
        if (!target_matches_kind(s, max_rounds)) {
            throw Error(ErrorCode::InvalidTarget, "target for " + s.id + " breaks its kind's shape");
        }
        ++counts[std::string(to_string(s.kind))];
    }

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    for (const auto& s : samples) out << to_json(s).dump() << '\n';
    if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());

    nlohmann::json summary = {{"split", std::string(to_string(split))},
                              {"total", samples.size()},
                              {"counts", counts}};
    std::ofstream side(summary_path(path), std::ios::trunc);
    if (!side) throw Error(ErrorCode::Io, "cannot write " + summary_path(path).string());
    side << summary.dump(2) << '\n';
    return samples.size();
}

}  // namespace ragctl

#pragma once

// Line-delimited JSON records: corpora, QA datasets, replay scripts and
// episode transcripts.

#include <algorithm>
#include <array>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ragctl/metrics.hpp"

#include <json.hpp>

#include "ragctl/error.hpp"
#include "ragctl/generator.hpp"
#include "ragctl/planner.hpp"
#include "ragctl/retrieval_index.hpp"

namespace ragctl {

using nlohmann::json;

struct JsonLine {
    std::size_t line_no = 0;
    std::optional<json> value;
    std::string error;
};

/// Reads a JSON-lines file. Blank lines are skipped; unparsable lines are
/// returned with an error message instead of a value.
inline std::vector<JsonLine> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::vector<JsonLine> out;
    std::string line;
    for (std::size_t no = 1; std::getline(in, line); ++no) {
        if (text::is_blank(line)) continue;
        JsonLine rec;
        rec.line_no = no;
        auto j = json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            rec.error = "line " + std::to_string(no) + ": invalid JSON";
        } else {
            rec.value = std::move(j);
        }
        out.push_back(std::move(rec));
    }
    return out;
}

/// Like read_jsonl but any bad line is fatal.
inline std::vector<json> read_jsonl_strict(const std::filesystem::path& path) {
    std::vector<json> out;
    for (auto& rec : read_jsonl(path)) {
        if (!rec.value) throw Error(ErrorCode::ParseError, path.string() + " " + rec.error);
        out.push_back(std::move(*rec.value));
    }
    return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << content;
    if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------------------
// Inputs

inline std::vector<Passage> read_corpus(const std::filesystem::path& path) {
    std::vector<Passage> corpus;
    for (const auto& j : read_jsonl_strict(path)) {
        try {
            Passage p;
            p.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
            p.title = j.value("title", std::string{});
            p.text = j.at("text").get<std::string>();
            corpus.push_back(std::move(p));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
        }
    }
    return corpus;
}

/// Dataset rows {id, question, answers[], dataset?}. Rows without a dataset
/// field take default_dataset.
inline std::vector<QaItem> read_dataset(const std::filesystem::path& path,
                                        const std::string& default_dataset = "default") {
    std::vector<QaItem> items;
    for (const auto& j : read_jsonl_strict(path)) {
        try {
            QaItem q;
            q.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
            q.question = j.at("question").get<std::string>();
            q.answers = j.at("answers").get<std::vector<std::string>>();
            q.dataset = j.value("dataset", default_dataset);
            items.push_back(std::move(q));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
        }
    }
    return items;
}

/// Replay scripts keyed by question id: {id, turns[], on_finalize?}.
inline std::map<std::string, ReplayScript> read_replay_scripts(const std::filesystem::path& path) {
    std::map<std::string, ReplayScript> scripts;
    for (const auto& j : read_jsonl_strict(path)) {
        try {
            ReplayScript s;
            s.turns = j.at("turns").get<std::vector<std::string>>();
            if (auto it = j.find("on_finalize"); it != j.end() && it->is_string()) {
                s.on_finalize = it->get<std::string>();
            }
            const auto id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
            scripts[id] = std::move(s);
        } catch (const json::exception& e) {
            throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
        }
    }
    return scripts;
}

// ---------------------------------------------------------------------------
// Transcripts

inline constexpr std::array<std::size_t, 2> kPresenceCutoffs = {1, 3};

struct RoundRecord {
    std::string query;
    std::vector<std::string> passage_ids;
    std::vector<double> scores;
};

/// One episode as written to a transcripts file. Reports are computed from
/// these records alone.
struct TranscriptRecord {
    std::string id;
    std::string dataset;
    std::string question;
    std::string control_sequence;
    std::vector<RoundRecord> rounds;
    std::string final_answer;
    std::size_t rounds_used = 0;
    bool forced_finalize = false;
    std::string termination;
    std::string transcript;
    std::string error;  // empty when the episode ran
    std::map<std::size_t, int> presence;
    std::vector<double> timings_ms;

    bool failed() const { return !error.empty(); }
};

/// 1 iff a reference occurs in one of the first k passages of any evidence block.
inline int answer_presence_at_k(const Episode& ep, std::span<const std::string> refs, std::size_t k,
                                NormalizationMode mode) {
    if (k == 0) throw Error(ErrorCode::InvalidConfig, "presence cutoff must be >= 1");
    for (const auto& block : ep.state.memory) {
        for (std::size_t i = 0; i < block.passages.size() && i < k; ++i) {
            if (contains_answer(block.passages[i].passage.text, refs, mode)) return 1;
        }
    }
    return 0;
}

inline TranscriptRecord make_transcript_record(const QaItem& item, const EpisodeResult& result,
                                               NormalizationMode mode, bool record_timings) {
    TranscriptRecord r;
    r.id = item.id;
    r.dataset = item.dataset;
    r.question = item.question;
    for (auto k : kPresenceCutoffs) r.presence[k] = 0;
    if (!result.ok()) {
        r.error = result.error;
        r.termination = "error";
        return r;
    }
    const Episode& ep = *result.episode;
    r.control_sequence = control_string(control_sequence(ep.state.transcript));
    for (const auto& block : ep.state.memory) {
        RoundRecord round;
        round.query = block.query;
        for (const auto& p : block.passages) {
            round.passage_ids.push_back(p.passage.id);
            round.scores.push_back(p.score);
        }
        r.rounds.push_back(std::move(round));
    }
    r.final_answer = ep.final_answer;
    r.rounds_used = ep.state.rounds_used;
    r.forced_finalize = std::any_of(ep.steps.begin(), ep.steps.end(), [](const PlanStep& s) {
        return s.finalize_reason == FinalizeReason::Budget;
    });
    r.termination = std::string(to_string(ep.termination));
    r.transcript = render(ep.state.transcript);
    if (!item.answers.empty()) {
        for (auto k : kPresenceCutoffs) r.presence[k] = answer_presence_at_k(ep, item.answers, k, mode);
    }
    if (record_timings) {
        for (const auto& s : ep.steps) {
            r.timings_ms.push_back(std::chrono::duration<double, std::milli>(s.duration).count());
        }
    }
    return r;
}

inline json to_json(const TranscriptRecord& r) {
    json j;
    j["id"] = r.id;
    j["dataset"] = r.dataset;
    j["question"] = r.question;
    j["control_sequence"] = r.control_sequence;
    json rounds = json::array();
    json queries = json::array();
    for (const auto& round : r.rounds) {
        json passages = json::array();
        for (std::size_t i = 0; i < round.passage_ids.size(); ++i) {
            passages.push_back({{"id", round.passage_ids[i]}, {"score", round.scores[i]}, {"rank", i + 1}});
        }
        rounds.push_back({{"query", round.query}, {"passages", passages}});
        queries.push_back(round.query);
    }
    j["queries"] = queries;
    j["rounds"] = rounds;
    j["final_answer"] = r.final_answer;
    j["rounds_used"] = r.rounds_used;
    j["forced_finalize"] = r.forced_finalize;
    j["termination"] = r.termination;
    j["transcript"] = r.transcript;
    json presence = json::object();
    for (const auto& [k, v] : r.presence) presence[std::to_string(k)] = v;
    j["answer_presence"] = presence;
    if (!r.error.empty()) j["error"] = r.error;
    if (!r.timings_ms.empty()) j["timings_ms"] = r.timings_ms;
    return j;
}

inline TranscriptRecord transcript_from_json(const json& j) {
    TranscriptRecord r;
    r.id = j.at("id").get<std::string>();
    r.dataset = j.value("dataset", std::string("default"));
    r.question = j.value("question", std::string{});
    r.control_sequence = j.value("control_sequence", std::string{});
    if (auto it = j.find("rounds"); it != j.end()) {
        for (const auto& round : *it) {
            RoundRecord rr;
            rr.query = round.value("query", std::string{});
            for (const auto& p : round.value("passages", json::array())) {
                rr.passage_ids.push_back(p.at("id").get<std::string>());
                rr.scores.push_back(p.value("score", 0.0));
            }
            r.rounds.push_back(std::move(rr));
        }
    }
    r.final_answer = j.value("final_answer", std::string{});
    r.rounds_used = j.value("rounds_used", r.rounds.size());
    r.forced_finalize = j.value("forced_finalize", false);
    r.termination = j.value("termination", std::string{});
    r.transcript = j.value("transcript", std::string{});
    r.error = j.value("error", std::string{});
    if (auto it = j.find("answer_presence"); it != j.end()) {
        for (const auto& [k, v] : it->items()) r.presence[std::stoul(k)] = v.get<int>();
    }
    if (auto it = j.find("timings_ms"); it != j.end()) r.timings_ms = it->get<std::vector<double>>();
    return r;
}

inline std::string transcripts_to_jsonl(const std::vector<TranscriptRecord>& records) {
    std::string out;
    for (const auto& r : records) out += to_json(r).dump() + "\n";
    return out;
}

inline std::vector<TranscriptRecord> read_transcripts(const std::filesystem::path& path) {
    std::vector<TranscriptRecord> out;
    for (const auto& j : read_jsonl_strict(path)) {
        try {
            out.push_back(transcript_from_json(j));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
        }
    }
    return out;
}

}  // namespace ragctl

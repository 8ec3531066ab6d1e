#pragma once

// Control tokens, the streaming token scanner, and the trajectory grammar
//
//   trajectory := ( [INTERMEDIARY] text [RETRIEVE] query )* [ANSWER] text [SOLVED]

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ragctl/text.hpp"

namespace ragctl {

enum class ControlToken { Retrieve, Intermediary, Answer, Solved };

inline constexpr std::array<ControlToken, 4> kAllControlTokens = {
    ControlToken::Retrieve, ControlToken::Intermediary, ControlToken::Answer,
    ControlToken::Solved};

constexpr std::string_view surface(ControlToken t) {
    switch (t) {
        case ControlToken::Retrieve: return "[RETRIEVE]";
        case ControlToken::Intermediary: return "[INTERMEDIARY]";
        case ControlToken::Answer: return "[ANSWER]";
        case ControlToken::Solved: return "[SOLVED]";
    }
    return "";
}

/// One-letter code used in transcripts and reports: I, R, A, S.
constexpr char short_code(ControlToken t) {
    switch (t) {
        case ControlToken::Retrieve: return 'R';
        case ControlToken::Intermediary: return 'I';
        case ControlToken::Answer: return 'A';
        case ControlToken::Solved: return 'S';
    }
    return '?';
}

inline std::optional<ControlToken> from_short_code(char c) {
    switch (c) {
        case 'R': return ControlToken::Retrieve;
        case 'I': return ControlToken::Intermediary;
        case 'A': return ControlToken::Answer;
        case 'S': return ControlToken::Solved;
        default: return std::nullopt;
    }
}

inline constexpr std::size_t kMaxSurfaceLength = 14;  // "[INTERMEDIARY]"

/// Longest control token whose surface form starts at s[pos], if any.
inline std::optional<ControlToken> match_token_at(std::string_view s, std::size_t pos) {
    std::optional<ControlToken> best;
    std::size_t best_len = 0;
    for (ControlToken t : kAllControlTokens) {
        const auto form = surface(t);
        if (form.size() > best_len && s.substr(pos, form.size()) == form) {
            best = t;
            best_len = form.size();
        }
    }
    return best;
}

/// True if s is a non-empty proper prefix of some surface form.
inline bool is_proper_token_prefix(std::string_view s) {
    if (s.empty()) return false;
    for (ControlToken t : kAllControlTokens) {
        const auto form = surface(t);
        if (s.size() < form.size() && form.substr(0, s.size()) == s) return true;
    }
    return false;
}

// ---------------------------------------------------------------------------
// Streaming scanner

struct TextRun {
    std::string text;
    bool operator==(const TextRun&) const = default;
};

using StreamEvent = std::variant<TextRun, ControlToken>;

struct ScannerState {
    std::string pending;
    std::size_t emitted = 0;
};

/// Feeds one chunk of generator output through the scanner. Tokens split
/// across chunk boundaries are held in state.pending until they resolve.
/// Pass end_of_stream = true (usually with an empty chunk) to drain pending.
inline std::vector<StreamEvent> scan_stream(std::string_view chunk, ScannerState& state,
                                            bool end_of_stream = false) {
    std::string buffer = std::move(state.pending);
    buffer.append(chunk);
    state.pending.clear();

    std::vector<StreamEvent> events;
    std::string run;
    auto flush_run = [&] {
        if (!run.empty()) {
            events.emplace_back(TextRun{std::move(run)});
            run.clear();
        }
    };

    std::size_t i = 0;
    while (i < buffer.size()) {
        if (buffer[i] == '[') {
            if (auto tok = match_token_at(buffer, i)) {
                flush_run();
                events.emplace_back(*tok);
                i += surface(*tok).size();
                continue;
            }
            std::string_view rest = std::string_view(buffer).substr(i);
            if (!end_of_stream && is_proper_token_prefix(rest)) {
                state.pending.assign(rest);
                break;
            }
        }
        run.push_back(buffer[i]);
        ++i;
    }
    flush_run();
    state.emitted += events.size();
    return events;
}

/// Merges adjacent text runs; two scans of the same input under different
/// chunkings coalesce to the same sequence.
inline std::vector<StreamEvent> coalesce(const std::vector<StreamEvent>& events) {
    std::vector<StreamEvent> out;
    for (const auto& ev : events) {
        if (const auto* run = std::get_if<TextRun>(&ev)) {
            if (run->text.empty()) continue;
            if (!out.empty()) {
                if (auto* last = std::get_if<TextRun>(&out.back())) {
                    last->text += run->text;
                    continue;
                }
            }
        }
        out.push_back(ev);
    }
    return out;
}

inline std::string render(const std::vector<StreamEvent>& events) {
    std::string out;
    for (const auto& ev : events) {
        if (const auto* run = std::get_if<TextRun>(&ev)) {
            out += run->text;
        } else {
            out += surface(std::get<ControlToken>(ev));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Trajectories

struct Segment {
    std::optional<ControlToken> marker;  // empty only for leading plain text
    std::string text;

    /// Text with surrounding whitespace removed: the query, answer or partial answer.
    std::string_view content() const { return text::trim(text); }

    bool operator==(const Segment&) const = default;
};

struct Trajectory {
    std::vector<Segment> segments;
    std::string source;
};

inline std::string render(const std::vector<Segment>& segments) {
    std::string out;
    for (const auto& seg : segments) {
        if (seg.marker) out += surface(*seg.marker);
        out += seg.text;
    }
    return out;
}

inline std::string render(const Trajectory& t) { return render(t.segments); }

inline Trajectory parse_trajectory(std::string_view text) {
    Trajectory t;
    t.source.assign(text);
    ScannerState state;
    for (auto& ev : scan_stream(text, state, /*end_of_stream=*/true)) {
        if (auto* run = std::get_if<TextRun>(&ev)) {
            if (t.segments.empty()) {
                t.segments.push_back(Segment{std::nullopt, std::move(run->text)});
            } else {
                t.segments.back().text += run->text;
            }
        } else {
            t.segments.push_back(Segment{std::get<ControlToken>(ev), {}});
        }
    }
    return t;
}

inline std::vector<ControlToken> control_sequence(const Trajectory& t) {
    std::vector<ControlToken> out;
    for (const auto& seg : t.segments) {
        if (seg.marker) out.push_back(*seg.marker);
    }
    return out;
}

inline std::string control_string(const std::vector<ControlToken>& seq) {
    std::string out;
    for (auto tok : seq) out.push_back(short_code(tok));
    return out;
}

/// Trimmed queries of every Retrieve segment, in order.
inline std::vector<std::string> retrieve_queries(const Trajectory& t) {
    std::vector<std::string> out;
    for (const auto& seg : t.segments) {
        if (seg.marker == ControlToken::Retrieve) out.emplace_back(seg.content());
    }
    return out;
}

/// Trimmed text of the last Answer segment, or nullopt if there is none.
inline std::optional<std::string> final_answer_text(const Trajectory& t) {
    for (auto it = t.segments.rbegin(); it != t.segments.rend(); ++it) {
        if (it->marker == ControlToken::Answer) return std::string(it->content());
    }
    return std::nullopt;
}

/// Removes every control-token surface form from s.
inline std::string strip_control_tokens(std::string_view s) {
    std::string out;
    ScannerState state;
    for (const auto& ev : scan_stream(s, state, true)) {
        if (const auto* run = std::get_if<TextRun>(&ev)) out += run->text;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Validation

enum class ViolationKind {
    TextBeforeFirstToken,
    RetrieveWithoutIntermediary,
    SolvedWithoutAnswer,
    IntermediaryWithoutRetrieve,
    AnswerWithoutSolved,
    TokenAfterSolved,
    TextAfterSolved,
    EmptyQuery,
    MissingAnswer,
    BudgetExceeded,
};

constexpr std::string_view describe(ViolationKind v) {
    switch (v) {
        case ViolationKind::TextBeforeFirstToken: return "Text before first control token";
        case ViolationKind::RetrieveWithoutIntermediary: return "Retrieve without Intermediary";
        case ViolationKind::SolvedWithoutAnswer: return "Solved without Answer";
        case ViolationKind::IntermediaryWithoutRetrieve: return "Intermediary not followed by Retrieve";
        case ViolationKind::AnswerWithoutSolved: return "Answer not followed by Solved";
        case ViolationKind::TokenAfterSolved: return "Control token after Solved";
        case ViolationKind::TextAfterSolved: return "Text after Solved";
        case ViolationKind::EmptyQuery: return "Retrieve with empty query";
        case ViolationKind::MissingAnswer: return "Missing Answer";
        case ViolationKind::BudgetExceeded: return "Retrieval budget exceeded";
    }
    return "";
}

struct Violation {
    ViolationKind kind;
    std::size_t segment;  // index into Trajectory::segments; segments.size() for end-of-input

    std::string_view message() const { return describe(kind); }
};

struct ValidationReport {
    bool valid = false;
    std::vector<Violation> violations;
    std::size_t retrieve_count = 0;
};

inline ValidationReport validate(const Trajectory& t, std::size_t max_rounds) {
    enum class State { Start, AfterIntermediary, AfterRetrieve, AfterAnswer, AfterSolved };

    ValidationReport report;
    auto flag = [&](ViolationKind k, std::size_t at) { report.violations.push_back({k, at}); };

    State state = State::Start;
    for (std::size_t i = 0; i < t.segments.size(); ++i) {
        const Segment& seg = t.segments[i];
        if (!seg.marker) {
            if (!text::is_blank(seg.text)) flag(ViolationKind::TextBeforeFirstToken, i);
            continue;
        }
        const ControlToken tok = *seg.marker;
        switch (state) {
            case State::Start:
            case State::AfterRetrieve:
                if (tok == ControlToken::Retrieve) flag(ViolationKind::RetrieveWithoutIntermediary, i);
                if (tok == ControlToken::Solved) flag(ViolationKind::SolvedWithoutAnswer, i);
                break;
            case State::AfterIntermediary:
                if (tok == ControlToken::Solved) {
                    flag(ViolationKind::SolvedWithoutAnswer, i);
                } else if (tok != ControlToken::Retrieve) {
                    flag(ViolationKind::IntermediaryWithoutRetrieve, i);
                }
                break;
            case State::AfterAnswer:
                if (tok != ControlToken::Solved) flag(ViolationKind::AnswerWithoutSolved, i);
                break;
            case State::AfterSolved:
                flag(ViolationKind::TokenAfterSolved, i);
                break;
        }
        switch (tok) {
            case ControlToken::Intermediary: state = State::AfterIntermediary; break;
            case ControlToken::Retrieve:
                ++report.retrieve_count;
                if (seg.content().empty()) flag(ViolationKind::EmptyQuery, i);
                state = State::AfterRetrieve;
                break;
            case ControlToken::Answer: state = State::AfterAnswer; break;
            case ControlToken::Solved:
                if (!text::is_blank(seg.text)) flag(ViolationKind::TextAfterSolved, i);
                state = State::AfterSolved;
                break;
        }
    }

    const std::size_t end = t.segments.size();
    switch (state) {
        case State::Start:
        case State::AfterRetrieve: flag(ViolationKind::MissingAnswer, end); break;
        case State::AfterIntermediary: flag(ViolationKind::IntermediaryWithoutRetrieve, end); break;
        case State::AfterAnswer: flag(ViolationKind::AnswerWithoutSolved, end); break;
        case State::AfterSolved: break;
    }
    if (report.retrieve_count > max_rounds) flag(ViolationKind::BudgetExceeded, end);

    report.valid = report.violations.empty();
    return report;
}

}  // namespace ragctl

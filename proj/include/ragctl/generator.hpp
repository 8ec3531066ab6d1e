#pragma once

// The generative policy interface, prompt rendering, and the deterministic
// replay generator used for testing and offline runs.

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ragctl/control_grammar.hpp"
#include "ragctl/error.hpp"
#include "ragctl/retrieval_index.hpp"

namespace ragctl {

inline constexpr std::string_view kDefaultPreamble =
    "You answer questions by emitting control tokens. Either answer directly as "
    "[ANSWER] <answer> [SOLVED], or state what you know so far as [INTERMEDIARY] <partial "
    "answer> followed by [RETRIEVE] <search query> to request evidence.";

inline constexpr std::string_view kFinalizeInstruction =
    "The retrieval budget is exhausted. Using only the information above, respond now with "
    "[ANSWER] followed by your final answer, then [SOLVED].";

inline constexpr std::string_view kFallbackMessage =
    "Your previous turn did not follow the control-token format. Continue with either "
    "[INTERMEDIARY] <partial answer> [RETRIEVE] <search query> or [ANSWER] <final answer> "
    "[SOLVED].";

/// One retrieval round: the query and the ranked passages it returned.
struct EvidenceBlock {
    std::string query;
    std::vector<RetrievedPassage> passages;
};

struct GenerationContext {
    std::string system_preamble{kDefaultPreamble};
    std::string question;
    std::vector<EvidenceBlock> evidence_blocks;
    std::vector<Segment> prior_segments;
    std::vector<std::string> fallback_messages;
    bool finalize_required = false;
};

enum class StopReason { ControlBoundary, EndOfTurn, LengthLimit };

constexpr std::string_view to_string(StopReason r) {
    switch (r) {
        case StopReason::ControlBoundary: return "control-boundary";
        case StopReason::EndOfTurn: return "end-of-turn";
        case StopReason::LengthLimit: return "length-limit";
    }
    return "";
}

struct GeneratorEmission {
    std::string text;
    StopReason stop_reason = StopReason::EndOfTurn;
};

struct ChatMessage {
    std::string role;
    std::string content;
};

/// The policy behind every turn. Implementations must be safe to call from
/// several threads when shared between episodes.
class Generator {
public:
    virtual ~Generator() = default;

    /// Next turn of a planning episode.
    virtual GeneratorEmission emit_turn(const GenerationContext& ctx) = 0;

    /// Free-form completion, used for probes and the teacher.
    virtual std::string complete(std::span<const ChatMessage> messages) = 0;
};

// ---------------------------------------------------------------------------
// Prompt rendering

namespace detail {

/// Escapes backslashes, line breaks and control-token surface forms so that
/// user or corpus text cannot forge prompt structure.
inline std::string escape_field(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (c == '\\') {
            out += "\\\\";
        } else if (c == '\n') {
            out += "\\n";
        } else if (c == '\r') {
            out += "\\r";
        } else if (c == '[' && match_token_at(s, i)) {
            out += "\\[";
        } else {
            out.push_back(c);
        }
    }
    return out;
}

inline std::string escape_title(std::string_view s) {
    return text::replace_all(escape_field(s), ":", "\\:");
}

}  // namespace detail

/// The user-visible part of the prompt: everything except the preamble.
inline std::string render_prompt_body(const GenerationContext& ctx) {
    std::string out = "Question: " + detail::escape_field(ctx.question) + "\n";
    if (!ctx.evidence_blocks.empty()) {
        out += "\nEvidence:\n";
        for (const auto& block : ctx.evidence_blocks) {
            out += "Query: " + detail::escape_field(block.query) + "\n";
            for (std::size_t k = 0; k < block.passages.size(); ++k) {
                const auto& p = block.passages[k].passage;
                out += "[" + std::to_string(k + 1) + "] " + detail::escape_title(p.title) + ": " +
                       detail::escape_field(p.text) + "\n";
            }
        }
    }
    if (!ctx.prior_segments.empty()) {
        out += "\nResponse so far:\n" + render(ctx.prior_segments) + "\n";
    }
    for (const auto& msg : ctx.fallback_messages) out += "\n" + msg + "\n";
    if (ctx.finalize_required) out += "\n" + std::string(kFinalizeInstruction) + "\n";
    return out;
}

inline std::string render_prompt(const GenerationContext& ctx) {
    return ctx.system_preamble + "\n\n" + render_prompt_body(ctx);
}

inline std::vector<ChatMessage> to_chat_messages(const GenerationContext& ctx) {
    return {{"system", ctx.system_preamble}, {"user", render_prompt_body(ctx)}};
}

// ---------------------------------------------------------------------------
// Branch truncation

struct BranchCut {
    std::string kept;
    std::string dropped;
};

/// Cuts a turn after its first complete branch: after "[SOLVED]" for an
/// answer branch, or before the control token following the query of a
/// retrieve branch. Text before the first control token is kept.
inline BranchCut cut_after_first_branch(std::string_view emission) {
    ScannerState state;
    const auto events = scan_stream(emission, state, true);
    std::size_t offset = 0;
    std::optional<ControlToken> first;
    bool saw_retrieve = false;
    for (const auto& ev : events) {
        if (const auto* run = std::get_if<TextRun>(&ev)) {
            offset += run->text.size();
            continue;
        }
        const ControlToken tok = std::get<ControlToken>(ev);
        const std::size_t len = surface(tok).size();
        if (!first) {
            first = tok;
        } else if (*first == ControlToken::Answer && tok == ControlToken::Solved) {
            offset += len;
            return {std::string(emission.substr(0, offset)), std::string(emission.substr(offset))};
        } else if (*first == ControlToken::Intermediary) {
            if (saw_retrieve) {
                return {std::string(emission.substr(0, offset)),
                        std::string(emission.substr(offset))};
            }
            if (tok == ControlToken::Retrieve) saw_retrieve = true;
        }
        offset += len;
    }
    return {std::string(emission), {}};
}

// ---------------------------------------------------------------------------
// Replay generator

struct ReplayScript {
    std::vector<std::string> turns;
    /// Emitted whenever a finalize turn is requested, without consuming a turn.
    std::optional<std::string> on_finalize;
};

/// Plays back scripted turns in order; every emit_turn or complete call
/// consumes one turn.
class ReplayGenerator final : public Generator {
public:
    explicit ReplayGenerator(ReplayScript script) : script_(std::move(script)) {}
    explicit ReplayGenerator(std::vector<std::string> turns)
        : script_{std::move(turns), std::nullopt} {}

    GeneratorEmission emit_turn(const GenerationContext& ctx) override {
        if (ctx.finalize_required && script_.on_finalize) {
            return {*script_.on_finalize, StopReason::EndOfTurn};
        }
        return {next(), StopReason::EndOfTurn};
    }

    std::string complete(std::span<const ChatMessage>) override { return next(); }

    std::size_t consumed() const {
        std::lock_guard lock(mu_);
        return cursor_;
    }

private:
    std::string next() {
        std::lock_guard lock(mu_);
        if (cursor_ >= script_.turns.size()) {
            throw Error(ErrorCode::ScriptExhausted,
                        "replay script has " + std::to_string(script_.turns.size()) + " turns");
        }
        return script_.turns[cursor_++];
    }

    ReplayScript script_;
    mutable std::mutex mu_;
    std::size_t cursor_ = 0;
};

}  // namespace ragctl

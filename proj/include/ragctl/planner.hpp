#pragma once

// Self-triggered information planning: the decode loop that alternates
// generation and retrieval under a retrieval budget.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "ragctl/control_grammar.hpp"
#include "ragctl/error.hpp"
#include "ragctl/generator.hpp"
#include "ragctl/retrieval_index.hpp"

namespace ragctl {

enum class FallbackPolicy { AppendFallbackMessage, ForceFinalize };

struct PlannerConfig {
    std::size_t max_rounds = 3;  // retrieval budget B
    std::size_t top_k = 3;
    FallbackPolicy fallback_policy = FallbackPolicy::AppendFallbackMessage;
    /// Consecutive non-progress turns tolerated before the episode is ended.
    std::size_t max_repairs = 1;
    std::string system_preamble{kDefaultPreamble};
};

enum class Phase { Deciding, Retrieving, Finalizing, Done };

struct EpisodeState {
    std::string question;
    std::size_t max_rounds = 3;
    std::vector<EvidenceBlock> memory;
    Trajectory transcript;
    std::size_t rounds_used = 0;
    Phase phase = Phase::Deciding;
};

/// What the engine did with one turn.
enum class TurnAction {
    Answered,
    Retrieved,
    BareIntermediary,  // Intermediary not followed by Retrieve
    EmptyQuery,
    Malformed,
    RetrieveRefused,  // retrieve branch while a final answer was required
};

constexpr std::string_view to_string(TurnAction a) {
    switch (a) {
        case TurnAction::Answered: return "answered";
        case TurnAction::Retrieved: return "retrieved";
        case TurnAction::BareIntermediary: return "bare-intermediary";
        case TurnAction::EmptyQuery: return "empty-query";
        case TurnAction::Malformed: return "malformed";
        case TurnAction::RetrieveRefused: return "retrieve-refused";
    }
    return "";
}

enum class FinalizeReason { None, Budget, Fallback };

enum class Termination {
    Solved,
    SolvedAtEndOfTurn,  // answer branch ended without [SOLVED]; the engine closed it
    MalformedTurn,
    BudgetExhausted,
    BudgetZeroRequiresDirectAnswer,
};

constexpr std::string_view to_string(Termination t) {
    switch (t) {
        case Termination::Solved: return "solved";
        case Termination::SolvedAtEndOfTurn: return "solved-at-end-of-turn";
        case Termination::MalformedTurn: return "malformed-turn";
        case Termination::BudgetExhausted: return "budget-exhausted";
        case Termination::BudgetZeroRequiresDirectAnswer: return "budget-zero-requires-direct-answer";
    }
    return "";
}

struct PlanStep {
    std::size_t turn = 0;
    bool finalize_required = false;
    FinalizeReason finalize_reason = FinalizeReason::None;
    std::string emission;
    StopReason stop_reason = StopReason::EndOfTurn;
    std::string dropped;  // text past the first complete branch
    std::vector<Segment> segments;
    TurnAction action = TurnAction::Malformed;
    std::string query;
    std::vector<RetrievedPassage> results;
    std::chrono::nanoseconds duration{0};
};

struct Episode {
    EpisodeState state;
    std::vector<PlanStep> steps;
    std::string final_answer;
    Termination termination = Termination::Solved;

    bool completed() const {
        return termination == Termination::Solved || termination == Termination::SolvedAtEndOfTurn;
    }
};

// ---------------------------------------------------------------------------
// Loop primitives

/// Runs one retrieval round and logs it in memory. Memory is append-only;
/// passages repeated across rounds are kept.
inline EpisodeState handle_retrieve(EpisodeState state, std::string_view query,
                                    const PassageIndex* idx, std::size_t top_k) {
    const auto q = text::trim(query);
    if (q.empty()) throw Error(ErrorCode::EmptyQuery, "retrieve branch carries no query");
    if (state.rounds_used >= state.max_rounds) {
        throw Error(ErrorCode::BudgetExhausted,
                    std::to_string(state.rounds_used) + " of " + std::to_string(state.max_rounds) +
                        " rounds used");
    }
    if (idx == nullptr) throw Error(ErrorCode::InvalidConfig, "retrieval requested without an index");
    state.memory.push_back({std::string(q), idx->search(q, top_k)});
    ++state.rounds_used;
    state.phase = Phase::Retrieving;
    return state;
}

inline GenerationContext make_context(const EpisodeState& state, std::string_view preamble) {
    GenerationContext ctx;
    ctx.system_preamble.assign(preamble);
    ctx.question = state.question;
    ctx.evidence_blocks = state.memory;
    ctx.prior_segments = state.transcript.segments;
    return ctx;
}

inline bool has_answer(const EpisodeState& state) {
    return std::any_of(state.transcript.segments.begin(), state.transcript.segments.end(),
                       [](const Segment& s) { return s.marker == ControlToken::Answer; });
}

/// Context for the turn that must produce the final answer once b = B.
inline GenerationContext force_finalize(const EpisodeState& state,
                                        std::string_view preamble = kDefaultPreamble) {
    if (state.rounds_used != state.max_rounds || has_answer(state)) {
        throw Error(ErrorCode::NotAtBudget, std::to_string(state.rounds_used) + " of " +
                                                std::to_string(state.max_rounds) + " rounds used");
    }
    GenerationContext ctx = make_context(state, preamble);
    ctx.finalize_required = true;
    return ctx;
}

namespace detail {

struct TurnReading {
    TurnAction action = TurnAction::Malformed;
    std::size_t first_marker = 0;  // byte offset of the first control token in the kept text
    std::string answer;
    std::string query;
    bool has_solved = false;
};

inline TurnReading read_turn(const std::vector<Segment>& segments) {
    TurnReading r;
    std::vector<const Segment*> marked;
    for (const auto& s : segments) {
        if (s.marker) marked.push_back(&s);
    }
    if (marked.empty()) return r;
    if (!segments.front().marker) r.first_marker = segments.front().text.size();

    const Segment& head = *marked.front();
    switch (*head.marker) {
        case ControlToken::Answer:
            if (marked.size() == 1 || (marked.size() == 2 && marked[1]->marker == ControlToken::Solved)) {
                r.action = TurnAction::Answered;
                r.answer.assign(head.content());
                r.has_solved = marked.size() == 2;
            }
            return r;
        case ControlToken::Intermediary:
            if (marked.size() >= 2 && marked[1]->marker == ControlToken::Retrieve) {
                r.query.assign(marked[1]->content());
                r.action = r.query.empty() ? TurnAction::EmptyQuery : TurnAction::Retrieved;
            } else {
                r.action = TurnAction::BareIntermediary;
            }
            return r;
        default:
            return r;
    }
}

}  // namespace detail

/// Runs one planning episode to completion. Generator failures propagate as
/// Error(GeneratorFailure); grammar trouble ends the episode with a recorded
/// Termination instead.
inline Episode run_episode(std::string_view question, const PlannerConfig& cfg, Generator& gen,
                           const PassageIndex* idx) {
    if (text::is_blank(question)) throw Error(ErrorCode::InvalidConfig, "empty question");
    if (cfg.top_k == 0) throw Error(ErrorCode::InvalidConfig, "top_k must be >= 1");

    Episode ep;
    EpisodeState& state = ep.state;
    state.question.assign(question);
    state.max_rounds = cfg.max_rounds;

    std::size_t repairs_used = 0;
    std::vector<std::string> pending_fallback;
    bool fallback_finalize = false;

    auto end_episode = [&](Termination t) {
        ep.termination = t;
        state.phase = Phase::Done;
    };

    for (std::size_t turn = 1;; ++turn) {
        PlanStep step;
        step.turn = turn;
        const bool at_budget = state.rounds_used >= state.max_rounds;
        GenerationContext ctx = at_budget ? force_finalize(state, cfg.system_preamble)
                                          : make_context(state, cfg.system_preamble);
        if (at_budget) {
            step.finalize_reason = FinalizeReason::Budget;
        } else if (fallback_finalize) {
            ctx.finalize_required = true;
            step.finalize_reason = FinalizeReason::Fallback;
        }
        step.finalize_required = ctx.finalize_required;
        ctx.fallback_messages = pending_fallback;
        if (ctx.finalize_required) state.phase = Phase::Finalizing;

        const auto started = std::chrono::steady_clock::now();
        GeneratorEmission emission;
        try {
            emission = gen.emit_turn(ctx);
        } catch (const Error& e) {
            throw Error(ErrorCode::GeneratorFailure, e.what());
        } catch (const std::exception& e) {
            throw Error(ErrorCode::GeneratorFailure, e.what());
        }
        step.emission = emission.text;
        step.stop_reason = emission.stop_reason;

        auto cut = cut_after_first_branch(emission.text);
        step.dropped = std::move(cut.dropped);
        step.segments = parse_trajectory(cut.kept).segments;
        auto reading = detail::read_turn(step.segments);
        if (ctx.finalize_required &&
            (reading.action == TurnAction::Retrieved || reading.action == TurnAction::EmptyQuery)) {
            reading.action = TurnAction::RetrieveRefused;
        }
        step.action = reading.action;
        step.query = reading.query;

        const std::string branch = cut.kept.substr(reading.first_marker);
        bool done = false;
        switch (reading.action) {
            case TurnAction::Answered: {
                std::string appended = branch;
                if (!reading.has_solved) appended += std::string(surface(ControlToken::Solved));
                state.transcript = parse_trajectory(state.transcript.source + appended);
                ep.final_answer = reading.answer;
                end_episode(reading.has_solved ? Termination::Solved : Termination::SolvedAtEndOfTurn);
                done = true;
                break;
            }
            case TurnAction::Retrieved: {
                state = handle_retrieve(std::move(state), reading.query, idx, cfg.top_k);
                step.results = state.memory.back().passages;
                state.transcript = parse_trajectory(state.transcript.source + branch);
                repairs_used = 0;
                pending_fallback.clear();
                fallback_finalize = false;
                break;
            }
            case TurnAction::BareIntermediary:
            case TurnAction::EmptyQuery:
            case TurnAction::Malformed:
            case TurnAction::RetrieveRefused: {
                if (repairs_used >= cfg.max_repairs) {
                    Termination t = Termination::MalformedTurn;
                    if (reading.action == TurnAction::RetrieveRefused && at_budget) {
                        t = state.max_rounds == 0 ? Termination::BudgetZeroRequiresDirectAnswer
                                                  : Termination::BudgetExhausted;
                    }
                    end_episode(t);
                    done = true;
                    break;
                }
                ++repairs_used;
                const bool soft = reading.action == TurnAction::BareIntermediary ||
                                  reading.action == TurnAction::EmptyQuery;
                if (soft && cfg.fallback_policy == FallbackPolicy::ForceFinalize) {
                    fallback_finalize = true;
                    pending_fallback.clear();
                } else {
                    pending_fallback = {std::string(kFallbackMessage)};
                }
                break;
            }
        }
        step.duration = std::chrono::steady_clock::now() - started;
        ep.steps.push_back(std::move(step));
        if (done) break;
    }
    return ep;
}

// ---------------------------------------------------------------------------
// Batches

struct QaItem {
    std::string id;
    std::string question;
    std::vector<std::string> answers;
    std::string dataset;
};

struct EpisodeResult {
    std::string id;
    std::optional<Episode> episode;
    std::optional<ErrorCode> error_code;
    std::string error;

    bool ok() const { return episode.has_value(); }
};

/// Supplies the generator for one question. Replay runs hand out a fresh
/// script per question; remote runs share one backend.
using GeneratorFactory = std::function<std::shared_ptr<Generator>(const QaItem&)>;

/// Runs every question; results keep input order and failures stay in their slot.
inline std::vector<EpisodeResult> batch_run(std::span<const QaItem> questions,
                                            const PlannerConfig& cfg,
                                            const GeneratorFactory& factory,
                                            const PassageIndex* idx, std::size_t parallelism = 1) {
    if (parallelism == 0) throw Error(ErrorCode::InvalidConfig, "parallelism must be >= 1");
    std::vector<EpisodeResult> results(questions.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t i = next++; i < questions.size(); i = next++) {
            const QaItem& item = questions[i];
            EpisodeResult& slot = results[i];
            slot.id = item.id;
            try {
                auto gen = factory(item);
                if (!gen) throw Error(ErrorCode::GeneratorFailure, "no generator for " + item.id);
                slot.episode = run_episode(item.question, cfg, *gen, idx);
            } catch (const Error& e) {
                slot.error_code = e.code();
                slot.error = e.what();
            } catch (const std::exception& e) {
                slot.error_code = ErrorCode::GeneratorFailure;
                slot.error = e.what();
            }
        }
    };

    const std::size_t threads = std::min(parallelism, std::max<std::size_t>(1, questions.size()));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return results;
}

}  // namespace ragctl

#pragma once

// Rule-based RL reward: R = r_ans + r_ctrl.

#include <string>
#include <string_view>

#include "ragctl/control_grammar.hpp"
#include "ragctl/error.hpp"
#include "ragctl/metrics.hpp"
#include "ragctl/supervision.hpp"

namespace ragctl {

struct RewardConfig {
    double control_bonus = 0.5;
    double control_penalty = -0.5;  // applied to grammar-invalid rollouts
};

struct RewardBreakdown {
    double r_ans = 0.0;
    double r_ctrl = 0.0;
    double total = 0.0;
};

/// BLEU of the rollout answer against the reference.
inline double answer_fidelity(std::string_view rollout_answer, std::string_view reference) {
    if (text::is_blank(reference)) throw Error(ErrorCode::EmptyReference, "reference is blank");
    return bleu(rollout_answer, reference);
}

/// Pattern-level control reward: penalty when the rollout breaks the
/// grammar, otherwise bonus when its control sequence equals the target's
/// and 0 when it differs. Validity is checked first, so stray text around
/// a matching marker sequence is still penalized.
inline double control_accuracy(const Trajectory& rollout, const Trajectory& target,
                               std::size_t max_rounds, const RewardConfig& cfg = {}) {
    if (!validate(target, max_rounds).valid) {
        throw Error(ErrorCode::InvalidTarget, "target trajectory is not grammar-valid");
    }
    if (!validate(rollout, max_rounds).valid) return cfg.control_penalty;
    return control_sequence(rollout) == control_sequence(target) ? cfg.control_bonus : 0.0;
}

inline RewardBreakdown total_reward(const Trajectory& rollout, const SupervisionSample& sample,
                                    std::size_t max_rounds, const RewardConfig& cfg = {}) {
    if (sample.references.empty()) {
        throw Error(ErrorCode::EmptyReferences, "sample " + sample.id + " has no references");
    }
    RewardBreakdown r;
    const std::string answer = final_answer_text(rollout).value_or("");
    r.r_ans = answer_fidelity(answer, sample.references.front());
    r.r_ctrl = control_accuracy(rollout, sample.target, max_rounds, cfg);
    r.total = r.r_ans + r.r_ctrl;
    return r;
}

}  // namespace ragctl

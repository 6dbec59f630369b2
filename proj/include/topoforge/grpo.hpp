#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace topoforge::grpo {

struct GrpoConfig {
    double eps_std = 1e-6;  // added to the group standard deviation
    double clip_eps = 0.2;  // PPO-style surrogate clip width
    double kl_beta = 0.05;  // weight of the KL anchor to the reference policy
};

/// Group-relative advantages: (R_i - mean) / (population stddev + eps_std).
inline std::vector<double> advantages(std::span<const double> rewards, double eps_std) {
    const std::size_t g = rewards.size();
    if (g < 2) throw std::invalid_argument("advantages: group size must be at least 2");
    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= double(g);
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    var /= double(g);
    const double denom = std::sqrt(var) + eps_std;
    std::vector<double> out(g);
    for (std::size_t i = 0; i < g; ++i) out[i] = (rewards[i] - mean) / denom;
    return out;
}

/// One group of candidates with per-candidate sequence log-probabilities under
/// the new, previous, and reference policies.
struct GrpoGroup {
    std::vector<double> rewards;
    std::vector<double> logp_new;
    std::vector<double> logp_old;
    std::vector<double> logp_ref;
};

/// Evaluates the GRPO objective: the mean clipped surrogate minus beta times
/// the k3 KL estimate exp(d) - d - 1 with d = logp_ref - logp_new. Evaluation
/// only; gradients live in external trainers.
inline double objective(const GrpoGroup& group, const GrpoConfig& cfg) {
    const std::size_t g = group.rewards.size();
    if (g < 2) throw std::invalid_argument("objective: group size must be at least 2");
    if (group.logp_new.size() != g || group.logp_old.size() != g || group.logp_ref.size() != g)
        throw std::invalid_argument("objective: mismatched group lengths");

    const std::vector<double> adv = advantages(group.rewards, cfg.eps_std);
    double surrogate = 0.0, kl = 0.0;
    for (std::size_t i = 0; i < g; ++i) {
        const double ratio = std::exp(group.logp_new[i] - group.logp_old[i]);
        const double clipped = std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
        surrogate += std::min(ratio * adv[i], clipped * adv[i]);
        const double d = group.logp_ref[i] - group.logp_new[i];
        kl += std::exp(d) - d - 1.0;
    }
    return surrogate / double(g) - cfg.kl_beta * kl / double(g);
}

}  // namespace topoforge::grpo

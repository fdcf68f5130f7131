#pragma once

#include <cstdint>
#include <vector>

#include "bcirl/mdp.hpp"
#include "bcirl/soft_solver.hpp"

namespace bcirl {

/// Shared solver configuration. `gamma` is the discount used for feature
/// expectations and visitations; it normally equals the MDP discount.
/// `horizon` truncates the forward visitation pass; 0 means "use the
/// longest demonstration", which keeps expert and policy feature sums on
/// the same footing for episodic data.
struct IrlConfig {
    double learning_rate = 0.05;
    double grad_tol = 1e-4;
    int max_iters = 200;
    double gamma = 0.9;
    std::uint64_t seed = 0;
    int horizon = 0;
    double vi_tol = 1e-6;
    int vi_max_sweeps = 10000;
    int inner_steps = 1;  // gradient steps per cluster per EM iteration

    int effective_horizon(const DemonstrationSet& demos) const;
};

struct IrlIterationRecord {
    int iter = 0;
    double log_likelihood = 0.0;
    double grad_norm = 0.0;  // sup-norm
    Vec theta;
    double wall_ms = 0.0;
};

struct IrlTrace {
    std::vector<IrlIterationRecord> records;
};

/// Per-dataset quantities that do not change across iterations: discounted
/// feature expectation, start state, and cumulative transition log
/// probability of every demonstration.
struct DemoStats {
    Mat features;         // n x dim
    std::vector<int> starts;  // n
    Vec transition_logs;  // n, sum_t log P(s_{t+1}|s_t,a_t); -inf for impossible demos
    int max_length = 0;

    static DemoStats compute(const DemonstrationSet& demos, const FeatureMap& features,
                             const TabularMdp& mdp, double gamma);
};

/// Log-likelihood of a trajectory under the maximum entropy trajectory
/// model: theta . phi_gamma(tau) - V_soft(s_0) + sum_t log P(s_{t+1}|s_t,a_t).
/// The converged soft value is the model's log-partition, which makes
/// weighted_gradient the exact theta-gradient of this quantity. This is the
/// likelihood the EM machinery clusters and ascends; the product-of-policy
/// form in trajectory_log_likelihood is the executable data probability
/// used for reporting and model comparison.
double model_log_likelihood(const TabularMdp& mdp, const FeatureMap& features,
                            const RewardParams& theta, const SoftPolicy& policy,
                            const Trajectory& tau, double gamma);

/// Model log-likelihood of every demo under one cluster, from precomputed
/// demo statistics.
Vec model_logliks(const DemoStats& stats, const RewardParams& theta, const SoftPolicy& policy);

/// Core gradient shared by all IRL variants: the beta-weighted expert
/// feature expectation minus the policy feature expectation, with the
/// policy visitation started from the beta-weighted empirical start
/// distribution. With `normalized` the result is per unit of demonstration
/// mass (divide by sum(beta)); otherwise it is scaled by sum(beta).
/// An all-zero beta yields a zero gradient.
Vec weighted_gradient(const SparseTransitions& trans, const FeatureMap& features,
                      const SoftPolicy& policy, const DemoStats& stats, const Vec& beta_col,
                      double gamma, int horizon, bool normalized);

/// Gradient of the mean demonstration log-likelihood under the maximum
/// entropy model: (1/n) sum_i phi(tau_i) - sum_{s,a} D(s,a|theta) phi(s,a).
Vec maxent_gradient(const TabularMdp& mdp, const FeatureMap& features, const RewardParams& theta,
                    const DemonstrationSet& demos, const IrlConfig& config);

/// Mean trajectory log-likelihood over the dataset; -infinity propagates.
double dataset_log_likelihood(const TabularMdp& mdp, const SoftPolicy& policy,
                              const DemonstrationSet& demos);

struct MaxentResult {
    RewardParams reward;
    SoftPolicy policy;
    IrlTrace trace;
    bool converged = false;
};

/// Gradient ascent on the demonstration log-likelihood from a seeded
/// 0.1-scaled normal initialization. Stops when the gradient sup-norm
/// drops below grad_tol or after max_iters. Throws std::runtime_error if
/// theta becomes non-finite.
MaxentResult run_maxent_irl(const TabularMdp& mdp, const FeatureMap& features,
                            const DemonstrationSet& demos, const IrlConfig& config);

}  // namespace bcirl

#pragma once

#include <vector>

#include "bcirl/mdp.hpp"

namespace bcirl {

/// Stochastic policy pi(a|s) together with the soft (log-sum-exp) state
/// values it was derived from.
struct SoftPolicy {
    Mat probs;        // num_states x num_actions, rows sum to 1
    Vec soft_values;  // num_states
    bool converged = true;
    int sweeps = 0;
};

/// Expected discounted state-action occupancy D(s, a).
struct VisitationTable {
    Mat counts;  // num_states x num_actions
    int horizon = 0;

    double total() const { return counts.sum(); }
};

/// Nonzero successors of each (s, a) row, extracted once from the dense
/// kernel so the solver sweeps touch only actual transitions. The dense
/// table in TabularMdp stays the storage of record.
struct SparseTransitions {
    struct Entry {
        int next;
        double prob;
    };

    int num_states = 0;
    int num_actions = 0;
    std::vector<Entry> entries;  // grouped by sa row
    std::vector<int> offsets;    // size num_states * num_actions + 1

    static SparseTransitions compile(const TabularMdp& mdp);
};

/// Soft value iteration: V(s) = log sum_a exp(r(s,a) + gamma E[V(s')]),
/// iterated until the sup-norm change in V drops below `tol` or
/// `max_sweeps` is reached. Never throws on non-convergence; the returned
/// policy carries a `converged` flag. Log-sum-exp uses max subtraction.
/// `warm_start` (length num_states) seeds V; zeros otherwise.
SoftPolicy soft_value_iteration(const SparseTransitions& trans, const Vec& rewards,
                                double discount, double tol, int max_sweeps,
                                const Vec* warm_start = nullptr);

SoftPolicy soft_value_iteration(const TabularMdp& mdp, const FeatureMap& features,
                                const RewardParams& theta, double tol = 1e-6,
                                int max_sweeps = 10000, const Vec* warm_start = nullptr);

/// Forward pass of the policy-induced chain from `start_dist`:
/// D(s,a) = sum_{t<horizon} gamma^t mu_t(s) pi(a|s).
VisitationTable visitation_from_policy(const SparseTransitions& trans, const SoftPolicy& policy,
                                       const Vec& start_dist, int horizon, double gamma);

VisitationTable visitation_from_policy(const TabularMdp& mdp, const SoftPolicy& policy,
                                       const Vec& start_dist, int horizon, double gamma);

/// Weighted empirical discounted visitation of the demonstrations:
/// D(s,a) = sum_i weights[i] sum_t gamma^t [ (s_t,a_t)^i == (s,a) ].
VisitationTable visitation_from_demos(const DemonstrationSet& demos, const Vec& weights,
                                      double gamma, int num_states, int num_actions);

/// log P(tau | policy, mdp) = sum_t [log pi(a_t|s_t) + log P(s_{t+1}|s_t,a_t)];
/// the final recorded step contributes only its policy term. A zero
/// probability action or transition yields -infinity rather than throwing.
double trajectory_log_likelihood(const TabularMdp& mdp, const SoftPolicy& policy,
                                 const Trajectory& tau);

}  // namespace bcirl

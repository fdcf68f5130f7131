#pragma once

#include <vector>

#include "bcirl/em.hpp"
#include "bcirl/mdp.hpp"
#include "bcirl/soft_solver.hpp"

namespace bcirl {

/// One row of a run-level metrics file.
struct MetricRecord {
    int iteration = 0;
    double feature_gap_ms = 0.0;  // mean-squared norm of the feature expectation difference
    double loglik = 0.0;
    int num_clusters = 0;
    double cluster_purity = 0.0;
    double wall_ms = 0.0;
};

/// Mean-squared norm (1/k) sum_d (a_d - b_d)^2. Throws on length mismatch.
double feature_expectation_gap(const Vec& expert_fe, const Vec& learned_fe);

/// Feature expectation of a policy's visitation from the MDP's initial
/// distribution: sum_{s,a} D(s,a) phi(s,a).
Vec policy_feature_expectation(const TabularMdp& mdp, const FeatureMap& features,
                               const SoftPolicy& policy, double gamma, int horizon);

/// Assigns every demo to its argmax cluster; purity is the fraction of
/// demos covered by their cluster's majority label.
double cluster_purity(const ResponsibilityMatrix& beta, const std::vector<int>& labels);

/// Adjusted Rand index between the argmax clustering and the labels.
double adjusted_rand_index(const ResponsibilityMatrix& beta, const std::vector<int>& labels);

struct ClusterMatch {
    std::vector<int> learned_to_true;  // -1 for unmatched learned clusters
    std::vector<double> gaps;          // same length as learned clusters, NaN when unmatched
};

/// Greedy minimum-gap bipartite matching between learned and ground-truth
/// reward sets, comparing the feature expectations of their soft policies
/// from the MDP's initial distribution.
ClusterMatch match_clusters_to_truth(const std::vector<RewardParams>& learned,
                                     const std::vector<RewardParams>& truth,
                                     const TabularMdp& mdp, const FeatureMap& features,
                                     double gamma, int horizon);

/// Detection time of a target cluster count on a stochastic-EM trace: the
/// first iteration from which `counts` equals `target` for at least
/// `window` consecutive sweeps (a stretch running into the end of the
/// trace qualifies); -1 if the count is never sustained.
int sustained_count_iteration(const std::vector<int>& counts, int target, int window);

}  // namespace bcirl

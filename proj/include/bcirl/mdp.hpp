#pragma once

#include <utility>
#include <vector>

#include <Eigen/Core>

namespace bcirl {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Tolerance used when checking that probability vectors sum to one.
inline constexpr double kProbTol = 1e-9;

/// Finite MDP with a dense transition kernel. Rows of `transition` are
/// indexed by sa_index(s, a) and hold the distribution over next states.
/// All types in this header are immutable after construction and safe to
/// share read-only across threads.
struct TabularMdp {
    int num_states = 0;
    int num_actions = 0;
    Mat transition;    // (num_states * num_actions) x num_states
    double discount = 0.0;
    Vec initial_dist;  // num_states

    int sa_index(int s, int a) const { return s * num_actions + a; }
    double prob(int s, int a, int next) const { return transition(sa_index(s, a), next); }

    /// Throws std::invalid_argument if any structural invariant is violated:
    /// row-stochastic transitions, normalized initial distribution,
    /// discount in [0, 1).
    void validate() const;
};

/// Per-(state, action) feature table, shared across all behavior clusters.
struct FeatureMap {
    int dim = 0;
    Mat values;  // (num_states * num_actions) x dim

    Vec features(const TabularMdp& mdp, int s, int a) const {
        return values.row(mdp.sa_index(s, a)).transpose();
    }

    void validate(const TabularMdp& mdp) const;
};

/// Linear reward weights; reward(s, a) = theta . features(s, a).
struct RewardParams {
    Vec theta;
};

/// A demonstration: ordered (state, action) pairs. Every recorded pair
/// contributes to feature sums, including the last one.
struct Trajectory {
    std::vector<std::pair<int, int>> steps;

    int length() const { return static_cast<int>(steps.size()); }
};

struct DemonstrationSet {
    std::vector<Trajectory> trajectories;

    int size() const { return static_cast<int>(trajectories.size()); }
    int max_length() const;
};

/// theta . features(s, a). Throws std::invalid_argument on dimension mismatch.
double reward_of(const RewardParams& theta, const FeatureMap& features, const TabularMdp& mdp,
                 int s, int a);

/// Dense reward vector over all (s, a) rows: values * theta.
Vec reward_table(const RewardParams& theta, const FeatureMap& features);

/// Discounted return sum_t gamma^t theta . features(s_t, a_t); equals
/// theta . feature_expectation(features, tau, gamma).
double trajectory_return(const RewardParams& theta, const FeatureMap& features,
                         const TabularMdp& mdp, const Trajectory& tau, double gamma);

/// Discounted per-trajectory feature sum, sum_t gamma^t phi(s_t, a_t).
Vec feature_expectation(const FeatureMap& features, const TabularMdp& mdp, const Trajectory& tau,
                        double gamma);

/// True iff all indices are in range and every observed transition has
/// positive probability under the MDP.
bool validate_trajectory(const TabularMdp& mdp, const Trajectory& tau);

}  // namespace bcirl

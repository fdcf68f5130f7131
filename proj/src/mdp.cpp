#include "bcirl/mdp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bcirl {

void TabularMdp::validate() const {
    if (num_states < 1 || num_actions < 1)
        throw std::invalid_argument("TabularMdp: num_states and num_actions must be positive");
    if (!(discount >= 0.0 && discount < 1.0))
        throw std::invalid_argument("TabularMdp: discount must be in [0, 1)");
    if (transition.rows() != static_cast<long>(num_states) * num_actions ||
        transition.cols() != num_states)
        throw std::invalid_argument("TabularMdp: transition table has wrong shape");
    if (initial_dist.size() != num_states)
        throw std::invalid_argument("TabularMdp: initial_dist has wrong length");

    for (long row = 0; row < transition.rows(); ++row) {
        double sum = 0.0;
        for (int next = 0; next < num_states; ++next) {
            const double p = transition(row, next);
            if (!(p >= 0.0) || !std::isfinite(p))
                throw std::invalid_argument("TabularMdp: negative or non-finite transition at row " +
                                            std::to_string(row));
            sum += p;
        }
        if (std::abs(sum - 1.0) > kProbTol)
            throw std::invalid_argument("TabularMdp: transition row " + std::to_string(row) +
                                        " sums to " + std::to_string(sum));
    }

    double sum = 0.0;
    for (int s = 0; s < num_states; ++s) {
        if (!(initial_dist[s] >= 0.0))
            throw std::invalid_argument("TabularMdp: negative initial_dist entry");
        sum += initial_dist[s];
    }
    if (std::abs(sum - 1.0) > kProbTol)
        throw std::invalid_argument("TabularMdp: initial_dist sums to " + std::to_string(sum));
}

void FeatureMap::validate(const TabularMdp& mdp) const {
    if (dim < 1) throw std::invalid_argument("FeatureMap: dim must be >= 1");
    if (values.rows() != static_cast<long>(mdp.num_states) * mdp.num_actions ||
        values.cols() != dim)
        throw std::invalid_argument("FeatureMap: values table has wrong shape");
    if (!values.allFinite()) throw std::invalid_argument("FeatureMap: non-finite feature value");
}

int DemonstrationSet::max_length() const {
    int m = 0;
    for (const auto& tau : trajectories) m = std::max(m, tau.length());
    return m;
}

double reward_of(const RewardParams& theta, const FeatureMap& features, const TabularMdp& mdp,
                 int s, int a) {
    if (theta.theta.size() != features.dim)
        throw std::invalid_argument("reward_of: theta length does not match feature dim");
    if (s < 0 || s >= mdp.num_states || a < 0 || a >= mdp.num_actions)
        throw std::invalid_argument("reward_of: state or action index out of range");
    return features.values.row(mdp.sa_index(s, a)).dot(theta.theta);
}

Vec reward_table(const RewardParams& theta, const FeatureMap& features) {
    if (theta.theta.size() != features.dim)
        throw std::invalid_argument("reward_table: theta length does not match feature dim");
    return features.values * theta.theta;
}

double trajectory_return(const RewardParams& theta, const FeatureMap& features,
                         const TabularMdp& mdp, const Trajectory& tau, double gamma) {
    if (tau.steps.empty()) throw std::invalid_argument("trajectory_return: empty trajectory");
    double total = 0.0;
    double w = 1.0;
    for (const auto& [s, a] : tau.steps) {
        total += w * reward_of(theta, features, mdp, s, a);
        w *= gamma;
    }
    return total;
}

Vec feature_expectation(const FeatureMap& features, const TabularMdp& mdp, const Trajectory& tau,
                        double gamma) {
    if (tau.steps.empty()) throw std::invalid_argument("feature_expectation: empty trajectory");
    Vec fe = Vec::Zero(features.dim);
    double w = 1.0;
    for (const auto& [s, a] : tau.steps) {
        fe += w * features.values.row(mdp.sa_index(s, a)).transpose();
        w *= gamma;
    }
    return fe;
}

bool validate_trajectory(const TabularMdp& mdp, const Trajectory& tau) {
    if (tau.steps.empty()) return false;
    for (std::size_t t = 0; t < tau.steps.size(); ++t) {
        const auto [s, a] = tau.steps[t];
        if (s < 0 || s >= mdp.num_states || a < 0 || a >= mdp.num_actions) return false;
        if (t + 1 < tau.steps.size()) {
            const int next = tau.steps[t + 1].first;
            if (next < 0 || next >= mdp.num_states) return false;
            if (!(mdp.prob(s, a, next) > 0.0)) return false;
        }
    }
    return true;
}

}  // namespace bcirl

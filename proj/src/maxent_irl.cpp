#include "bcirl/maxent_irl.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "bcirl/rng.hpp"

namespace bcirl {

int IrlConfig::effective_horizon(const DemonstrationSet& demos) const {
    if (horizon > 0) return horizon;
    return std::max(1, demos.max_length());
}

DemoStats DemoStats::compute(const DemonstrationSet& demos, const FeatureMap& features,
                             const TabularMdp& mdp, double gamma) {
    if (demos.size() < 1) throw std::invalid_argument("DemoStats: empty demonstration set");
    DemoStats out;
    out.features = Mat(demos.size(), features.dim);
    out.starts.reserve(demos.size());
    out.transition_logs = Vec::Zero(demos.size());
    for (int i = 0; i < demos.size(); ++i) {
        const Trajectory& tau = demos.trajectories[i];
        out.features.row(i) = feature_expectation(features, mdp, tau, gamma).transpose();
        out.starts.push_back(tau.steps.front().first);
        double trans = 0.0;
        for (std::size_t t = 0; t + 1 < tau.steps.size(); ++t) {
            const auto [s, a] = tau.steps[t];
            const double p = mdp.prob(s, a, tau.steps[t + 1].first);
            if (p > 0.0)
                trans += std::log(p);
            else
                trans = -std::numeric_limits<double>::infinity();
        }
        out.transition_logs[i] = trans;
    }
    out.max_length = demos.max_length();
    return out;
}

double model_log_likelihood(const TabularMdp& mdp, const FeatureMap& features,
                            const RewardParams& theta, const SoftPolicy& policy,
                            const Trajectory& tau, double gamma) {
    const Vec fe = feature_expectation(features, mdp, tau, gamma);
    double trans = 0.0;
    for (std::size_t t = 0; t + 1 < tau.steps.size(); ++t) {
        const auto [s, a] = tau.steps[t];
        const double p = mdp.prob(s, a, tau.steps[t + 1].first);
        if (!(p > 0.0)) return -std::numeric_limits<double>::infinity();
        trans += std::log(p);
    }
    return theta.theta.dot(fe) - policy.soft_values[tau.steps.front().first] + trans;
}

Vec model_logliks(const DemoStats& stats, const RewardParams& theta, const SoftPolicy& policy) {
    Vec out = stats.features * theta.theta + stats.transition_logs;
    for (std::size_t i = 0; i < stats.starts.size(); ++i)
        out[static_cast<long>(i)] -= policy.soft_values[stats.starts[i]];
    return out;
}

Vec weighted_gradient(const SparseTransitions& trans, const FeatureMap& features,
                      const SoftPolicy& policy, const DemoStats& stats, const Vec& beta_col,
                      double gamma, int horizon, bool normalized) {
    const int n = static_cast<int>(stats.starts.size());
    if (beta_col.size() != n)
        throw std::invalid_argument("weighted_gradient: beta length != number of demos");
    const double mass = beta_col.sum();
    if (!(mass > 0.0)) return Vec::Zero(features.dim);

    const Vec w = beta_col / mass;
    Vec expert_fe = stats.features.transpose() * w;

    Vec start_dist = Vec::Zero(trans.num_states);
    for (int i = 0; i < n; ++i) start_dist[stats.starts[i]] += w[i];

    const VisitationTable visits =
        visitation_from_policy(trans, policy, start_dist, horizon, gamma);
    Vec policy_fe = Vec::Zero(features.dim);
    const int A = trans.num_actions;
    for (int s = 0; s < trans.num_states; ++s)
        policy_fe +=
            features.values.middleRows(static_cast<long>(s) * A, A).transpose() *
            visits.counts.row(s).transpose();

    Vec grad = expert_fe - policy_fe;
    return normalized ? grad : Vec(mass * grad);
}

Vec maxent_gradient(const TabularMdp& mdp, const FeatureMap& features, const RewardParams& theta,
                    const DemonstrationSet& demos, const IrlConfig& config) {
    const SparseTransitions trans = SparseTransitions::compile(mdp);
    const SoftPolicy policy = soft_value_iteration(trans, reward_table(theta, features),
                                                   mdp.discount, config.vi_tol,
                                                   config.vi_max_sweeps);
    const DemoStats stats = DemoStats::compute(demos, features, mdp, config.gamma);
    return weighted_gradient(trans, features, policy, stats, Vec::Ones(demos.size()),
                             config.gamma, config.effective_horizon(demos), true);
}

double dataset_log_likelihood(const TabularMdp& mdp, const SoftPolicy& policy,
                              const DemonstrationSet& demos) {
    double total = 0.0;
    for (const auto& tau : demos.trajectories)
        total += trajectory_log_likelihood(mdp, policy, tau);
    return total / demos.size();
}

MaxentResult run_maxent_irl(const TabularMdp& mdp, const FeatureMap& features,
                            const DemonstrationSet& demos, const IrlConfig& config) {
    const SparseTransitions trans = SparseTransitions::compile(mdp);
    const DemoStats stats = DemoStats::compute(demos, features, mdp, config.gamma);
    const int horizon = config.effective_horizon(demos);
    const Vec ones = Vec::Ones(demos.size());

    Rng rng(config.seed);
    MaxentResult out;
    out.reward.theta = rng.normal_vector(features.dim, 0.1);

    Vec warm = Vec::Zero(mdp.num_states);
    bool policy_current = false;
    const auto start_time = std::chrono::steady_clock::now();
    for (int iter = 0; iter < config.max_iters; ++iter) {
        out.policy = soft_value_iteration(trans, reward_table(out.reward, features),
                                          mdp.discount, config.vi_tol, config.vi_max_sweeps,
                                          &warm);
        warm = out.policy.soft_values;
        policy_current = true;
        const Vec grad = weighted_gradient(trans, features, out.policy, stats, ones,
                                           config.gamma, horizon, true);
        const double grad_norm = grad.lpNorm<Eigen::Infinity>();

        IrlIterationRecord rec;
        rec.iter = iter;
        rec.log_likelihood = model_logliks(stats, out.reward, out.policy).mean();
        rec.grad_norm = grad_norm;
        rec.theta = out.reward.theta;
        rec.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - start_time)
                          .count();
        out.trace.records.push_back(std::move(rec));

        if (grad_norm < config.grad_tol) {
            out.converged = true;
            break;
        }
        out.reward.theta += config.learning_rate * grad;
        if (!out.reward.theta.allFinite())
            throw std::runtime_error("run_maxent_irl: theta diverged at iteration " +
                                     std::to_string(iter));
        policy_current = false;
    }
    if (!policy_current)
        out.policy = soft_value_iteration(trans, reward_table(out.reward, features), mdp.discount,
                                          config.vi_tol, config.vi_max_sweeps, &warm);
    return out;
}

}  // namespace bcirl

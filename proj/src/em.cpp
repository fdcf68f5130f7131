#include "bcirl/em.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "bcirl/rng.hpp"

namespace bcirl {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(const Vec& x) {
    const double m = x.maxCoeff();
    if (!std::isfinite(m)) return m;
    double sum = 0.0;
    for (long i = 0; i < x.size(); ++i) sum += std::exp(x[i] - m);
    return m + std::log(sum);
}
}  // namespace

Mat demo_cluster_logliks(const TabularMdp& mdp, const std::vector<SoftPolicy>& policies,
                         const DemonstrationSet& demos) {
    Mat out(demos.size(), static_cast<long>(policies.size()));
    for (int i = 0; i < demos.size(); ++i)
        for (std::size_t j = 0; j < policies.size(); ++j)
            out(i, j) = trajectory_log_likelihood(mdp, policies[j], demos.trajectories[i]);
    return out;
}

ResponsibilityMatrix responsibilities_from_logliks(const Mat& logliks, const Vec& prior) {
    const int n = static_cast<int>(logliks.rows());
    const int m = static_cast<int>(logliks.cols());
    if (prior.size() != m)
        throw std::invalid_argument("responsibilities_from_logliks: prior length != clusters");

    ResponsibilityMatrix out;
    out.beta = Mat(n, m);
    Vec scores(m);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j)
            scores[j] = prior[j] > 0.0 ? logliks(i, j) + std::log(prior[j]) : kNegInf;
        const double lse = log_sum_exp(scores);
        if (!std::isfinite(lse)) {
            // Demo impossible under every cluster; fall back to uniform.
            out.beta.row(i).setConstant(1.0 / m);
            continue;
        }
        for (int j = 0; j < m; ++j) out.beta(i, j) = std::exp(scores[j] - lse);
    }
    return out;
}

Mat cluster_model_logliks(const DemoStats& stats, const std::vector<RewardParams>& thetas,
                          const std::vector<SoftPolicy>& policies) {
    if (thetas.size() != policies.size())
        throw std::invalid_argument("cluster_model_logliks: thetas/policies size mismatch");
    Mat out(static_cast<long>(stats.starts.size()), static_cast<long>(thetas.size()));
    for (std::size_t j = 0; j < thetas.size(); ++j)
        out.col(static_cast<long>(j)) = model_logliks(stats, thetas[j], policies[j]);
    return out;
}

ResponsibilityMatrix e_step(const ClusterModel& model, const DemonstrationSet& demos,
                            const TabularMdp& mdp, const FeatureMap& features, double gamma) {
    if (model.size() < 1) throw std::invalid_argument("e_step: empty cluster model");
    if (static_cast<int>(model.policies.size()) != model.size())
        throw std::invalid_argument("e_step: policies not current for thetas");
    const DemoStats stats = DemoStats::compute(demos, features, mdp, gamma);
    return responsibilities_from_logliks(cluster_model_logliks(stats, model.thetas, model.policies),
                                         model.prior);
}

double observed_data_log_likelihood(const Mat& logliks, const Vec& prior) {
    double total = 0.0;
    Vec scores(prior.size());
    for (long i = 0; i < logliks.rows(); ++i) {
        for (long j = 0; j < prior.size(); ++j)
            scores[j] = prior[j] > 0.0 ? logliks(i, j) + std::log(prior[j]) : kNegInf;
        total += log_sum_exp(scores);
    }
    return total;
}

Vec weighted_irl_gradient(const TabularMdp& mdp, const FeatureMap& features,
                          const RewardParams& theta_j, const DemonstrationSet& demos,
                          const Vec& beta_col, double gamma) {
    for (long i = 0; i < beta_col.size(); ++i)
        if (!(beta_col[i] >= 0.0 && beta_col[i] <= 1.0))
            throw std::invalid_argument("weighted_irl_gradient: beta entries must be in [0, 1]");
    const SparseTransitions trans = SparseTransitions::compile(mdp);
    const SoftPolicy policy =
        soft_value_iteration(trans, reward_table(theta_j, features), mdp.discount, 1e-6, 10000);
    const DemoStats stats = DemoStats::compute(demos, features, mdp, gamma);
    return weighted_gradient(trans, features, policy, stats, beta_col, gamma,
                             std::max(1, demos.max_length()), false);
}

Vec m_step_prior(const ResponsibilityMatrix& beta) {
    return beta.beta.colwise().mean().transpose();
}

EmResult run_parametric_bcirl(const TabularMdp& mdp, const FeatureMap& features,
                              const DemonstrationSet& demos, int m, const IrlConfig& config) {
    if (m < 1) throw std::invalid_argument("run_parametric_bcirl: m must be >= 1");
    const SparseTransitions trans = SparseTransitions::compile(mdp);
    const DemoStats stats = DemoStats::compute(demos, features, mdp, config.gamma);
    const int horizon = config.effective_horizon(demos);

    Rng rng(config.seed);
    EmResult out;
    out.model.thetas.resize(m);
    for (int j = 0; j < m; ++j)
        out.model.thetas[j].theta = rng.normal_vector(features.dim, 0.1);
    out.model.prior = Vec::Constant(m, 1.0 / m);
    out.model.policies.resize(m);
    out.cluster_traces.resize(m);

    std::vector<Vec> warm(m, Vec::Zero(mdp.num_states));
    std::vector<Vec> grads(m);
    bool policies_current = false;
    const auto start_time = std::chrono::steady_clock::now();

    for (int iter = 0; iter < config.max_iters; ++iter) {
        for (int j = 0; j < m; ++j) {
            out.model.policies[j] =
                soft_value_iteration(trans, reward_table(out.model.thetas[j], features),
                                     mdp.discount, config.vi_tol, config.vi_max_sweeps, &warm[j]);
            warm[j] = out.model.policies[j].soft_values;
        }
        policies_current = true;

        const Mat logliks = cluster_model_logliks(stats, out.model.thetas, out.model.policies);
        out.beta = responsibilities_from_logliks(logliks, out.model.prior);

        bool all_converged = true;
        for (int j = 0; j < m; ++j) {
            grads[j] = weighted_gradient(trans, features, out.model.policies[j], stats,
                                         out.beta.beta.col(j), config.gamma, horizon, true);
            if (grads[j].lpNorm<Eigen::Infinity>() >= config.grad_tol) all_converged = false;
        }

        EmIterationRecord rec;
        rec.iter = iter;
        rec.observed_loglik = observed_data_log_likelihood(logliks, out.model.prior);
        rec.complete_loglik = 0.0;
        for (int i = 0; i < demos.size(); ++i)
            for (int j = 0; j < m; ++j) {
                const double b = out.beta.beta(i, j);
                if (b > 0.0 && out.model.prior[j] > 0.0)
                    rec.complete_loglik += b * (logliks(i, j) + std::log(out.model.prior[j]));
            }
        rec.grad_norms = Vec(m);
        for (int j = 0; j < m; ++j) rec.grad_norms[j] = grads[j].lpNorm<Eigen::Infinity>();
        rec.psi = out.model.prior;
        rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                                start_time)
                          .count();
        out.records.push_back(rec);

        for (int j = 0; j < m; ++j) {
            IrlIterationRecord crec;
            crec.iter = iter;
            crec.log_likelihood = out.beta.beta.col(j).dot(logliks.col(j));
            crec.grad_norm = rec.grad_norms[j];
            crec.theta = out.model.thetas[j].theta;
            crec.wall_ms = rec.wall_ms;
            out.cluster_traces[j].records.push_back(std::move(crec));
        }

        if (all_converged) {
            out.converged = true;
            break;
        }

        for (int j = 0; j < m; ++j) {
            out.model.thetas[j].theta += config.learning_rate * grads[j];
            for (int extra = 1; extra < config.inner_steps; ++extra) {
                out.model.policies[j] =
                    soft_value_iteration(trans, reward_table(out.model.thetas[j], features),
                                         mdp.discount, config.vi_tol, config.vi_max_sweeps,
                                         &warm[j]);
                warm[j] = out.model.policies[j].soft_values;
                const Vec g = weighted_gradient(trans, features, out.model.policies[j], stats,
                                                out.beta.beta.col(j), config.gamma, horizon, true);
                out.model.thetas[j].theta += config.learning_rate * g;
            }
            if (!out.model.thetas[j].theta.allFinite())
                throw std::runtime_error("run_parametric_bcirl: theta diverged in cluster " +
                                         std::to_string(j));
        }
        out.model.prior = m_step_prior(out.beta);
        policies_current = false;
    }

    if (!policies_current) {
        for (int j = 0; j < m; ++j) {
            out.model.policies[j] =
                soft_value_iteration(trans, reward_table(out.model.thetas[j], features),
                                     mdp.discount, config.vi_tol, config.vi_max_sweeps, &warm[j]);
            warm[j] = out.model.policies[j].soft_values;
        }
        out.beta = responsibilities_from_logliks(
            cluster_model_logliks(stats, out.model.thetas, out.model.policies), out.model.prior);
    }
    return out;
}

}  // namespace bcirl

#include "bcirl/crp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace bcirl {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

Vec crp_prior(const Vec& nc, double alpha, int n) {
    if (!(alpha > 0.0)) throw std::invalid_argument("crp_prior: alpha must be positive");
    (void)n;  // the seated mass plus alpha is the normalizer; equals n + alpha once all demos sit
    for (long j = 0; j < nc.size(); ++j)
        if (!(nc[j] >= 0.0)) throw std::invalid_argument("crp_prior: negative cluster mass");
    Vec p(nc.size() + 1);
    p.head(nc.size()) = nc;
    p[nc.size()] = alpha;
    return p / p.sum();
}

Vec posterior_over_clusters(const Vec& logliks, const Vec& prior_p) {
    if (logliks.size() != prior_p.size())
        throw std::invalid_argument("posterior_over_clusters: logliks/prior size mismatch");
    Vec scores(prior_p.size());
    for (long j = 0; j < prior_p.size(); ++j)
        scores[j] = prior_p[j] > 0.0 ? std::log(prior_p[j]) + logliks[j] : kNegInf;
    const double max_score = scores.maxCoeff();
    if (!std::isfinite(max_score)) return prior_p;  // impossible everywhere; keep the prior
    Vec post(scores.size());
    double sum = 0.0;
    for (long j = 0; j < scores.size(); ++j) {
        post[j] = std::exp(scores[j] - max_score);
        sum += post[j];
    }
    return post / sum;
}

Vec boot_strap(const Vec& beta_prime, int draws, Rng& rng) {
    if (draws < 1) throw std::invalid_argument("boot_strap: draws must be >= 1");
    Vec hist = Vec::Zero(beta_prime.size());
    for (int d = 0; d < draws; ++d) hist[rng.categorical(beta_prime)] += 1.0;
    return hist / draws;
}

namespace detail {

void reseat_demo_in_place(ClusterState& state, int i, const Vec& beta_new,
                          SoftPolicy* candidate_policy, const Vec* candidate_logliks) {
    const int m = state.num_clusters();
    if (beta_new.size() != m && beta_new.size() != m + 1)
        throw std::invalid_argument("reseat_demo: beta_new has wrong length");

    const bool new_cluster = beta_new.size() == m + 1 && beta_new[m] > 0.0;
    if (new_cluster) {
        if (state.candidate_theta.size() == 0)
            throw std::runtime_error("reseat_demo: no candidate theta for the new slot");
        CrpCluster born;
        born.theta.theta = state.candidate_theta;
        if (candidate_policy != nullptr) {
            born.policy = *candidate_policy;
            born.value_cache = born.policy.soft_values;
            if (candidate_logliks != nullptr) born.loglik_cache = *candidate_logliks;
            born.policy_current = true;
        }
        state.clusters.push_back(std::move(born));
        state.candidate_theta = Vec();
        Vec nc(m + 1);
        nc.head(m) = state.nc;
        nc[m] = 0.0;
        state.nc = nc;
        for (auto& beta : state.assignments) {
            Vec grown(m + 1);
            grown.head(m) = beta;
            grown[m] = 0.0;
            beta = grown;
        }
    }

    const int width = state.num_clusters();
    Vec incoming = Vec::Zero(width);
    const long copy = std::min<long>(beta_new.size(), width);
    incoming.head(copy) = beta_new.head(copy);

    state.nc -= state.assignments[i];
    state.assignments[i] = incoming;
    state.nc += incoming;

    for (long j = 0; j < state.nc.size(); ++j) {
        if (state.nc[j] < -1e-6)
            throw std::runtime_error("reseat_demo: cluster mass went negative (bookkeeping)");
        if (state.nc[j] < 0.0) state.nc[j] = 0.0;
    }

    // sparsify: drop clusters whose mass fell below the death threshold.
    std::vector<int> keep;
    for (int j = 0; j < state.num_clusters(); ++j)
        if (state.nc[j] >= kClusterDeathMass) keep.push_back(j);
    if (static_cast<int>(keep.size()) != state.num_clusters()) {
        std::vector<CrpCluster> clusters;
        clusters.reserve(keep.size());
        Vec nc(static_cast<long>(keep.size()));
        for (std::size_t k = 0; k < keep.size(); ++k) {
            clusters.push_back(std::move(state.clusters[keep[k]]));
            nc[k] = state.nc[keep[k]];
        }
        state.clusters = std::move(clusters);
        state.nc = nc;
        for (auto& beta : state.assignments) {
            Vec kept(static_cast<long>(keep.size()));
            for (std::size_t k = 0; k < keep.size(); ++k) kept[k] = beta[keep[k]];
            const double sum = kept.sum();
            beta = sum > 0.0 ? Vec(kept / sum) : kept;
        }
    }
}

}  // namespace detail

ClusterState reseat_demo(ClusterState state, int i, const Vec& beta_new) {
    if (i < 0 || i >= static_cast<int>(state.assignments.size()))
        throw std::invalid_argument("reseat_demo: demo index out of range");
    detail::reseat_demo_in_place(state, i, beta_new, nullptr, nullptr);
    return state;
}

CrpResult run_nonparametric_bcirl(const TabularMdp& mdp, const FeatureMap& features,
                                  const DemonstrationSet& demos, const CrpConfig& config) {
    const int n = demos.size();
    const SparseTransitions trans = SparseTransitions::compile(mdp);
    const DemoStats stats = DemoStats::compute(demos, features, mdp, config.gamma);
    const int horizon = config.effective_horizon(demos);

    Rng rng(config.seed);
    ClusterState state;
    state.assignments.assign(n, Vec());
    state.nc = Vec();

    SoftPolicy candidate_policy;
    Vec candidate_logliks;
    bool candidate_policy_current = false;

    auto demo_logliks = [&](const SoftPolicy& policy) {
        Vec out(n);
        for (int i = 0; i < n; ++i)
            out[i] = trajectory_log_likelihood(mdp, policy, demos.trajectories[i]);
        return out;
    };
    auto ensure_cluster_policy = [&](CrpCluster& cluster) {
        if (cluster.policy_current) return;
        const Vec* warm = cluster.value_cache.size() == mdp.num_states ? &cluster.value_cache
                                                                       : nullptr;
        cluster.policy = soft_value_iteration(trans, reward_table(cluster.theta, features),
                                              mdp.discount, config.vi_tol, config.vi_max_sweeps,
                                              warm);
        cluster.value_cache = cluster.policy.soft_values;
        cluster.loglik_cache = demo_logliks(cluster.policy);
        cluster.policy_current = true;
    };

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);

    CrpResult out;
    const auto start_time = std::chrono::steady_clock::now();
    for (int iter = 0; iter < config.max_iters; ++iter) {
        if (config.shuffle_demos)
            for (int i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(i + 1)]);

        // One shared fresh slot per sweep (Algorithm 1 samples theta_{m+1}
        // once, before the demo loop): the first demo that picks it founds
        // the sweep's newborn cluster, later demos may join that newborn as
        // a regular cluster, and no second slot opens until the next sweep.
        if (config.candidate_sparsity > 0.0) {
            state.candidate_theta = Vec::Zero(features.dim);
            for (int d = 0; d < features.dim; ++d)
                if (rng.uniform() >= config.candidate_sparsity)
                    state.candidate_theta[d] =
                        rng.uniform(-config.theta_prior_scale, config.theta_prior_scale);
        } else {
            state.candidate_theta = rng.normal_vector(features.dim, config.theta_prior_scale);
        }
        candidate_policy_current = false;
        bool slot_open = true;

        for (const int i : order) {
            if (slot_open && !candidate_policy_current) {
                RewardParams candidate{state.candidate_theta};
                candidate_policy =
                    soft_value_iteration(trans, reward_table(candidate, features), mdp.discount,
                                         config.vi_tol, config.vi_max_sweeps);
                candidate_logliks = demo_logliks(candidate_policy);
                candidate_policy_current = true;
            }

            const int m_now = state.num_clusters();
            Vec prior;
            Vec logliks;
            if (slot_open) {
                prior = crp_prior(state.nc, config.alpha, n);
                logliks = Vec(m_now + 1);
                logliks[m_now] = candidate_logliks[i];
            } else {
                prior = state.nc / state.nc.sum();
                logliks = Vec(m_now);
            }
            for (int j = 0; j < m_now; ++j) {
                ensure_cluster_policy(state.clusters[j]);
                logliks[j] = state.clusters[j].loglik_cache[i];
            }

            const Vec beta_prime = posterior_over_clusters(logliks, prior);
            const Vec beta_new = boot_strap(beta_prime, config.resample_draws, rng);

            const bool promotes = slot_open && beta_new.size() == m_now + 1 && beta_new[m_now] > 0.0;
            detail::reseat_demo_in_place(state, i, beta_new,
                                         promotes ? &candidate_policy : nullptr,
                                         promotes ? &candidate_logliks : nullptr);
            if (promotes) {
                slot_open = false;
                // Specialize the newborn to its founding member right away;
                // an unfitted cluster cannot hold members past the next sweep.
                const int born = state.num_clusters() - 1;
                CrpCluster& cluster = state.clusters[born];
                for (int step = 0; step < config.newborn_ascent_steps; ++step) {
                    ensure_cluster_policy(cluster);
                    Vec beta_col(n);
                    for (int d = 0; d < n; ++d) beta_col[d] = state.assignments[d][born];
                    const Vec grad = weighted_gradient(trans, features, cluster.policy, stats,
                                                       beta_col, config.gamma, horizon, true);
                    cluster.theta.theta += config.learning_rate * grad;
                    cluster.policy_current = false;
                }
            }
        }
        state.candidate_theta = Vec();

        // Exact mass refresh; the incremental nc must agree with the column
        // sums of the assignments after every sweep.
        Vec exact = Vec::Zero(state.num_clusters());
        for (const auto& beta : state.assignments) exact += beta;
        if ((exact - state.nc).lpNorm<Eigen::Infinity>() > 1e-6)
            throw std::runtime_error("run_nonparametric_bcirl: nc bookkeeping drifted");
        state.nc = exact;

        if (config.resample_draws == 1 && state.num_clusters() > n)
            throw std::runtime_error("run_nonparametric_bcirl: more clusters than demos");

        const int m = state.num_clusters();
        Mat logliks(n, m);
        for (int j = 0; j < m; ++j) {
            ensure_cluster_policy(state.clusters[j]);
            logliks.col(j) = state.clusters[j].loglik_cache;
        }

        CrpIterationRecord rec;
        rec.iter = iter;
        rec.num_clusters = m;
        rec.total_loglik = observed_data_log_likelihood(logliks, state.nc / n);
        rec.masses = state.nc;
        rec.grad_norms = Vec(m);

        bool all_converged = m > 0;
        for (int j = 0; j < m; ++j) {
            Vec beta_col(n);
            for (int i = 0; i < n; ++i) beta_col[i] = state.assignments[i][j];
            const Vec grad = weighted_gradient(trans, features, state.clusters[j].policy, stats,
                                               beta_col, config.gamma, horizon, true);
            rec.grad_norms[j] = grad.lpNorm<Eigen::Infinity>();
            if (rec.grad_norms[j] >= config.grad_tol) all_converged = false;
            state.clusters[j].theta.theta += config.learning_rate * grad;
            state.clusters[j].policy_current = false;
            if (!state.clusters[j].theta.theta.allFinite())
                throw std::runtime_error("run_nonparametric_bcirl: theta diverged in cluster " +
                                         std::to_string(j));
        }

        rec.thetas.reserve(m);
        for (const auto& cluster : state.clusters) rec.thetas.push_back(cluster.theta.theta);
        rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                                start_time)
                          .count();
        out.trace.push_back(std::move(rec));

        if (all_converged) {
            out.converged = true;
            break;
        }
    }

    const int m = state.num_clusters();
    out.model.thetas.resize(m);
    out.model.policies.resize(m);
    for (int j = 0; j < m; ++j) {
        ensure_cluster_policy(state.clusters[j]);
        out.model.thetas[j] = state.clusters[j].theta;
        out.model.policies[j] = state.clusters[j].policy;
    }
    out.model.prior = m > 0 ? Vec(state.nc / n) : Vec();
    out.beta.beta = Mat(n, m);
    for (int i = 0; i < n; ++i) out.beta.beta.row(i) = state.assignments[i].transpose();
    return out;
}

}  // namespace bcirl

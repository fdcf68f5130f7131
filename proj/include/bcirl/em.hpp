#pragma once

#include <vector>

#include "bcirl/maxent_irl.hpp"
#include "bcirl/mdp.hpp"
#include "bcirl/soft_solver.hpp"

namespace bcirl {

/// Mixture of reward functions: one weight vector per behavior cluster,
/// a prior over clusters, and the cached soft policy of each cluster.
struct ClusterModel {
    std::vector<RewardParams> thetas;
    Vec prior;                         // Psi, sums to 1
    std::vector<SoftPolicy> policies;  // one per cluster, current for thetas

    int size() const { return static_cast<int>(thetas.size()); }
};

/// beta(i, j) = posterior probability that demonstration i came from
/// cluster j; every row is a distribution.
struct ResponsibilityMatrix {
    Mat beta;  // n x m

    int num_demos() const { return static_cast<int>(beta.rows()); }
    int num_clusters() const { return static_cast<int>(beta.cols()); }
};

/// Product-form log P(tau_i | theta_j) for every demonstration/cluster
/// pair; used for reporting and model comparison.
Mat demo_cluster_logliks(const TabularMdp& mdp, const std::vector<SoftPolicy>& policies,
                         const DemonstrationSet& demos);

/// Model log-likelihood matrix (see model_log_likelihood) for every
/// demonstration/cluster pair; this is the family the EM steps ascend.
Mat cluster_model_logliks(const DemoStats& stats, const std::vector<RewardParams>& thetas,
                          const std::vector<SoftPolicy>& policies);

/// Row-normalized responsibilities from log-likelihoods and the prior,
/// computed in log space. A row whose entries are all -infinity becomes
/// uniform.
ResponsibilityMatrix responsibilities_from_logliks(const Mat& logliks, const Vec& prior);

/// E-step: beta(i, j) proportional to P(tau_i | theta_j) Psi(c_j), with
/// P the maximum entropy trajectory model of model_log_likelihood.
ResponsibilityMatrix e_step(const ClusterModel& model, const DemonstrationSet& demos,
                            const TabularMdp& mdp, const FeatureMap& features, double gamma);

/// Observed-data log-likelihood sum_i ln sum_j P(tau_i|theta_j) Psi(c_j).
double observed_data_log_likelihood(const Mat& logliks, const Vec& prior);

/// Beta-weighted IRL gradient for one cluster:
/// sum_i beta_ij phi(tau_i) - sum_{s,a} D_beta(s,a|theta_j) phi(s,a),
/// where the policy visitation starts from the beta-weighted empirical
/// start distribution and is scaled by sum_i beta_ij. An all-zero column
/// (empty cluster) yields a zero gradient.
Vec weighted_irl_gradient(const TabularMdp& mdp, const FeatureMap& features,
                          const RewardParams& theta_j, const DemonstrationSet& demos,
                          const Vec& beta_col, double gamma);

/// M-step prior update: column means of beta.
Vec m_step_prior(const ResponsibilityMatrix& beta);

struct EmIterationRecord {
    int iter = 0;
    double observed_loglik = 0.0;  // sum_i ln sum_j P(tau_i|theta_j) Psi_j
    double complete_loglik = 0.0;  // sum_ij beta_ij [ln P(tau_i|theta_j) + ln Psi_j]
    Vec grad_norms;                // per-cluster sup-norms
    Vec psi;
    double wall_ms = 0.0;
};

struct EmResult {
    ClusterModel model;
    ResponsibilityMatrix beta;
    std::vector<IrlTrace> cluster_traces;
    std::vector<EmIterationRecord> records;
    bool converged = false;
};

/// Parametric behavior clustering with a fixed number of clusters m:
/// alternates the E-step, config.inner_steps gradient ascent steps per
/// cluster, and the closed-form prior update, until every cluster's
/// gradient sup-norm is below grad_tol or max_iters is reached.
/// With m = 1 this reduces exactly to run_maxent_irl under the same seed.
EmResult run_parametric_bcirl(const TabularMdp& mdp, const FeatureMap& features,
                              const DemonstrationSet& demos, int m, const IrlConfig& config);

}  // namespace bcirl

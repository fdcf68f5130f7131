#pragma once

#include <vector>

#include "bcirl/em.hpp"
#include "bcirl/maxent_irl.hpp"
#include "bcirl/mdp.hpp"
#include "bcirl/rng.hpp"
#include "bcirl/soft_solver.hpp"

namespace bcirl {

/// Configuration for nonparametric behavior clustering. `alpha` is the
/// CRP concentration (the step size lives in learning_rate; the two are
/// distinct parameters). `resample_draws` is the number of categorical
/// samples drawn when bootstrapping a reseating distribution; 1 gives the
/// hard assignments of classical stochastic EM.
struct CrpConfig : IrlConfig {
    double alpha = 3.0;
    int resample_draws = 1;
    double theta_prior_scale = 0.1;
    bool shuffle_demos = false;  // randomize sweep order instead of dataset order
    /// Ascent steps applied to a cluster right after its birth, fitting it
    /// to the demonstration that opened it. A freshly sampled theta is a
    /// near-uniform policy that cannot retain a member against adapted
    /// clusters, so the CRP's escape-from-local-minima channel only works
    /// if newborns specialize immediately.
    int newborn_ascent_steps = 12;
    /// Fraction of zero entries in sampled candidate rewards. Zero keeps
    /// the dense normal sampler; positive values draw sparse rewards with
    /// nonzero entries uniform in [-theta_prior_scale, theta_prior_scale],
    /// matching benchmarks whose ground-truth rewards are sparse.
    double candidate_sparsity = 0.0;
};

/// Mass below which a cluster is removed by sparsify.
inline constexpr double kClusterDeathMass = 1e-12;

struct CrpCluster {
    RewardParams theta;
    SoftPolicy policy;
    Vec value_cache;    // warm start for the next solve
    Vec loglik_cache;   // model log-likelihood of every demo; valid while policy_current
    bool policy_current = false;
};

/// Mutable state of the reseating sweep: the live clusters, each demo's
/// responsibility vector over them, the per-cluster mass vector nc, and
/// the freshly sampled candidate weights for the would-be new cluster.
struct ClusterState {
    std::vector<CrpCluster> clusters;
    std::vector<Vec> assignments;  // beta_i, each of length clusters.size()
    Vec nc;                        // per-cluster mass, nc[j] == sum_i beta_i[j]
    Vec candidate_theta;           // size 0 when no candidate is pending

    int num_clusters() const { return static_cast<int>(clusters.size()); }
};

/// CRP seating prior over existing clusters plus one new slot:
/// normalize(merge(nc, [alpha])). With all n demos seated this equals
/// nc_k / (n + alpha) per cluster and alpha / (n + alpha) for the new slot.
Vec crp_prior(const Vec& nc, double alpha, int n);

/// Posterior over cluster slots for one demonstration, from the per-slot
/// log-likelihoods (model_log_likelihood of the demo under each cluster,
/// the last slot being the freshly sampled candidate):
/// beta'_j proportional to prior_p[j] * exp(logliks[j]), normalized in log
/// space. If the demo is impossible under every slot, the prior is
/// returned unchanged.
Vec posterior_over_clusters(const Vec& logliks, const Vec& prior_p);

/// Weighted resampling: draws `draws` categorical samples from beta_prime
/// and returns the normalized histogram. draws = 1 yields a one-hot
/// vector; zero entries discard residual mass in unlikely clusters.
Vec boot_strap(const Vec& beta_prime, int draws, Rng& rng);

/// Moves demo i to the distribution beta_new: nc <- nc - beta_i + beta_new.
/// If beta_new has one more entry than there are clusters and that entry
/// holds mass, the pending candidate_theta is promoted to a real cluster.
/// Clusters whose mass drops below kClusterDeathMass are removed and all
/// responsibility vectors are reindexed. Throws std::runtime_error if the
/// mass bookkeeping drifts beyond 1e-6.
ClusterState reseat_demo(ClusterState state, int i, const Vec& beta_new);

namespace detail {
void reseat_demo_in_place(ClusterState& state, int i, const Vec& beta_new,
                          SoftPolicy* candidate_policy, const Vec* candidate_logliks);
}

struct CrpIterationRecord {
    int iter = 0;
    int num_clusters = 0;
    double total_loglik = 0.0;  // sum_i ln sum_j (nc_j/n) P(tau_i|theta_j)
    Vec masses;
    Vec grad_norms;
    std::vector<Vec> thetas;
    double wall_ms = 0.0;
};

struct CrpResult {
    ClusterModel model;
    ResponsibilityMatrix beta;
    std::vector<CrpIterationRecord> trace;
    bool converged = false;
};

/// Nonparametric behavior clustering: sweeps over demonstrations reseating
/// each one against the CRP posterior with bootstrap resampling, then takes
/// one gradient ascent step per surviving cluster and updates the prior.
/// Terminates when every cluster's (mass-normalized) gradient sup-norm is
/// below grad_tol, or after max_iters sweeps.
CrpResult run_nonparametric_bcirl(const TabularMdp& mdp, const FeatureMap& features,
                                  const DemonstrationSet& demos, const CrpConfig& config);

}  // namespace bcirl

#pragma once

#include <string>
#include <vector>

#include "bcirl/crp.hpp"
#include "bcirl/em.hpp"
#include "bcirl/maxent_irl.hpp"
#include "bcirl/mdp.hpp"

namespace bcirl {

/// File formats. MDP: {"num_states", "num_actions", "discount",
/// "transition"[s][a][s'], "initial_dist"[s]}. Demos: {"trajectories":
/// [[[s, a], ...], ...]}. Labels: {"labels": [...]}. Reward sets:
/// {"thetas": [[...], ...]}. Model: {"clusters": [{"theta": [...],
/// "psi": p}, ...], "beta": [n][m]}.
/// Loaders throw std::runtime_error naming the offending field.

void save_mdp(const TabularMdp& mdp, const std::string& path);
TabularMdp load_mdp(const std::string& path);

void save_features(const FeatureMap& features, int num_states, int num_actions,
                   const std::string& path);
FeatureMap load_features(const std::string& path);

void save_demos(const DemonstrationSet& demos, const std::string& path);
DemonstrationSet load_demos(const std::string& path);

void save_labels(const std::vector<int>& labels, const std::string& path);
std::vector<int> load_labels(const std::string& path);

void save_reward_set(const std::vector<RewardParams>& thetas, const std::string& path);
std::vector<RewardParams> load_reward_set(const std::string& path);

void save_model(const ClusterModel& model, const ResponsibilityMatrix& beta,
                const std::string& path);
struct LoadedModel {
    std::vector<RewardParams> thetas;
    Vec prior;
    Mat beta;
};
LoadedModel load_model(const std::string& path);

/// Trace CSVs. IRL: iter,loglik,grad_inf_norm,wall_ms. EM:
/// iter,em_loglik,grad_norm_j...,psi_j.... CRP:
/// iter,num_clusters,total_loglik,wall_ms,mass_j....
void save_irl_trace(const IrlTrace& trace, const std::string& path);
void save_em_trace(const std::vector<EmIterationRecord>& records, const std::string& path);
void save_crp_trace(const std::vector<CrpIterationRecord>& trace, const std::string& path);

/// Per-iteration reward snapshots: iter,cluster,theta_0,...; consumed by
/// the report command to plot feature-gap curves.
void save_theta_snapshots(const std::vector<CrpIterationRecord>& trace, const std::string& path);
void save_theta_snapshots(const IrlTrace& trace, const std::string& path);
void save_theta_snapshots(const std::vector<IrlTrace>& cluster_traces, const std::string& path);

struct ThetaSnapshot {
    int iter = 0;
    int cluster = 0;
    Vec theta;
};
std::vector<ThetaSnapshot> load_theta_snapshots(const std::string& path);

}  // namespace bcirl

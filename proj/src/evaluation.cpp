#include "bcirl/evaluation.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace bcirl {

double feature_expectation_gap(const Vec& expert_fe, const Vec& learned_fe) {
    if (expert_fe.size() != learned_fe.size())
        throw std::invalid_argument("feature_expectation_gap: length mismatch");
    return (expert_fe - learned_fe).squaredNorm() / expert_fe.size();
}

Vec policy_feature_expectation(const TabularMdp& mdp, const FeatureMap& features,
                               const SoftPolicy& policy, double gamma, int horizon) {
    const VisitationTable visits =
        visitation_from_policy(mdp, policy, mdp.initial_dist, horizon, gamma);
    Vec fe = Vec::Zero(features.dim);
    const int A = mdp.num_actions;
    for (int s = 0; s < mdp.num_states; ++s)
        fe += features.values.middleRows(static_cast<long>(s) * A, A).transpose() *
              visits.counts.row(s).transpose();
    return fe;
}

namespace {

std::vector<int> argmax_assignment(const ResponsibilityMatrix& beta) {
    std::vector<int> out(beta.num_demos());
    for (int i = 0; i < beta.num_demos(); ++i) {
        int best = 0;
        for (int j = 1; j < beta.num_clusters(); ++j)
            if (beta.beta(i, j) > beta.beta(i, best)) best = j;
        out[i] = best;
    }
    return out;
}

}  // namespace

double cluster_purity(const ResponsibilityMatrix& beta, const std::vector<int>& labels) {
    if (static_cast<int>(labels.size()) != beta.num_demos())
        throw std::invalid_argument("cluster_purity: labels length != number of demos");
    const auto assignment = argmax_assignment(beta);
    const int n = beta.num_demos();
    double covered = 0.0;
    for (int j = 0; j < beta.num_clusters(); ++j) {
        std::map<int, int> counts;
        for (int i = 0; i < n; ++i)
            if (assignment[i] == j) ++counts[labels[i]];
        int majority = 0;
        for (const auto& [label, count] : counts) majority = std::max(majority, count);
        covered += majority;
    }
    return covered / n;
}

double adjusted_rand_index(const ResponsibilityMatrix& beta, const std::vector<int>& labels) {
    if (static_cast<int>(labels.size()) != beta.num_demos())
        throw std::invalid_argument("adjusted_rand_index: labels length != number of demos");
    const auto assignment = argmax_assignment(beta);
    const int n = beta.num_demos();

    std::map<std::pair<int, int>, int> cells;
    std::map<int, int> row_sums, col_sums;
    for (int i = 0; i < n; ++i) {
        ++cells[{assignment[i], labels[i]}];
        ++row_sums[assignment[i]];
        ++col_sums[labels[i]];
    }
    auto choose2 = [](double x) { return x * (x - 1.0) / 2.0; };
    double sum_cells = 0.0, sum_rows = 0.0, sum_cols = 0.0;
    for (const auto& [key, c] : cells) sum_cells += choose2(c);
    for (const auto& [key, c] : row_sums) sum_rows += choose2(c);
    for (const auto& [key, c] : col_sums) sum_cols += choose2(c);
    const double total = choose2(n);
    const double expected = sum_rows * sum_cols / total;
    const double max_index = 0.5 * (sum_rows + sum_cols);
    if (max_index == expected) return 1.0;  // degenerate: single cluster and single label
    return (sum_cells - expected) / (max_index - expected);
}

int sustained_count_iteration(const std::vector<int>& counts, int target, int window) {
    const int n = static_cast<int>(counts.size());
    int run_start = -1;
    for (int t = 0; t < n; ++t) {
        if (counts[t] == target) {
            if (run_start < 0) run_start = t;
            if (t - run_start + 1 >= window) return run_start;
        } else {
            run_start = -1;
        }
    }
    return run_start;  // a stretch reaching the end of the trace qualifies
}

ClusterMatch match_clusters_to_truth(const std::vector<RewardParams>& learned,
                                     const std::vector<RewardParams>& truth,
                                     const TabularMdp& mdp, const FeatureMap& features,
                                     double gamma, int horizon) {
    if (learned.empty() || truth.empty())
        throw std::invalid_argument("match_clusters_to_truth: empty reward list");

    auto fe_of = [&](const RewardParams& theta) {
        const SoftPolicy policy = soft_value_iteration(mdp, features, theta);
        return policy_feature_expectation(mdp, features, policy, gamma, horizon);
    };
    std::vector<Vec> learned_fe, true_fe;
    for (const auto& theta : learned) learned_fe.push_back(fe_of(theta));
    for (const auto& theta : truth) true_fe.push_back(fe_of(theta));

    ClusterMatch out;
    out.learned_to_true.assign(learned.size(), -1);
    out.gaps.assign(learned.size(), std::numeric_limits<double>::quiet_NaN());

    std::vector<bool> learned_used(learned.size(), false), true_used(truth.size(), false);
    const int rounds = static_cast<int>(std::min(learned.size(), truth.size()));
    for (int round = 0; round < rounds; ++round) {
        double best = std::numeric_limits<double>::infinity();
        int bl = -1, bt = -1;
        for (std::size_t l = 0; l < learned.size(); ++l) {
            if (learned_used[l]) continue;
            for (std::size_t t = 0; t < truth.size(); ++t) {
                if (true_used[t]) continue;
                const double gap = feature_expectation_gap(true_fe[t], learned_fe[l]);
                if (gap < best) {
                    best = gap;
                    bl = static_cast<int>(l);
                    bt = static_cast<int>(t);
                }
            }
        }
        learned_used[bl] = true;
        true_used[bt] = true;
        out.learned_to_true[bl] = bt;
        out.gaps[bl] = best;
    }
    return out;
}

}  // namespace bcirl

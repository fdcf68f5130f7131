#include "bcirl/soft_solver.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace bcirl {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

SparseTransitions SparseTransitions::compile(const TabularMdp& mdp) {
    SparseTransitions out;
    out.num_states = mdp.num_states;
    out.num_actions = mdp.num_actions;
    const long rows = mdp.transition.rows();
    out.offsets.resize(rows + 1, 0);
    for (long row = 0; row < rows; ++row) {
        out.offsets[row] = static_cast<int>(out.entries.size());
        for (int next = 0; next < mdp.num_states; ++next) {
            const double p = mdp.transition(row, next);
            if (p > 0.0) out.entries.push_back({next, p});
        }
    }
    out.offsets[rows] = static_cast<int>(out.entries.size());
    return out;
}

SoftPolicy soft_value_iteration(const SparseTransitions& trans, const Vec& rewards,
                                double discount, double tol, int max_sweeps,
                                const Vec* warm_start) {
    if (!(tol > 0.0)) throw std::invalid_argument("soft_value_iteration: tol must be positive");
    if (max_sweeps < 1) throw std::invalid_argument("soft_value_iteration: max_sweeps must be >= 1");
    const int S = trans.num_states;
    const int A = trans.num_actions;
    if (rewards.size() != static_cast<long>(S) * A)
        throw std::invalid_argument("soft_value_iteration: reward vector has wrong length");

    Vec value = (warm_start != nullptr && warm_start->size() == S) ? *warm_start : Vec::Zero(S);
    Vec q(static_cast<long>(S) * A);
    Vec next_value(S);

    SoftPolicy out;
    out.converged = false;
    int sweep = 0;
    for (; sweep < max_sweeps; ++sweep) {
        double delta = 0.0;
        for (int s = 0; s < S; ++s) {
            double max_q = kNegInf;
            for (int a = 0; a < A; ++a) {
                const int row = s * A + a;
                double ev = 0.0;
                for (int e = trans.offsets[row]; e < trans.offsets[row + 1]; ++e)
                    ev += trans.entries[e].prob * value[trans.entries[e].next];
                const double qa = rewards[row] + discount * ev;
                q[row] = qa;
                if (qa > max_q) max_q = qa;
            }
            double sum = 0.0;
            for (int a = 0; a < A; ++a) sum += std::exp(q[s * A + a] - max_q);
            const double v = max_q + std::log(sum);
            delta = std::max(delta, std::abs(v - value[s]));
            next_value[s] = v;
        }
        value = next_value;
        if (delta < tol) {
            out.converged = true;
            ++sweep;
            break;
        }
    }

    // One more Q evaluation against the final V so the policy matches it.
    out.probs = Mat(S, A);
    for (int s = 0; s < S; ++s) {
        double max_q = kNegInf;
        for (int a = 0; a < A; ++a) {
            const int row = s * A + a;
            double ev = 0.0;
            for (int e = trans.offsets[row]; e < trans.offsets[row + 1]; ++e)
                ev += trans.entries[e].prob * value[trans.entries[e].next];
            q[row] = rewards[row] + discount * ev;
            if (q[row] > max_q) max_q = q[row];
        }
        double sum = 0.0;
        for (int a = 0; a < A; ++a) sum += std::exp(q[s * A + a] - max_q);
        for (int a = 0; a < A; ++a) out.probs(s, a) = std::exp(q[s * A + a] - max_q) / sum;
    }
    out.soft_values = value;
    out.sweeps = sweep;
    return out;
}

SoftPolicy soft_value_iteration(const TabularMdp& mdp, const FeatureMap& features,
                                const RewardParams& theta, double tol, int max_sweeps,
                                const Vec* warm_start) {
    const SparseTransitions trans = SparseTransitions::compile(mdp);
    return soft_value_iteration(trans, reward_table(theta, features), mdp.discount, tol,
                                max_sweeps, warm_start);
}

VisitationTable visitation_from_policy(const SparseTransitions& trans, const SoftPolicy& policy,
                                       const Vec& start_dist, int horizon, double gamma) {
    if (horizon < 1) throw std::invalid_argument("visitation_from_policy: horizon must be >= 1");
    const int S = trans.num_states;
    const int A = trans.num_actions;
    if (start_dist.size() != S)
        throw std::invalid_argument("visitation_from_policy: start_dist has wrong length");

    VisitationTable out;
    out.horizon = horizon;
    out.counts = Mat::Zero(S, A);
    Vec mu = start_dist;
    Vec mu_next(S);
    double w = 1.0;
    for (int t = 0; t < horizon; ++t) {
        out.counts += w * mu.asDiagonal() * policy.probs;
        if (t + 1 < horizon) {
            mu_next.setZero();
            for (int s = 0; s < S; ++s) {
                if (mu[s] == 0.0) continue;
                for (int a = 0; a < A; ++a) {
                    const double mass = mu[s] * policy.probs(s, a);
                    if (mass == 0.0) continue;
                    const int row = s * A + a;
                    for (int e = trans.offsets[row]; e < trans.offsets[row + 1]; ++e)
                        mu_next[trans.entries[e].next] += mass * trans.entries[e].prob;
                }
            }
            mu = mu_next;
        }
        w *= gamma;
    }
    return out;
}

VisitationTable visitation_from_policy(const TabularMdp& mdp, const SoftPolicy& policy,
                                       const Vec& start_dist, int horizon, double gamma) {
    return visitation_from_policy(SparseTransitions::compile(mdp), policy, start_dist, horizon,
                                  gamma);
}

VisitationTable visitation_from_demos(const DemonstrationSet& demos, const Vec& weights,
                                      double gamma, int num_states, int num_actions) {
    if (weights.size() != demos.size())
        throw std::invalid_argument("visitation_from_demos: weights length != number of demos");
    VisitationTable out;
    out.horizon = demos.max_length();
    out.counts = Mat::Zero(num_states, num_actions);
    for (int i = 0; i < demos.size(); ++i) {
        if (weights[i] < 0.0)
            throw std::invalid_argument("visitation_from_demos: negative weight");
        if (weights[i] == 0.0) continue;
        double w = weights[i];
        for (const auto& [s, a] : demos.trajectories[i].steps) {
            out.counts(s, a) += w;
            w *= gamma;
        }
    }
    return out;
}

double trajectory_log_likelihood(const TabularMdp& mdp, const SoftPolicy& policy,
                                 const Trajectory& tau) {
    double loglik = 0.0;
    for (std::size_t t = 0; t < tau.steps.size(); ++t) {
        const auto [s, a] = tau.steps[t];
        const double pa = policy.probs(s, a);
        if (!(pa > 0.0)) return kNegInf;
        loglik += std::log(pa);
        if (t + 1 < tau.steps.size()) {
            const double pt = mdp.prob(s, a, tau.steps[t + 1].first);
            if (!(pt > 0.0)) return kNegInf;
            loglik += std::log(pt);
        }
    }
    return loglik;
}

}  // namespace bcirl

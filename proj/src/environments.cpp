#include "bcirl/environments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "bcirl/rng.hpp"

namespace bcirl {

MacroGridworld build_macro_gridworld(const MacroGridSpec& spec) {
    if (spec.grid_size < 1 || spec.macro_size < 1 || spec.grid_size % spec.macro_size != 0)
        throw std::invalid_argument("build_macro_gridworld: grid_size must be divisible by macro_size");
    if (!(spec.slip_prob >= 0.0 && spec.slip_prob < 1.0))
        throw std::invalid_argument("build_macro_gridworld: slip_prob must be in [0, 1)");

    const int g = spec.grid_size;
    const int S = g * g;
    const int A = 4;  // north, south, east, west
    const int dr[4] = {-1, 1, 0, 0};
    const int dc[4] = {0, 0, 1, -1};

    MacroGridworld out;
    out.mdp.num_states = S;
    out.mdp.num_actions = A;
    out.mdp.discount = spec.discount;
    if (spec.start_cell < 0) {
        out.mdp.initial_dist = Vec::Constant(S, 1.0 / S);
    } else {
        if (spec.start_cell >= S)
            throw std::invalid_argument("build_macro_gridworld: start_cell out of range");
        out.mdp.initial_dist = Vec::Zero(S);
        out.mdp.initial_dist[spec.start_cell] = 1.0;
    }
    out.mdp.transition = Mat::Zero(static_cast<long>(S) * A, S);

    auto land = [&](int r, int c, int dir) {
        const int nr = r + dr[dir];
        const int nc = c + dc[dir];
        if (nr < 0 || nr >= g || nc < 0 || nc >= g) return r * g + c;  // bounce off the wall
        return nr * g + nc;
    };

    for (int r = 0; r < g; ++r)
        for (int c = 0; c < g; ++c) {
            const int s = r * g + c;
            for (int a = 0; a < A; ++a) {
                const long row = out.mdp.sa_index(s, a);
                out.mdp.transition(row, land(r, c, a)) += 1.0 - spec.slip_prob;
                for (int dir = 0; dir < 4; ++dir)
                    out.mdp.transition(row, land(r, c, dir)) += spec.slip_prob / 4.0;
            }
        }

    const int per_side = g / spec.macro_size;
    const int k = per_side * per_side;
    out.features.dim = k;
    out.features.values = Mat::Zero(static_cast<long>(S) * A, k);
    for (int r = 0; r < g; ++r)
        for (int c = 0; c < g; ++c) {
            const int s = r * g + c;
            const int macro = (r / spec.macro_size) * per_side + (c / spec.macro_size);
            for (int a = 0; a < A; ++a) out.features.values(out.mdp.sa_index(s, a), macro) = 1.0;
        }

    Rng rng(spec.seed);
    auto draw_rewards = [&] {
        std::vector<RewardParams> rewards;
        rewards.reserve(spec.num_rewards);
        for (int j = 0; j < spec.num_rewards; ++j) {
            Vec theta(k);
            for (int d = 0; d < k; ++d) {
                if (rng.uniform() < spec.reward_zero_prob)
                    theta[d] = 0.0;
                else
                    theta[d] = rng.uniform(spec.reward_min, spec.reward_max);
            }
            rewards.push_back(RewardParams{theta});
        }
        return rewards;
    };

    out.mdp.validate();

    if (spec.min_expert_fe_gap <= 0.0 || spec.num_rewards < 2) {
        out.true_rewards = draw_rewards();
        out.features.validate(out.mdp);
        return out;
    }

    // Behaviorally distinct reward sets only: redraw until every pair of
    // expert policies is separated in feature-expectation space.
    for (int attempt = 0; attempt < 200; ++attempt) {
        out.true_rewards = draw_rewards();
        std::vector<Vec> fes;
        for (const auto& theta : out.true_rewards) {
            RewardParams scaled{Vec(spec.expert_reward_scale * theta.theta)};
            const SoftPolicy policy = soft_value_iteration(out.mdp, out.features, scaled);
            const VisitationTable visits = visitation_from_policy(
                out.mdp, policy, out.mdp.initial_dist, spec.fe_gap_horizon, spec.discount);
            Vec fe = Vec::Zero(k);
            for (int s = 0; s < S; ++s)
                fe += out.features.values.middleRows(static_cast<long>(s) * A, A).transpose() *
                      visits.counts.row(s).transpose();
            fes.push_back(std::move(fe));
        }
        double min_gap = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < fes.size(); ++a)
            for (std::size_t b = a + 1; b < fes.size(); ++b)
                min_gap = std::min(min_gap, (fes[a] - fes[b]).squaredNorm() / k);
        if (min_gap >= spec.min_expert_fe_gap) {
            out.features.validate(out.mdp);
            return out;
        }
    }
    throw std::runtime_error("build_macro_gridworld: could not sample distinct rewards");
}

std::vector<SoftPolicy> macro_expert_policies(const MacroGridworld& world,
                                              const MacroGridSpec& spec) {
    std::vector<SoftPolicy> experts;
    experts.reserve(world.true_rewards.size());
    for (const auto& theta : world.true_rewards) {
        RewardParams scaled{Vec(spec.expert_reward_scale * theta.theta)};
        experts.push_back(soft_value_iteration(world.mdp, world.features, scaled));
    }
    return experts;
}

int DrivingLayout::zone_of(int state) const {
    if (state == terminal_state()) return kFar;
    const int x = x_of(state);
    const int lane = lane_of(state);
    for (const auto& [clane, cx] : cars)
        if (std::abs(clane - lane) == 1 && (x - cx == 0 || x - cx == 1)) return kOvertaking;
    for (const auto& [clane, cx] : cars)
        if (std::abs(clane - lane) <= 1 && cx - x >= 0 && cx - x <= 3) return kVicinity;
    return kFar;
}

namespace {

DrivingLayout make_layout(const DrivingGridSpec& spec) {
    DrivingLayout layout;
    layout.lanes = spec.lanes;
    layout.length = spec.length;
    Rng rng(Rng::derive_seed(spec.seed, 17));
    const int lo = 4;
    const int hi = spec.length - 4;
    if (spec.num_other_cars > 0 && hi <= lo)
        throw std::invalid_argument("build_driving_gridworld: track too short for traffic");
    // Longitudinally spread positions; lanes cycle through seeded
    // permutations so every stretch of traffic blocks every lane and both
    // driving styles keep interacting with cars instead of finding an
    // empty corridor.
    std::vector<int> lane_order(spec.lanes);
    std::iota(lane_order.begin(), lane_order.end(), 0);
    for (int c = 0; c < spec.num_other_cars; ++c) {
        if (c % spec.lanes == 0)
            for (int i = spec.lanes - 1; i > 0; --i)
                std::swap(lane_order[i], lane_order[rng.uniform_int(i + 1)]);
        const double frac = (c + 0.5) / spec.num_other_cars;
        int x = lo + static_cast<int>(frac * (hi - lo)) + rng.uniform_int(3) - 1;
        x = std::clamp(x, lo, hi - 1);
        layout.cars.emplace_back(lane_order[c % spec.lanes], x);
    }
    return layout;
}

}  // namespace

DrivingGridworld build_driving_gridworld(const DrivingGridSpec& spec) {
    if (spec.lanes < 1) throw std::invalid_argument("build_driving_gridworld: lanes must be >= 1");
    if (!(spec.action_success > 0.0 && spec.action_success <= 1.0))
        throw std::invalid_argument("build_driving_gridworld: action_success must be in (0, 1]");
    if (spec.length < 2) throw std::invalid_argument("build_driving_gridworld: length must be >= 2");
    const long live = static_cast<long>(spec.lanes) * spec.length;
    if (live + 1 > spec.max_states)
        throw std::invalid_argument("build_driving_gridworld: state space exceeds max_states cap");

    DrivingGridworld out;
    out.layout = make_layout(spec);
    const DrivingLayout& lay = out.layout;
    const int S = lay.num_states();
    const int A = kNumDrivingActions;
    const int advance = spec.agent_speed - spec.traffic_speed;

    out.mdp.num_states = S;
    out.mdp.num_actions = A;
    out.mdp.discount = spec.discount;
    out.mdp.transition = Mat::Zero(static_cast<long>(S) * A, S);

    auto intended = [&](int x, int lane, int a) -> int {
        int nx = x;
        int nlane = lane;
        switch (a) {
            case kForward: nx += advance; break;
            case kLeft: nx += advance, nlane += 1; break;
            case kRight: nx += advance, nlane -= 1; break;
            case kHardLeft: nx += advance + 1, nlane += 1; break;
            case kHardRight: nx += advance + 1, nlane -= 1; break;
            case kBrake: nx -= spec.traffic_speed; break;
            default: break;
        }
        nlane = std::clamp(nlane, 0, spec.lanes - 1);
        if (nx < 0) nx = 0;
        if (nx > spec.length - 1) return lay.terminal_state();
        return lay.state_of(nx, nlane);
    };

    for (int lane = 0; lane < spec.lanes; ++lane)
        for (int x = 0; x < spec.length; ++x) {
            const int s = lay.state_of(x, lane);
            for (int a = 0; a < A; ++a) {
                const long row = out.mdp.sa_index(s, a);
                out.mdp.transition(row, intended(x, lane, a)) += spec.action_success;
                out.mdp.transition(row, s) += 1.0 - spec.action_success;
            }
        }
    for (int a = 0; a < A; ++a)
        out.mdp.transition(out.mdp.sa_index(lay.terminal_state(), a), lay.terminal_state()) = 1.0;

    // Episodes start at the left end in a uniformly random lane.
    out.mdp.initial_dist = Vec::Zero(S);
    for (int lane = 0; lane < spec.lanes; ++lane)
        out.mdp.initial_dist[lay.state_of(0, lane)] = 1.0 / spec.lanes;

    const int k = 3 * A + 1;
    out.features.dim = k;
    out.features.values = Mat::Zero(static_cast<long>(S) * A, k);
    for (int s = 0; s < S; ++s) {
        if (s == lay.terminal_state()) continue;  // absorbed mass collects no features
        const int zone = lay.zone_of(s);
        const double dist =
            static_cast<double>(spec.length - 1 - lay.x_of(s)) / (spec.length - 1);
        for (int a = 0; a < A; ++a) {
            out.features.values(out.mdp.sa_index(s, a), zone * A + a) = 1.0;
            out.features.values(out.mdp.sa_index(s, a), 3 * A) = dist;
        }
    }

    out.mdp.validate();
    out.features.validate(out.mdp);
    return out;
}

namespace {

/// Nearest car at most `window` cells ahead in `lane`; +infinity when none.
double clearance_ahead(const DrivingLayout& lay, int lane, int x, int window) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [clane, cx] : lay.cars)
        if (clane == lane && cx >= x && cx - x <= window) best = std::min(best, double(cx - x));
    return best;
}

int aggressive_main_action(const DrivingLayout& lay, int x, int lane) {
    // Cut in front of the car being overtaken.
    for (const auto& [clane, cx] : lay.cars)
        if (std::abs(clane - lane) == 1 && (x - cx == 0 || x - cx == 1))
            return clane > lane ? kHardLeft : kHardRight;

    // A car straight ahead: swing out to pass, weaving toward traffic.
    const double same = clearance_ahead(lay, lane, x, 3);
    if (std::isfinite(same)) {
        const bool can_left = lane + 1 < lay.lanes;
        const bool can_right = lane - 1 >= 0;
        if (can_left && can_right) {
            // Prefer the side of the next car beyond this one.
            double best_dx = std::numeric_limits<double>::infinity();
            int side = kLeft;
            for (const auto& [clane, cx] : lay.cars) {
                if (cx - x <= same || cx - x > 10 || clane == lane) continue;
                if (cx - x < best_dx) {
                    best_dx = cx - x;
                    side = clane > lane ? kLeft : kRight;
                }
            }
            return side;
        }
        return can_left ? kLeft : kRight;
    }
    return kForward;  // far, or closing in on an adjacent-lane car
}

int evasive_main_action(const DrivingLayout& lay, int x, int lane) {
    // Move away from a car we are alongside.
    for (const auto& [clane, cx] : lay.cars)
        if (std::abs(clane - lane) == 1 && (x - cx == 0 || x - cx == 1)) {
            const int away = clane > lane ? lane - 1 : lane + 1;
            if (away >= 0 && away < lay.lanes) return clane > lane ? kRight : kLeft;
            return kForward;
        }

    // A car within three cells ahead in this or an adjacent lane.
    int threat_lane = -1;
    double threat_dx = std::numeric_limits<double>::infinity();
    for (const auto& [clane, cx] : lay.cars)
        if (std::abs(clane - lane) <= 1 && cx - x >= 0 && cx - x <= 3 && cx - x < threat_dx) {
            threat_dx = cx - x;
            threat_lane = clane;
        }
    if (threat_lane >= 0) {
        if (threat_lane == lane) {
            // Pick the clearer escape lane.
            double best = -1.0;
            int action = kBrake;
            for (const int cand : {lane - 1, lane + 1}) {
                if (cand < 0 || cand >= lay.lanes) continue;
                const double clear = clearance_ahead(lay, cand, x, 3);
                const double score = std::isfinite(clear) ? clear : 100.0;
                if (score > best) {
                    best = score;
                    action = cand > lane ? kLeft : kRight;
                }
            }
            if (best <= 1.0) return kBrake;  // both sides blocked; hang back instead
            return action;
        }
        const int away = threat_lane > lane ? lane - 1 : lane + 1;
        if (away >= 0 && away < lay.lanes) return threat_lane > lane ? kRight : kLeft;
        return kBrake;
    }
    return kForward;
}

}  // namespace

SoftPolicy scripted_policy(DrivingStyle style, const DrivingGridworld& world, double main_prob) {
    if (!(main_prob > 0.0 && main_prob < 1.0))
        throw std::invalid_argument("scripted_policy: main_prob must be in (0, 1)");
    const DrivingLayout& lay = world.layout;
    const int S = lay.num_states();
    const int A = kNumDrivingActions;
    SoftPolicy policy;
    policy.probs = Mat::Constant(S, A, (1.0 - main_prob) / (A - 1));
    policy.soft_values = Vec::Zero(S);
    for (int s = 0; s < S; ++s) {
        if (s == lay.terminal_state()) {
            policy.probs.row(s).setConstant(1.0 / A);
            continue;
        }
        const int x = lay.x_of(s);
        const int lane = lay.lane_of(s);
        const int main = style == DrivingStyle::aggressive ? aggressive_main_action(lay, x, lane)
                                                           : evasive_main_action(lay, x, lane);
        policy.probs(s, main) = main_prob;
    }
    return policy;
}

SoftPolicy scripted_policy(DrivingStyle style, const DrivingGridSpec& spec) {
    return scripted_policy(style, build_driving_gridworld(spec), spec.style_main_prob);
}

namespace {

std::vector<bool> absorbing_states(const TabularMdp& mdp) {
    std::vector<bool> out(mdp.num_states, false);
    for (int s = 0; s < mdp.num_states; ++s) {
        bool absorbing = true;
        for (int a = 0; a < mdp.num_actions && absorbing; ++a)
            if (mdp.prob(s, a, s) < 1.0) absorbing = false;
        out[s] = absorbing;
    }
    return out;
}

int sample_from_row(const Mat& table, long row, Rng& rng) {
    double u = rng.uniform();
    for (long j = 0; j < table.cols(); ++j) {
        u -= table(row, j);
        if (u < 0.0) return static_cast<int>(j);
    }
    return static_cast<int>(table.cols()) - 1;
}

int sample_from_probs(const Vec& probs, Rng& rng) {
    double u = rng.uniform();
    for (long j = 0; j < probs.size(); ++j) {
        u -= probs[j];
        if (u < 0.0) return static_cast<int>(j);
    }
    return static_cast<int>(probs.size()) - 1;
}

Trajectory rollout(const TabularMdp& mdp, const SoftPolicy& policy,
                   const std::vector<bool>& absorbing, int max_len, Rng& rng,
                   double noise_level) {
    Trajectory tau;
    int s = sample_from_probs(mdp.initial_dist, rng);
    for (int t = 0; t < max_len; ++t) {
        if (absorbing[s]) break;
        int a;
        if (noise_level > 0.0 && rng.uniform() < noise_level)
            a = rng.uniform_int(mdp.num_actions);
        else
            a = sample_from_row(policy.probs, s, rng);
        tau.steps.emplace_back(s, a);
        s = sample_from_row(mdp.transition, mdp.sa_index(s, a), rng);
    }
    return tau;
}

}  // namespace

DemonstrationSet generate_demos(const TabularMdp& mdp, const SoftPolicy& policy, int count,
                                int max_len, std::uint64_t seed) {
    if (count < 1) throw std::invalid_argument("generate_demos: count must be >= 1");
    if (max_len < 1) throw std::invalid_argument("generate_demos: max_len must be >= 1");
    const auto absorbing = absorbing_states(mdp);
    DemonstrationSet out;
    out.trajectories.reserve(count);
    for (int d = 0; d < count; ++d) {
        Rng rng(Rng::derive_seed(seed, d));
        Trajectory tau = rollout(mdp, policy, absorbing, max_len, rng, 0.0);
        if (tau.steps.empty())
            throw std::runtime_error("generate_demos: rollout started in an absorbing state");
        out.trajectories.push_back(std::move(tau));
    }
    return out;
}

LabeledDemoSet generate_labeled_demos(const TabularMdp& mdp,
                                      const std::vector<SoftPolicy>& policies,
                                      const std::vector<int>& counts, int max_len,
                                      std::uint64_t seed) {
    if (policies.size() != counts.size())
        throw std::invalid_argument("generate_labeled_demos: policies/counts size mismatch");
    LabeledDemoSet out;
    for (std::size_t j = 0; j < policies.size(); ++j) {
        DemonstrationSet demos =
            generate_demos(mdp, policies[j], counts[j], max_len, Rng::derive_seed(seed, j));
        for (auto& tau : demos.trajectories) {
            out.demos.trajectories.push_back(std::move(tau));
            out.labels.push_back(static_cast<int>(j));
        }
    }
    return out;
}

LabeledDemoSet inject_inconsistent_demos(const LabeledDemoSet& demos, const TabularMdp& mdp,
                                         const SoftPolicy& base, int count, double noise_level,
                                         int max_len, std::uint64_t seed) {
    if (count == 0) return demos;
    if (!(noise_level > 0.0 && noise_level <= 1.0))
        throw std::invalid_argument("inject_inconsistent_demos: noise_level must be in (0, 1]");
    const auto absorbing = absorbing_states(mdp);
    LabeledDemoSet out = demos;
    int noise_label = 0;
    for (const int label : demos.labels) noise_label = std::max(noise_label, label + 1);
    for (int d = 0; d < count; ++d) {
        Rng rng(Rng::derive_seed(seed, 1000003 + d));
        out.demos.trajectories.push_back(
            rollout(mdp, base, absorbing, max_len, rng, noise_level));
        out.labels.push_back(noise_label);
    }
    return out;
}

}  // namespace bcirl

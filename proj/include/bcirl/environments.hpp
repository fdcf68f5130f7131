#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "bcirl/mdp.hpp"
#include "bcirl/soft_solver.hpp"

namespace bcirl {

/// Square gridworld partitioned into macro-cells that act as binary
/// indicator features. Ground-truth rewards are sampled per macro-cell:
/// zero with probability reward_zero_prob, otherwise uniform in
/// [reward_min, reward_max].
struct MacroGridSpec {
    int grid_size = 8;
    int macro_size = 2;
    double slip_prob = 0.2;
    int num_rewards = 3;
    double reward_zero_prob = 0.8;
    double reward_min = -1.0;
    double reward_max = 1.0;
    double discount = 0.9;
    /// Start state for rho0: -1 for uniform starts, otherwise a fixed cell.
    /// Behaviors are only separable from single trajectories when they
    /// conflict, so the clustering experiments start every episode from
    /// one shared cell.
    int start_cell = -1;
    /// Reward scaling applied when deriving the demonstrating experts'
    /// soft policies; the sampled rewards are weak (entries in [-1, 1]),
    /// and unscaled soft policies are nearly uniform.
    double expert_reward_scale = 8.0;
    /// When positive, reward sets are redrawn until every pair of expert
    /// policies differs by at least this feature-expectation gap, so the
    /// sampled behaviors are actually distinct. Zero disables the check
    /// and keeps the raw sampler.
    double min_expert_fe_gap = 0.0;
    int fe_gap_horizon = 24;
    std::uint64_t seed = 0;
};

struct MacroGridworld {
    TabularMdp mdp;
    FeatureMap features;
    std::vector<RewardParams> true_rewards;
};

/// Moves: north, south, east, west. The intended move succeeds with
/// probability 1 - slip_prob; otherwise a uniformly random direction
/// executes. Off-grid moves keep the agent in place.
MacroGridworld build_macro_gridworld(const MacroGridSpec& spec);

/// The demonstrating experts: soft policies of expert_reward_scale * theta
/// for each ground-truth reward.
std::vector<SoftPolicy> macro_expert_policies(const MacroGridworld& world,
                                              const MacroGridSpec& spec);

/// Five-lane driving track in the traffic frame: other cars move at a
/// constant speed, so their positions are fixed relative coordinates and
/// the agent advances by agent_speed - traffic_speed per forward step.
/// Reaching the right end absorbs into a terminal state with zero features.
struct DrivingGridSpec {
    int lanes = 5;
    int length = 40;
    int num_other_cars = 8;
    int agent_speed = 2;
    int traffic_speed = 1;
    double action_success = 0.95;
    double style_main_prob = 0.85;  // probability mass on a scripted style's chosen action
    double discount = 0.95;
    int max_states = 50000;
    std::uint64_t seed = 0;
};

/// Action indices of the driving MDP.
enum DrivingAction {
    kForward = 0,
    kLeft = 1,       // +1 lane while advancing
    kRight = 2,      // -1 lane while advancing
    kHardLeft = 3,   // +1 lane with an extra cell of advance (cutting maneuver)
    kHardRight = 4,  // -1 lane with an extra cell of advance
    kBrake = 5,      // drop back by traffic_speed
};
inline constexpr int kNumDrivingActions = 6;

/// Proximity zones relative to the fixed car pattern.
enum DrivingZone { kFar = 0, kVicinity = 1, kOvertaking = 2 };

struct DrivingLayout {
    int lanes = 0;
    int length = 0;
    std::vector<std::pair<int, int>> cars;  // (lane, x)

    int num_states() const { return lanes * length + 1; }
    int terminal_state() const { return lanes * length; }
    int state_of(int x, int lane) const { return lane * length + x; }
    int x_of(int state) const { return state % length; }
    int lane_of(int state) const { return state / length; }

    /// Zone of a live state: overtaking if some car in an adjacent lane is
    /// alongside or one cell behind the agent; vicinity if some car within
    /// one lane lies at most three cells ahead; far otherwise.
    int zone_of(int state) const;
};

struct DrivingGridworld {
    TabularMdp mdp;
    FeatureMap features;  // 3 zones x 6 actions indicators + distance to goal = 19
    DrivingLayout layout;
};

DrivingGridworld build_driving_gridworld(const DrivingGridSpec& spec);

enum class DrivingStyle { aggressive, evasive };

/// Hard-coded stochastic style policies mapping states to action
/// distributions: the chosen maneuver gets style_main_prob and the rest is
/// spread evenly. Aggressive cuts in front of cars it is overtaking;
/// evasive keeps its distance from every car.
SoftPolicy scripted_policy(DrivingStyle style, const DrivingGridworld& world, double main_prob);
SoftPolicy scripted_policy(DrivingStyle style, const DrivingGridSpec& spec);

/// Demonstrations plus their generating-behavior labels. Labels are for
/// evaluation only and are never passed to a solver.
struct LabeledDemoSet {
    DemonstrationSet demos;
    std::vector<int> labels;
};

/// Seeded rollouts: s0 ~ rho0, a_t ~ pi(.|s_t), s_{t+1} ~ P(.|s_t, a_t),
/// truncated at max_len or on entering an absorbing state.
DemonstrationSet generate_demos(const TabularMdp& mdp, const SoftPolicy& policy, int count,
                                int max_len, std::uint64_t seed);

/// count_j rollouts from each policy, labeled by policy index.
LabeledDemoSet generate_labeled_demos(const TabularMdp& mdp,
                                      const std::vector<SoftPolicy>& policies,
                                      const std::vector<int>& counts, int max_len,
                                      std::uint64_t seed);

/// Appends `count` rollouts from a corrupted policy that takes a uniformly
/// random action with probability noise_level and follows `base` otherwise.
/// The appended demos carry a fresh label (max existing label + 1).
LabeledDemoSet inject_inconsistent_demos(const LabeledDemoSet& demos, const TabularMdp& mdp,
                                         const SoftPolicy& base, int count, double noise_level,
                                         int max_len, std::uint64_t seed);

}  // namespace bcirl

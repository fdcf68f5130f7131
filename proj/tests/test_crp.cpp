#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bcirl/crp.hpp"
#include "bcirl/environments.hpp"
#include "bcirl/evaluation.hpp"
#include "test_util.hpp"

using namespace bcirl;
using namespace bcirl::testutil;

namespace {

/// Environment + dataset for the three-reward clustering experiments:
/// distinct sampled rewards, decisive experts, shared uniform starts.
struct GridScenario {
    MacroGridworld world;
    LabeledDemoSet labeled;

    explicit GridScenario(std::uint64_t seed, int demos_per_reward = 1, int demo_len = 24) {
        MacroGridSpec spec;
        spec.seed = seed;
        spec.min_expert_fe_gap = 0.25;
        world = build_macro_gridworld(spec);
        const auto experts = macro_expert_policies(world, spec);
        std::vector<int> counts(world.true_rewards.size(), demos_per_reward);
        labeled = generate_labeled_demos(world.mdp, experts, counts, demo_len,
                                         Rng::derive_seed(seed, 999));
    }
};

/// CRP configuration used for the gridworld clustering experiments.
CrpConfig grid_crp_config(std::uint64_t seed) {
    CrpConfig config;
    config.gamma = 0.9;
    config.learning_rate = 0.05;
    config.max_iters = 90;
    config.seed = seed;
    config.candidate_sparsity = 0.8;
    config.theta_prior_scale = 8.0;
    return config;
}

std::vector<int> cluster_counts(const CrpResult& result) {
    std::vector<int> counts;
    counts.reserve(result.trace.size());
    for (const auto& rec : result.trace) counts.push_back(rec.num_clusters);
    return counts;
}

}  // namespace

TEST_CASE("crp_prior") {
    SUBCASE("first customer always opens a table") {
        const Vec p = crp_prior(Vec(), 2.5, 0);
        REQUIRE(p.size() == 1);
        CHECK(p[0] == 1.0);
    }
    SUBCASE("hand arithmetic with nc = (5, 3), alpha = 2") {
        Vec nc(2);
        nc << 5.0, 3.0;
        const Vec p = crp_prior(nc, 2.0, 8);
        CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(p[1] == doctest::Approx(0.3).epsilon(1e-15));
        CHECK(p[2] == doctest::Approx(0.2).epsilon(1e-15));
    }
    SUBCASE("sums to one and gives the new slot exactly alpha over the total") {
        Rng rng(71);
        for (int trial = 0; trial < 100; ++trial) {
            const int m = rng.uniform_int(5);
            Vec nc(m);
            double total = 0.0;
            for (int j = 0; j < m; ++j) {
                nc[j] = rng.uniform_int(10);
                total += nc[j];
            }
            const double alpha = 0.5 + rng.uniform_int(5);
            const Vec p = crp_prior(nc, alpha, static_cast<int>(total));
            CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(p[m] == alpha / (total + alpha));  // same division, bitwise equal
        }
    }
    SUBCASE("the default concentration is 3") {
        CrpConfig config;
        CHECK(config.alpha == 3.0);
    }
}

TEST_CASE("posterior_over_clusters") {
    SUBCASE("probability-one cluster against a tiny alpha slot") {
        Vec logliks(2), prior(2);
        logliks << 0.0, -30.0;  // existing cluster explains the demo perfectly
        const double alpha = 1e-6;
        prior << 1.0 / (1.0 + alpha), alpha / (1.0 + alpha);
        const Vec post = posterior_over_clusters(logliks, prior);
        CHECK(post[0] > 1.0 - 1e-6);
        CHECK(post[1] < 1e-6);
        CHECK(post.sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("demo impossible under existing clusters moves to the fresh slot") {
        Vec logliks(3), prior(3);
        logliks << -std::numeric_limits<double>::infinity(),
            -std::numeric_limits<double>::infinity(), -40.0;
        prior << 0.45, 0.45, 0.1;
        const Vec post = posterior_over_clusters(logliks, prior);
        CHECK(post[0] == 0.0);
        CHECK(post[1] == 0.0);
        CHECK(post[2] == doctest::Approx(1.0));
    }
    SUBCASE("uniform prior and equal likelihoods stay uniform") {
        Vec logliks = Vec::Constant(4, -17.0);
        Vec prior = Vec::Constant(4, 0.25);
        const Vec post = posterior_over_clusters(logliks, prior);
        for (int j = 0; j < 4; ++j) CHECK(post[j] == doctest::Approx(0.25).epsilon(1e-12));
    }
    SUBCASE("all-impossible slots fall back to the prior") {
        Vec logliks = Vec::Constant(3, -std::numeric_limits<double>::infinity());
        Vec prior(3);
        prior << 0.2, 0.5, 0.3;
        const Vec post = posterior_over_clusters(logliks, prior);
        CHECK((post - prior).lpNorm<Eigen::Infinity>() == 0.0);
    }
}

TEST_CASE("boot_strap") {
    SUBCASE("one-hot input returns itself for any draw count") {
        Rng rng(81);
        Vec one_hot = Vec::Zero(4);
        one_hot[2] = 1.0;
        for (const int draws : {1, 3, 10}) {
            const Vec out = boot_strap(one_hot, draws, rng);
            CHECK((out - one_hot).lpNorm<Eigen::Infinity>() == 0.0);
        }
    }
    SUBCASE("a fifty-fifty input with one draw is a fair coin over unit vectors") {
        Rng rng(82);
        Vec half = Vec::Constant(2, 0.5);
        int first = 0;
        const int trials = 4000;
        for (int t = 0; t < trials; ++t) {
            const Vec out = boot_strap(half, 1, rng);
            CHECK(out.sum() == 1.0);
            CHECK((out[0] == 1.0 || out[1] == 1.0));
            first += out[0] == 1.0;
        }
        // 3 standard errors of a fair coin over 4000 trials.
        CHECK(std::abs(first / double(trials) - 0.5) < 3.0 * 0.5 / std::sqrt(trials));
    }
    SUBCASE("multi-draw histograms are unbiased") {
        Rng rng(83);
        Vec p(3);
        p << 0.6, 0.3, 0.1;
        const int trials = 20000;
        Vec mean = Vec::Zero(3);
        for (int t = 0; t < trials; ++t) mean += boot_strap(p, 7, rng);
        mean /= trials;
        for (int j = 0; j < 3; ++j) {
            const double se = std::sqrt(p[j] * (1.0 - p[j]) / (7.0 * trials));
            CHECK(std::abs(mean[j] - p[j]) < 3.0 * se);
        }
    }
}

TEST_CASE("reseat_demo bookkeeping") {
    // Two demos both seated in cluster 0.
    ClusterState state;
    CrpCluster cluster;
    cluster.theta.theta = Vec::Zero(2);
    state.clusters.push_back(cluster);
    state.assignments = {Vec::Ones(1), Vec::Ones(1)};
    state.nc = Vec::Constant(1, 2.0);
    state.candidate_theta = Vec::Constant(2, 0.1);

    SUBCASE("reseating into the same cluster changes nothing") {
        const ClusterState next = reseat_demo(state, 0, Vec::Ones(1));
        REQUIRE(next.num_clusters() == 1);
        CHECK(next.nc[0] == 2.0);
    }
    SUBCASE("a one-hot move to the fresh slot splits the counts") {
        Vec move(2);
        move << 0.0, 1.0;
        const ClusterState next = reseat_demo(state, 1, move);
        REQUIRE(next.num_clusters() == 2);
        CHECK(next.nc[0] == 1.0);
        CHECK(next.nc[1] == 1.0);
        CHECK(next.assignments[1][1] == 1.0);
        CHECK(next.candidate_theta.size() == 0);  // consumed by the promotion
    }
    SUBCASE("the last demo leaving a cluster deletes it") {
        Vec move(2);
        move << 0.0, 1.0;
        ClusterState mid = reseat_demo(state, 0, move);
        REQUIRE(mid.num_clusters() == 2);
        // Move demo 1 into the newborn cluster as well; cluster 0 dies.
        Vec join(2);
        join << 0.0, 1.0;
        const ClusterState next = reseat_demo(mid, 1, join);
        REQUIRE(next.num_clusters() == 1);
        CHECK(next.nc[0] == 2.0);
        CHECK(next.assignments[0].size() == 1);
        CHECK(next.assignments[0][0] == 1.0);
    }
}

TEST_CASE("cluster detection on the three-reward gridworld") {
    int detected = 0;
    const int runs = 10;
    for (std::uint64_t run = 0; run < runs; ++run) {
        GridScenario scenario(1000 + run);
        const CrpResult result =
            run_nonparametric_bcirl(scenario.world.mdp, scenario.world.features,
                                    scenario.labeled.demos, grid_crp_config(run));
        const int detect = sustained_count_iteration(cluster_counts(result), 3, 10);
        detected += detect >= 0;
        MESSAGE("run ", run, ": clusters=", result.model.size(), " detect_iter=", detect);
    }
    MESSAGE("detected three clusters in ", detected, "/", runs);
    CHECK(detected >= 8);
}

TEST_CASE("after every sweep the masses balance and responsibilities normalize") {
    GridScenario scenario(77, 2, 20);
    CrpConfig config;
    config.gamma = 0.9;
    config.max_iters = 15;
    config.seed = 4;
    const CrpResult result = run_nonparametric_bcirl(scenario.world.mdp, scenario.world.features,
                                                     scenario.labeled.demos, config);
    const int n = scenario.labeled.demos.size();
    for (const auto& rec : result.trace) CHECK(rec.masses.sum() == doctest::Approx(n).epsilon(1e-6));
    for (int i = 0; i < n; ++i)
        CHECK(result.beta.beta.row(i).sum() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("vanishing alpha keeps the state single-cluster") {
    GridScenario scenario(55, 2, 16);
    CrpConfig config;
    config.gamma = 0.9;
    config.alpha = 1e-8;
    config.max_iters = 100;
    config.seed = 6;
    config.grad_tol = 1e-9;  // run all sweeps
    const CrpResult result = run_nonparametric_bcirl(scenario.world.mdp, scenario.world.features,
                                                     scenario.labeled.demos, config);
    int multi = 0;
    for (const auto& rec : result.trace) multi += rec.num_clusters > 1;
    CHECK(result.model.size() == 1);
    CHECK(multi == 0);
}

TEST_CASE("identical seeds give identical cluster trajectories") {
    GridScenario scenario(66);
    CrpConfig config;
    config.gamma = 0.9;
    config.max_iters = 25;
    config.seed = 9;
    const CrpResult a = run_nonparametric_bcirl(scenario.world.mdp, scenario.world.features,
                                                scenario.labeled.demos, config);
    const CrpResult b = run_nonparametric_bcirl(scenario.world.mdp, scenario.world.features,
                                                scenario.labeled.demos, config);
    REQUIRE(a.trace.size() == b.trace.size());
    for (std::size_t t = 0; t < a.trace.size(); ++t) {
        CHECK(a.trace[t].num_clusters == b.trace[t].num_clusters);
        CHECK(a.trace[t].total_loglik == b.trace[t].total_loglik);
    }
    REQUIRE(a.model.size() == b.model.size());
    for (int j = 0; j < a.model.size(); ++j)
        CHECK((a.model.thetas[j].theta - b.model.thetas[j].theta).lpNorm<Eigen::Infinity>() ==
              0.0);
}

TEST_CASE("smoothed objective trend never backslides badly") {
    GridScenario scenario(88, 2, 20);
    CrpConfig config;
    config.gamma = 0.9;
    config.max_iters = 60;
    config.seed = 3;
    const CrpResult result = run_nonparametric_bcirl(scenario.world.mdp, scenario.world.features,
                                                     scenario.labeled.demos, config);
    const auto& trace = result.trace;
    REQUIRE(trace.size() >= 20);
    auto moving_avg = [&](std::size_t t) {
        double sum = 0.0;
        for (std::size_t u = t; u < t + 10; ++u) sum += trace[u].total_loglik;
        return sum / 10.0;
    };
    for (std::size_t t = 0; t + 11 < trace.size(); ++t)
        CHECK(moving_avg(t + 1) >= moving_avg(t) - 0.05);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "adaptivefl/pruning.hpp"
#include "adaptivefl/rng.hpp"
#include "adaptivefl/selection.hpp"

using namespace adaptivefl;

namespace {

const ModelSpec kSpec{{4, 8, 8, 32, 4}, 1};

ModelPool pool_p2() {
    return build_pool(kSpec, {{Level::S, 0.40}, {Level::M, 0.66}}, {2, 1});
}

}  // namespace

TEST_CASE("tables initialize to all ones") {
    CuriosityTable tc(4);
    ResourceTable tr(5, 4);
    for (auto v : tc.counts) CHECK(v == 1);
    for (auto v : tr.scores) CHECK(v == 1);
}

TEST_CASE("resource reward on an all-ones column, p = 2") {
    const ModelPool pool = pool_p2();
    ResourceTable tr(5, 1);
    CHECK(resource_reward(pool.index_of(Level::S, 1), 0, tr, pool) == 0.9);
    CHECK(resource_reward(pool.index_of(Level::M, 1), 0, tr, pool) == 0.5);
    CHECK(resource_reward(pool.full_index(), 0, tr, pool) == 0.1);
}

TEST_CASE("resource reward of a zeroed column is zero") {
    const ModelPool pool = pool_p2();
    ResourceTable tr(5, 1);
    for (int r = 0; r < 5; ++r) tr.at(r, 0) = 0;
    CHECK(resource_reward(pool.full_index(), 0, tr, pool) == 0.0);
}

TEST_CASE("curiosity reward formula") {
    CuriosityTable tc(1);
    CHECK(curiosity_reward(Level::S, 0, tc) == 1.0);
    tc.at(Level::S, 0) = 4;
    CHECK(curiosity_reward(Level::S, 0, tc) == 0.5);
    tc.at(Level::S, 0) = 100;
    CHECK(curiosity_reward(Level::S, 0, tc) == 0.1);
}

TEST_CASE("combined reward caps the success rate at one half") {
    const ModelPool pool = pool_p2();
    CuriosityTable tc(1);
    ResourceTable tr(5, 1);
    // All-ones column: R_s(S) = 0.9, R_c = 1.0 -> capped at 0.5.
    CHECK(combined_reward(pool.index_of(Level::S, 1), 0, tc, tr, pool) == 0.5);
    // At the cap boundary R = 0.5 * R_c exactly.
    tc.at(Level::M, 0) = 4;
    CHECK(combined_reward(pool.index_of(Level::M, 1), 0, tc, tr, pool) == 0.5 * 0.5);
    // Scaling resource scores above the cap never changes the reward.
    ResourceTable big(5, 1);
    for (int r = 0; r < 5; ++r) big.at(r, 0) = 1000;
    CHECK(combined_reward(pool.index_of(Level::S, 1), 0, tc, big, pool) ==
          combined_reward(pool.index_of(Level::S, 1), 0, tc, tr, pool));
}

TEST_CASE("combined reward below the cap multiplies straight through") {
    // Crafted column [2,1,1,0,1]: M numerator (1+0+1)+(0+1) = 3 over a
    // column total of 5, so R_s = 3/10 = 0.3; count 4 gives R_c = 0.5.
    const ModelPool pool = pool_p2();
    ResourceTable tr(5, 1);
    tr.at(0, 0) = 2;
    tr.at(1, 0) = 1;
    tr.at(2, 0) = 1;
    tr.at(3, 0) = 0;
    tr.at(4, 0) = 1;
    CuriosityTable tc(1);
    tc.at(Level::M, 0) = 4;
    const int m1 = pool.index_of(Level::M, 1);
    CHECK(resource_reward(m1, 0, tr, pool) == 0.3);
    CHECK(combined_reward(m1, 0, tc, tr, pool) == 0.15);
}

TEST_CASE("reward normalization") {
    const auto p = normalize_rewards({0.3, 0.1});
    CHECK(p[0] == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(p[1] == doctest::Approx(0.25).epsilon(1e-15));
    const auto u = normalize_rewards({0.0, 0.0, 0.0});
    for (double v : u) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-15));
}

TEST_CASE("selection probabilities sum to one") {
    const ModelPool pool = pool_p2();
    std::mt19937_64 rng(7);
    CuriosityTable tc(6);
    ResourceTable tr(5, 6);
    for (auto& v : tc.counts) v = 1 + static_cast<std::int64_t>(uniform_index(rng, 50));
    for (auto& v : tr.scores) v = static_cast<std::int64_t>(uniform_index(rng, 20));
    const std::vector<int> eligible{0, 1, 2, 3, 4, 5};
    for (int m = 0; m < pool.count(); ++m) {
        const auto probs = selection_probabilities(m, eligible, tc, tr, pool);
        double sum = 0.0;
        for (double p : probs) sum += p;
        CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
}

TEST_CASE("identical tables give a symmetric first pick") {
    const ModelPool pool = pool_p2();
    CuriosityTable tc(4);
    ResourceTable tr(5, 4);
    const auto probs = selection_probabilities(0, {0, 1, 2, 3}, tc, tr, pool);
    for (double p : probs) CHECK(p == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("select_clients samples without replacement") {
    const ModelPool pool = pool_p2();
    CuriosityTable tc(5);
    ResourceTable tr(5, 5);
    std::mt19937_64 rng(3);
    const std::vector<int> dispatch(5, pool.full_index());
    const std::vector<int> eligible{0, 1, 2, 3, 4};
    auto picked = select_clients(dispatch, eligible, tc, tr, pool, RewardMode::combined, rng);
    std::sort(picked.begin(), picked.end());
    CHECK(picked == eligible);
}

TEST_CASE("select_clients is deterministic given the seed") {
    const ModelPool pool = pool_p2();
    CuriosityTable tc(8);
    ResourceTable tr(5, 8);
    const std::vector<int> dispatch{0, 2, 4};
    const std::vector<int> eligible{0, 1, 2, 3, 4, 5, 6, 7};
    std::mt19937_64 a(11), b(11);
    CHECK(select_clients(dispatch, eligible, tc, tr, pool, RewardMode::combined, a) ==
          select_clients(dispatch, eligible, tc, tr, pool, RewardMode::combined, b));
}

TEST_CASE("select_clients rejects too-small eligible sets") {
    const ModelPool pool = pool_p2();
    CuriosityTable tc(1);
    ResourceTable tr(5, 1);
    std::mt19937_64 rng(0);
    CHECK_THROWS_AS(select_clients({0, 1}, {0}, tc, tr, pool, RewardMode::combined, rng),
                    std::invalid_argument);
}

TEST_CASE("zeroed rewards fall back to uniform selection") {
    const ModelPool pool = pool_p2();
    CuriosityTable tc(3);
    ResourceTable tr(5, 3);
    for (auto& v : tr.scores) v = 0;
    const auto probs = selection_probabilities(pool.full_index(), {0, 1, 2}, tc, tr, pool);
    for (double p : probs) CHECK(p == doctest::Approx(1.0 / 3).epsilon(1e-15));
    std::mt19937_64 rng(5);
    const auto picked =
        select_clients({pool.full_index()}, {0, 1, 2}, tc, tr, pool, RewardMode::combined, rng);
    CHECK(picked.size() == 1);
}

TEST_CASE("update traces: returned equals sent") {
    const ModelPool pool = pool_p2();
    CuriosityTable tc(1);
    ResourceTable tr(5, 1);
    const int m1 = pool.index_of(Level::M, 1);  // row 3
    update_tables(m1, m1, 0, tc, tr, pool);
    CHECK(tr.at(0, 0) == 1);
    CHECK(tr.at(1, 0) == 1);
    CHECK(tr.at(2, 0) == 1);
    CHECK(tr.at(3, 0) == 2);
    CHECK(tr.at(4, 0) == 3);
    CHECK(tc.at(Level::M, 0) == 3);  // sent and returned level both counted
}

TEST_CASE("update traces: returned is a smaller sub-slice") {
    const ModelPool pool = pool_p2();
    CuriosityTable tc(1);
    ResourceTable tr(5, 1);
    update_tables(pool.index_of(Level::M, 1), pool.index_of(Level::S, 1), 0, tc, tr, pool);
    CHECK(tr.at(0, 0) == 1);
    CHECK(tr.at(1, 0) == 3);
    CHECK(tr.at(2, 0) == 0);
    CHECK(tr.at(3, 0) == 0);
    CHECK(tr.at(4, 0) == 0);
    CHECK(tc.at(Level::M, 0) == 2);
    CHECK(tc.at(Level::S, 0) == 2);
}

TEST_CASE("update counts both levels when sent equals returned at L") {
    const ModelPool pool = pool_p2();
    CuriosityTable tc(1);
    ResourceTable tr(5, 1);
    update_tables(pool.full_index(), pool.full_index(), 0, tc, tr, pool);
    CHECK(tc.at(Level::L, 0) == 3);  // initialized at 1, incremented twice
}

TEST_CASE("update rejects a non-sub-slice return") {
    const ModelPool pool = pool_p2();
    CuriosityTable tc(1);
    ResourceTable tr(5, 1);
    CHECK_THROWS_AS(update_tables(pool.index_of(Level::S, 1), pool.full_index(), 0, tc, tr, pool),
                    std::invalid_argument);
}

TEST_CASE("resource table never goes negative under fuzzed updates") {
    const ModelPool pool = pool_p2();
    std::mt19937_64 rng(404);
    CuriosityTable tc(4);
    ResourceTable tr(5, 4);
    std::vector<std::int64_t> prev_tc = tc.counts;
    for (int step = 0; step < 5000; ++step) {
        const int sent = static_cast<int>(uniform_index(rng, pool.count()));
        std::vector<int> candidates;
        for (int i = 0; i <= sent; ++i)
            if (is_subslice(pool.entries[i], pool.entries[sent], kSpec)) candidates.push_back(i);
        const int returned = candidates[uniform_index(rng, candidates.size())];
        const int client = static_cast<int>(uniform_index(rng, 4));
        update_tables(sent, returned, client, tc, tr, pool);
        for (auto v : tr.scores) CHECK(v >= 0);
        // Curiosity counts only ever increase.
        for (std::size_t i = 0; i < tc.counts.size(); ++i) CHECK(tc.counts[i] >= prev_tc[i]);
        prev_tc = tc.counts;
    }
}

TEST_CASE("learning property: the capable client wins the full model") {
    // Client 0 can only ever return S-level models; client 1 returns
    // whatever it was sent. After 200 dispatch/update cycles the full model
    // must prefer client 1 in nearly every seeded trial.
    const ModelPool pool = pool_p2();
    const std::int64_t cap_weak = pool.sizes[pool.index_of(Level::S, 1)];
    const std::int64_t cap_strong = pool.sizes[pool.full_index()];
    int wins = 0;
    const int trials = 20;
    for (int trial = 0; trial < trials; ++trial) {
        std::mt19937_64 rng(1000 + trial);
        CuriosityTable tc(2);
        ResourceTable tr(5, 2);
        for (int cycle = 0; cycle < 200; ++cycle) {
            const int sent = static_cast<int>(uniform_index(rng, pool.count()));
            const auto picked =
                select_clients({sent}, {0, 1}, tc, tr, pool, RewardMode::combined, rng);
            const int c = picked[0];
            const std::int64_t cap = c == 0 ? cap_weak : cap_strong;
            const PruneConfig back = fit_to_budget(pool.entries[sent], cap, pool, kSpec);
            update_tables(sent, pool.index_of(back.level, back.variant), c, tc, tr, pool);
        }
        const auto probs = selection_probabilities(pool.full_index(), {0, 1}, tc, tr, pool);
        if (probs[1] > probs[0]) ++wins;
    }
    CHECK(wins >= 19);
}

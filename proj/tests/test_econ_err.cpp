#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "blockcloud/econ_err.hpp"

using namespace blockcloud;
using namespace blockcloud::err;

namespace {

TaskRankingProfile task1_profile() {
    return TaskRankingProfile({{{100, 0.15, 100},
                                {25, 0.15, 100},
                                {5000, 0.25, 1e6},
                                {5, 0.25, 10},
                                {350, 0.15, 1000},
                                {50, 0.05, 100}}});
}

TaskRankingProfile task_i_profile() {
    return TaskRankingProfile({{{50, 0.05, 100},
                                {75, 0.25, 100},
                                {250000, 0.25, 1e6},
                                {8, 0.25, 10},
                                {500, 0.15, 1000},
                                {75, 0.05, 100}}});
}

TaskRankingProfile task_n_profile() {
    return TaskRankingProfile({{{75, 0.25, 100},
                                {100, 0.15, 100},
                                {100000, 0.15, 1e6},
                                {3, 0.15, 10},
                                {150, 0.15, 1000},
                                {25, 0.15, 100}}});
}

}  // namespace

TEST_CASE("task scores reproduce the reference ranking table") {
    CHECK(task_err_score(task1_profile()) == Catch::Approx(0.39125).margin(1e-12));
    CHECK(task_err_score(task_i_profile()) == Catch::Approx(0.5875).margin(1e-12));
    CHECK(task_err_score(task_n_profile()) == Catch::Approx(0.4575).margin(1e-12));
}

TEST_CASE("node scores reproduce the reference ranking table") {
    NodeRankingProfile super1({{{50, 0.50, 100}, {50, 0.30, 100}, {50, 0.20, 100}}});
    NodeRankingProfile comp1({{{25, 0.70, 100}, {60, 0.20, 100}, {50, 0.10, 100}}});
    NodeRankingProfile svc1({{{35, 0.25, 100}, {75, 0.30, 100}, {85, 0.45, 100}}});
    CHECK(node_err_score(super1) == Catch::Approx(0.50).margin(1e-12));
    CHECK(node_err_score(comp1) == Catch::Approx(0.345).margin(1e-12));
    CHECK(node_err_score(svc1) == Catch::Approx(0.695).margin(1e-12));
}

TEST_CASE("profiles reject bad weights and norms") {
    CHECK_THROWS_AS(NodeRankingProfile({{{1, 0.5, 1}, {1, 0.3, 1}, {1, 0.3, 1}}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(NodeRankingProfile({{{1, 0.5, 0}, {1, 0.3, 1}, {1, 0.2, 1}}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(NodeRankingProfile({{{-1, 0.5, 1}, {1, 0.3, 1}, {1, 0.2, 1}}}),
                    std::invalid_argument);
}

TEST_CASE("affine consistency: scaling scores and norms together is a no-op") {
    std::mt19937_64 rng(21);
    for (int iter = 0; iter < 100; ++iter) {
        double k = 0.5 + static_cast<double>(rng() % 1000) / 100.0;
        std::array<FactorScore, 3> base{};
        double weights[3] = {0.2, 0.5, 0.3};
        for (int i = 0; i < 3; ++i)
            base[i] = {static_cast<double>(rng() % 100), weights[i],
                       1.0 + static_cast<double>(rng() % 50)};
        auto scaled = base;
        for (auto& f : scaled) {
            f.score *= k;
            f.norm *= k;
        }
        CHECK(node_err_score(NodeRankingProfile(scaled)) ==
              Catch::Approx(node_err_score(NodeRankingProfile(base))).epsilon(1e-12));
    }
}

TEST_CASE("matchmake picks the closest score") {
    std::vector<Candidate> cands = {{"A", 0.50, Cftx::from_units(1)},
                                    {"B", 0.345, Cftx::from_units(1)},
                                    {"C", 0.695, Cftx::from_units(1)}};
    CHECK(matchmake(0.39125, cands) == "B");
    CHECK(matchmake(0.1, {Candidate{"N", 0.9, kZeroCftx}}) == "N");
    CHECK_THROWS_AS(matchmake(0.5, std::vector<Candidate>{}), std::invalid_argument);
}

TEST_CASE("matchmake ties break by wealth then id") {
    std::vector<Candidate> cands = {{"P", 0.44, Cftx::from_units(10)},
                                    {"Q", 0.34, Cftx::from_units(5)}};
    CHECK(matchmake(0.39, cands) == "Q");
    std::vector<Candidate> same = {{"Y", 0.44, Cftx::from_units(5)},
                                   {"X", 0.34, Cftx::from_units(5)}};
    CHECK(matchmake(0.39, same) == "X");
}

TEST_CASE("matchmake result has the minimal gap") {
    std::mt19937_64 rng(22);
    for (int iter = 0; iter < 300; ++iter) {
        std::vector<Candidate> cands;
        std::size_t n = 1 + rng() % 8;
        for (std::size_t i = 0; i < n; ++i)
            cands.push_back({"n" + std::to_string(i),
                             static_cast<double>(rng() % 1000) / 1000.0,
                             Cftx::from_units(static_cast<std::int64_t>(rng() % 100))});
        double task = static_cast<double>(rng() % 1000) / 1000.0;
        std::string best = matchmake(task, cands);
        double best_gap = 0.0;
        for (const auto& c : cands)
            if (c.id == best) best_gap = std::abs(c.score - task);
        for (const auto& c : cands) CHECK(best_gap <= std::abs(c.score - task) + 1e-15);
    }
}

TEST_CASE("ranking table stores and recomputes scores") {
    RankingTable table;
    table.submit_task("task-1", task1_profile());
    table.submit_node("super-1",
                      NodeRankingProfile({{{50, 0.50, 100}, {50, 0.30, 100}, {50, 0.20, 100}}}));
    CHECK(table.has("task-1"));
    CHECK(table.score("task-1") == Catch::Approx(task_err_score(task1_profile())));
    CHECK(table.score("super-1") == Catch::Approx(0.50));
    CHECK_THROWS_AS(table.score("missing"), std::invalid_argument);
    CHECK(table.serialize() == "super-1 service-node 0.500000\ntask-1 task 0.391250\n");
}

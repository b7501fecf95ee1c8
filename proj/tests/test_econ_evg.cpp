#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "blockcloud/econ_evg.hpp"

using namespace blockcloud;
using namespace blockcloud::evg;

TEST_CASE("node initial value is the weighted product") {
    CHECK(node_initial_value(std::vector<KnowledgePiece>{}) == kZeroCftx);
    CHECK(node_initial_value({{1.0, Cftx::from_units(10)}}) == Cftx::from_units(10));
    CHECK(node_initial_value({{1.0, Cftx::from_units(10)},
                              {0.5, Cftx::from_units(4)},
                              {0.8, Cftx::from_units(5)}}) == Cftx::from_units(80));
}

TEST_CASE("knowledge pieces reject bad inputs at construction") {
    CHECK_THROWS_AS(KnowledgePiece(1.5, Cftx::from_units(1)), std::invalid_argument);
    CHECK_THROWS_AS(KnowledgePiece(-0.1, Cftx::from_units(1)), std::invalid_argument);
    CHECK_THROWS_AS(KnowledgePiece(0.5, Cftx::from_units(-1)), std::invalid_argument);
    CHECK_THROWS_AS(TaskKnowledgePiece(0.5, 1.5, Cftx::from_units(1)), std::invalid_argument);
}

TEST_CASE("ecosystem initial value sums node values") {
    CHECK(ecosystem_initial_value(std::vector<Cftx>{}) == kZeroCftx);
    CHECK(ecosystem_initial_value({Cftx::from_units(100000)}) == Cftx::from_units(100000));
    CHECK(ecosystem_initial_value({Cftx::from_units(1000000), Cftx::from_units(2000000),
                                   Cftx::from_units(50000)}) == Cftx::from_units(3050000));
    CHECK_THROWS_AS(ecosystem_initial_value({Cftx::from_units(-1)}), std::invalid_argument);
}

TEST_CASE("task incremental value subtracts the covariance product") {
    CHECK(task_incremental_value({{1.0, 0.0, Cftx::from_units(100)}}) == Cftx::from_units(100));
    CHECK(task_incremental_value({{1.0, 1.0, Cftx::from_units(50)}}) == kZeroCftx);
    CHECK(task_incremental_value({{1.0, 0.1, Cftx::from_units(10)},
                                  {0.5, 0.2, Cftx::from_units(4)}}) ==
          Cftx::from_real(19.2));
    CHECK(task_incremental_value(std::vector<TaskKnowledgePiece>{}) == kZeroCftx);
}

TEST_CASE("incremental value may be negative") {
    Cftx v = task_incremental_value({{0.1, 0.9, Cftx::from_units(10)}});
    CHECK(v.is_negative());
    CHECK(v == Cftx::from_real(1.0 - 9.0));
}

TEST_CASE("products are permutation invariant") {
    std::mt19937_64 rng(11);
    for (int iter = 0; iter < 200; ++iter) {
        std::vector<TaskKnowledgePiece> pieces;
        std::size_t n = 1 + rng() % 6;
        for (std::size_t i = 0; i < n; ++i) {
            double p = static_cast<double>(rng() % 1001) / 1000.0;
            double c = static_cast<double>(rng() % 1001) / 1000.0;
            pieces.emplace_back(p, c, Cftx::from_units(static_cast<std::int64_t>(1 + rng() % 20)));
        }
        Cftx before = task_incremental_value(pieces);
        std::shuffle(pieces.begin(), pieces.end(), rng);
        CHECK(task_incremental_value(pieces) == before);
    }
}

TEST_CASE("incremental value nonnegative when covariance never exceeds probability") {
    std::mt19937_64 rng(12);
    for (int iter = 0; iter < 200; ++iter) {
        std::vector<TaskKnowledgePiece> pieces;
        std::size_t n = 1 + rng() % 6;
        for (std::size_t i = 0; i < n; ++i) {
            double p = static_cast<double>(rng() % 1001) / 1000.0;
            double c = p * static_cast<double>(rng() % 1001) / 1000.0;
            pieces.emplace_back(p, c, Cftx::from_units(static_cast<std::int64_t>(1 + rng() % 20)));
        }
        CHECK_FALSE(task_incremental_value(pieces).is_negative());
    }
}

TEST_CASE("random product sequences match a loop oracle") {
    std::mt19937_64 rng(13);
    for (int iter = 0; iter < 500; ++iter) {
        std::vector<KnowledgePiece> pieces;
        double oracle = 1.0;
        std::size_t n = 1 + rng() % 6;
        for (std::size_t i = 0; i < n; ++i) {
            double p = static_cast<double>(rng() % 1001) / 1000.0;
            auto v = Cftx::from_units(static_cast<std::int64_t>(1 + rng() % 10));
            pieces.emplace_back(p, v);
            oracle *= p * v.real();
        }
        double got = node_initial_value(pieces).real();
        CHECK(got == Catch::Approx(oracle).epsilon(1e-12).margin(1e-6));
    }
}

TEST_CASE("credit table conserves and floors at zero") {
    CreditTable table;
    table.add_node("n1", Cftx::from_units(100000));
    table.add_node("n2", Cftx::from_units(5));
    CHECK_THROWS_AS(table.add_node("n1", kZeroCftx), std::invalid_argument);

    table.apply_increment("n1", Cftx::from_units(100));
    CHECK(table.row("n1").total == Cftx::from_units(100100));

    table.apply_increment("n2", kZeroCftx);
    CHECK(table.row("n2").total == Cftx::from_units(5));

    CHECK_THROWS_AS(table.apply_increment("n2", Cftx::from_units(-10)), std::domain_error);
    CHECK(table.row("n2").total == Cftx::from_units(5));  // rejected update leaves no trace
    CHECK_THROWS_AS(table.apply_increment("ghost", kZeroCftx), std::invalid_argument);

    CHECK(table.ecosystem_total() == Cftx::from_units(100105));
}

TEST_CASE("credit table totals equal initial plus increments after random updates") {
    CreditTable table;
    table.add_node("a", Cftx::from_units(50));
    table.add_node("b", Cftx::from_units(70));
    std::mt19937_64 rng(14);
    Cftx expected = Cftx::from_units(120);
    for (int i = 0; i < 300; ++i) {
        std::string id = (rng() % 2) ? "a" : "b";
        Cftx delta = Cftx::from_micro(static_cast<std::int64_t>(rng() % 2000001) - 1000000);
        try {
            table.apply_increment(id, delta);
            expected += delta;
        } catch (const std::domain_error&) {
        }
        CHECK(table.ecosystem_total() == expected);
    }
}

TEST_CASE("credit table serializes one node per line") {
    CreditTable table;
    table.add_node("n1", Cftx::from_units(100000));
    table.apply_increment("n1", Cftx::from_units(100));
    CHECK(table.serialize() == "n1 100000.000000 100.000000 100100.000000\n");
}

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "wrf/harness.hpp"

using namespace wrf;
using Catch::Approx;

TEST_CASE("gamma: nonnegative walks never dip") {
    CHECK(gamma_estimate(JumpModel::lattice(1, {0.5, 0.5})).value == 1.0);
    CHECK(gamma_estimate(JumpModel::lattice(0, {0.25, 0.75})).value == 1.0);
}

TEST_CASE("gamma: skip-free-down closed forms") {
    auto a = gamma_estimate(JumpModel::lattice(-1, {0.25, 0.0, 0.75}));
    CHECK(a.method == "ruin");
    CHECK(a.value == Approx(2.0 / 3.0).margin(1e-12));

    auto b = gamma_estimate(JumpModel::lattice(-1, {0.4, 0.0, 0.6}));
    CHECK(b.value == Approx(1.0 / 3.0).margin(1e-12));

    // three-point model, frozen mpmath root
    auto c = gamma_estimate(JumpModel::lattice(-1, {0.2, 0.0, 0.5, 0.3}));
    CHECK(c.value == Approx(0.76986141339219015).margin(1e-12));
}

TEST_CASE("gamma: monte carlo path for deeper down-jumps") {
    auto m = JumpModel::lattice(-2, {0.15, 0.0, 0.0, 0.45, 0.4});  // min jump -2
    auto g = gamma_estimate(m, 40000, 40000, 5);
    CHECK(g.method == "mc");
    CHECK(g.value > 0.3);
    CHECK(g.value < 1.0);
    CHECK(g.error < 0.02);
    auto g2 = gamma_estimate(m, 40000, 40000, 5);
    CHECK(g.value == g2.value);  // reproducible
}

TEST_CASE("gamma rejects nonpositive drift") {
    CHECK_THROWS(gamma_estimate(JumpModel::lattice(-1, {0.75, 0.0, 0.25})));
}

TEST_CASE("first-passage inequalities: deterministic equality case") {
    auto rec = lemma3_check(JumpModel::lattice(1, {1.0}), 10, 5.0, 1.0);
    CHECK(rec.lhs_head == Approx(1.0).margin(1e-12));
    CHECK(rec.rhs_head == Approx(1.0).margin(1e-12));
    CHECK(rec.pass);
}

TEST_CASE("first-passage inequalities: n = 0 keeps only the start term") {
    auto m = JumpModel::lattice(1, {0.5, 0.5});
    auto at5 = lemma3_check(m, 0, 5.0, 1.0);
    CHECK(at5.lhs_head == 0.0);  // S_0 = 0 is not in [5, 6)
    auto at0 = lemma3_check(m, 0, -0.5, 1.0);
    CHECK(at0.lhs_head == 1.0);  // S_0 = 0 lies in [-0.5, 0.5)
    CHECK(at0.pass);
}

TEST_CASE("first-passage inequalities hold on signed catalogue models") {
    auto a = lemma3_check(JumpModel::lattice(-1, {0.25, 0.0, 0.75}), 100, 30.0, 1.0, 7);
    CHECK(a.margin_head > 0.0);
    CHECK(a.margin_tail >= -1e-9);  // the tail bound is an equality for +-1 walks
    CHECK(a.pass);

    auto b = lemma3_check(JumpModel::lattice(-1, {0.2, 0.0, 0.5, 0.3}), 100, 30.0, 1.0, 7);
    CHECK(b.pass);
    CHECK(b.margin_head > 0.0);
}

TEST_CASE("first-passage inequalities refine windows with no upward mass") {
    // delta = 3 exceeds the maximum jump 1: F_+(3) = 0 forces the split
    auto m = JumpModel::lattice(0, {0.5, 0.5});
    auto rec = lemma3_check(m, 40, 10.0, 3.0, 7);
    CHECK(rec.refined);
    CHECK(rec.delta == 3.0);
    CHECK(rec.delta_used == Approx(1.0));
    CHECK(rec.pass);
}

TEST_CASE("first-passage records are reproducible bit for bit") {
    auto m = JumpModel::lattice(-2, {0.15, 0.0, 0.0, 0.45, 0.4});
    auto r1 = lemma3_check(m, 30, 12.0, 1.0, 99, 20000);
    auto r2 = lemma3_check(m, 30, 12.0, 1.0, 99, 20000);
    CHECK(r1.rhs_tail == r2.rhs_tail);
    CHECK(r1.rhs_tail_error == r2.rhs_tail_error);
    CHECK(r1.margin_tail == r2.margin_tail);
}

TEST_CASE("integro-local scan refuses degenerate walks") {
    std::vector<std::size_t> ns = {25, 100};
    CHECK_THROWS_WITH(stone_shepp_scan(JumpModel::lattice(1, {1.0}), ns),
                      Catch::Matchers::ContainsSubstring("degenerate"));
}

TEST_CASE("integro-local errors are nonnegative and shrink with n") {
    std::vector<std::size_t> ns = {25, 100, 400};
    for (auto m : {JumpModel::lattice(1, {0.5, 0.5}),
                   JumpModel::lattice(-1, {0.2, 0.0, 0.5, 0.3})}) {
        auto rows = stone_shepp_scan(m, ns);
        REQUIRE(rows.size() == 3);
        for (const auto& r : rows) CHECK(r.eps >= 0.0);
        CHECK(rows[2].eps < rows[1].eps);
        CHECK(rows[1].eps < rows[0].eps);
    }
}

TEST_CASE("scan rescales spans internally") {
    auto doubled = JumpModel::lattice(2, {0.5, 0.0, 0.5});  // {2:.5, 4:.5}
    auto unit = JumpModel::lattice(1, {0.5, 0.5});
    std::vector<std::size_t> ns = {50, 200};
    auto a = stone_shepp_scan(doubled, ns, 2.0);
    auto b = stone_shepp_scan(unit, ns, 1.0);
    for (std::size_t i = 0; i < ns.size(); ++i) CHECK(a[i].eps == Approx(b[i].eps).margin(1e-12));
}

namespace {

Scenario blackwell_scenario() {
    Scenario s;
    s.id = "blackwell";
    s.model = JumpModel::lattice(1, {0.5, 0.5});
    s.weights = WeightSeq::constant(1.0);
    s.formula = "blackwell";
    for (double x = 200; x <= 400; x += 10) s.grid.push_back(x);
    s.delta = 1.0;
    s.tolerance = 1e-3;
    s.region = PassRegion::All;
    return s;
}

}  // namespace

TEST_CASE("comparison run: unit-weight baseline") {
    auto rep = run_comparison(blackwell_scenario());
    CHECK(rep.all_pass);
    CHECK(rep.max_ratio_err_top_half <= 1e-3);
    CHECK(rep.rows.size() == 21);
    for (const auto& r : rep.rows) {
        CHECK(r.ratio == Approx(1.0).margin(1e-3));
        CHECK(r.method == "direct");
    }
}

TEST_CASE("comparison run: zero weights report unit ratio by convention") {
    Scenario s = blackwell_scenario();
    s.id = "zeros";
    s.weights = WeightSeq::constant(0.0);
    s.formula = "weighted";
    s.grid = {50, 100};
    CHECK_THROWS(run_comparison(s));  // averaged weight must be positive

    // table weights that vanish on the grid but not at the bulk index
    s.weights = WeightSeq::table(std::vector<double>(400, 1.0));
    s.grid = {1000, 1100};  // exact 0; bulk index ~ 700 has weight 1
    s.tolerance = 0.5;
    auto rep = run_comparison(s);
    CHECK_FALSE(rep.all_pass);  // predicted nonzero, exact zero
}

TEST_CASE("comparison run: extending the grid preserves the shared prefix") {
    Scenario s = blackwell_scenario();
    s.region = PassRegion::TopHalf;
    auto rep1 = run_comparison(s);
    Scenario s2 = s;
    for (double x = 410; x <= 500; x += 10) s2.grid.push_back(x);
    auto rep2 = run_comparison(s2);
    for (std::size_t i = 0; i < rep1.rows.size(); ++i) {
        CHECK(rep1.rows[i].exact == rep2.rows[i].exact);
        CHECK(rep1.rows[i].predicted == rep2.rows[i].predicted);
        CHECK(rep1.rows[i].pass == rep2.rows[i].pass);
    }
}

TEST_CASE("comparison run: precondition failures carry scenario context") {
    Scenario s = blackwell_scenario();
    s.id = "diverging";
    s.model.declare_left_tail({2.0, 1.0});
    s.weights = WeightSeq::power(1.0);
    s.formula = "weighted";
    s.conditions = {ConditionId::AW};
    CHECK_THROWS_WITH(run_comparison(s), Catch::Matchers::ContainsSubstring("diverging"));
}

TEST_CASE("comparison run: monte carlo method uses its own error bars") {
    Scenario s = blackwell_scenario();
    s.id = "mc";
    s.method = EvalMethod::Mc;
    s.grid = {60, 90};
    s.region = PassRegion::All;
    s.tolerance = 0.01;
    s.mc_paths = 60000;
    s.seed = 4;
    auto rep = run_comparison(s);
    CHECK(rep.all_pass);
    for (const auto& r : rep.rows) CHECK(r.error > 0.0);
}

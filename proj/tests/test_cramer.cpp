#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "wrf/cramer.hpp"

using namespace wrf;
using Catch::Approx;

namespace {

// Closed-form oracle for two-point laws {-1: pm, +1: pp}: phi = e^{-q}
// reduces to pp z^2 - e^{-q} z + pm = 0 in z = e^lambda; the increasing
// branch takes the larger root.
struct TwoPointOracle {
    double lambda_q, mu_q;
};

TwoPointOracle two_point_oracle(double pm, double pp, double q) {
    double e = std::exp(-q);
    double disc = std::sqrt(e * e - 4.0 * pp * pm);
    double z = (e + disc) / (2.0 * pp);
    double num = pp * z - pm / z;
    double den = pp * z + pm / z;
    return {std::log(z), num / den};
}

}  // namespace

TEST_CASE("cumulant values") {
    auto s = JumpModel::lattice(-1, {0.5, 0.0, 0.5});
    CHECK(cumulant(s, 0.0) == Approx(0.0).margin(1e-15));
    CHECK(cumulant(s, std::log(2.0)) == Approx(std::log(1.25)).epsilon(1e-12));
    // second difference at {-0.5, 0, 0.5}
    double dd = cumulant(s, -0.5) - 2.0 * cumulant(s, 0.0) + cumulant(s, 0.5);
    CHECK(dd >= 0.0);
}

TEST_CASE("cumulant is strictly increasing past its minimizer") {
    auto a = JumpModel::lattice(-1, {0.25, 0.0, 0.75});
    double lmin = lambda_min(a);
    CHECK(lmin == Approx(-0.5 * std::log(3.0)).epsilon(1e-9));
    double prev = cumulant(a, lmin + 0.01);
    for (double l = lmin + 0.06; l < 2.0; l += 0.05) {
        double cur = cumulant(a, l);
        CHECK(cur > prev);
        prev = cur;
    }
}

TEST_CASE("lambda_min degenerates for nonnegative supports") {
    CHECK(lambda_min(JumpModel::lattice(1, {0.5, 0.5})) == -kInf);
    CHECK(lambda_min(JumpModel::lattice(0, {0.25, 0.75})) == -kInf);
}

TEST_CASE("solver at q = 0 is the identity") {
    auto a = JumpModel::lattice(-1, {0.25, 0.0, 0.75});
    auto ctx = solve_lambda_q(a, 0.0);
    CHECK(ctx.lambda_q == 0.0);
    CHECK(ctx.mu_q == Approx(a.mean()).margin(0.0));
    CHECK(ctx.tilted.pmf(-1) == Approx(0.25));
}

TEST_CASE("solver matches the closed-form oracle") {
    auto a = JumpModel::lattice(-1, {0.25, 0.0, 0.75});
    // frozen oracle digits (mpmath, 30 significant digits)
    auto c1 = solve_lambda_q(a, 0.1);
    CHECK(c1.lambda_q == Approx(-0.25102624832087729).margin(1e-12));
    CHECK(c1.mu_q == Approx(0.28973769409566409).margin(1e-12));
    auto c2 = solve_lambda_q(a, -0.1);
    CHECK(c2.lambda_q == Approx(0.17773253355366187).margin(1e-12));
    CHECK(c2.mu_q == Approx(0.62125029995285604).margin(1e-12));

    for (double q : {-0.3, -0.05, 0.02, 0.12}) {
        auto ctx = solve_lambda_q(a, q);
        auto o = two_point_oracle(0.25, 0.75, q);
        CHECK(ctx.lambda_q == Approx(o.lambda_q).margin(1e-12));
        CHECK(ctx.mu_q == Approx(o.mu_q).margin(1e-12));
    }
}

TEST_CASE("solver on the three-point span-1 model") {
    auto b = JumpModel::lattice(-1, {0.2, 0.0, 0.5, 0.3});
    auto ctx = solve_lambda_q(b, -0.05);
    CHECK(ctx.lambda_q == Approx(0.053829162378624644).margin(1e-12));
    CHECK(ctx.mu_q == Approx(0.95725418425065758).margin(1e-12));
}

TEST_CASE("solver verifies its root and stays inside the branch") {
    auto a = JumpModel::lattice(-1, {0.25, 0.0, 0.75});
    for (double q : {-0.5, -0.2, -0.01, 0.05, 0.13}) {
        auto ctx = solve_lambda_q(a, q);
        CHECK(std::abs(cumulant(a, ctx.lambda_q) + q) <= 1e-12);
        CHECK(ctx.lambda_q > ctx.lambda_min);
        CHECK(ctx.mu_q > 0.0);
    }
}

TEST_CASE("inadmissible q is rejected with the interval") {
    auto a = JumpModel::lattice(-1, {0.25, 0.0, 0.75});
    // L(lambda_min) = ln(sqrt(3)/2) ~ -0.1438: q must stay below 0.1438
    CHECK_THROWS_WITH(solve_lambda_q(a, 0.15),
                      Catch::Matchers::ContainsSubstring("admissible"));
    CHECK_NOTHROW(solve_lambda_q(a, 0.14));
}

TEST_CASE("tilted tables") {
    auto m = JumpModel::lattice(0, {0.5, 0.5});
    auto t = tilt(m, std::log(2.0));
    CHECK(t.pmf(0) == Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(t.pmf(1) == Approx(2.0 / 3.0).epsilon(1e-12));

    auto a = JumpModel::lattice(-1, {0.25, 0.0, 0.75});
    auto id = tilt(a, 0.0);
    CHECK(id.pmf(-1) == Approx(0.25).margin(1e-15));
    CHECK(id.pmf(1) == Approx(0.75).margin(1e-15));
}

TEST_CASE("tilting is invertible") {
    auto a = JumpModel::lattice(-1, {0.2, 0.0, 0.5, 0.3});
    for (double l : {-0.7, -0.1, 0.3, 1.1}) {
        auto back = tilt(tilt(a, l), -l);
        for (long k = a.min_support(); k <= a.max_support(); ++k)
            CHECK(back.pmf(k) == Approx(a.pmf(k)).margin(1e-12));
    }
}

TEST_CASE("the tilted mean is the cumulant derivative at the root") {
    auto b = JumpModel::lattice(-1, {0.2, 0.0, 0.5, 0.3});
    for (double q : {-0.2, -0.05, 0.05}) {
        auto ctx = solve_lambda_q(b, q);
        CHECK(ctx.tilted.mean() == Approx(ctx.mu_q).margin(1e-10));
    }
}

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "wrf/lattice_law.hpp"
#include "wrf/stable.hpp"

using namespace wrf;
using Catch::Approx;

namespace {

// Independent trapezoid oracle at doubled resolution for the density
// inversion integral.
double trapezoid_pdf(double alpha, double rho, double u, std::size_t n) {
    double tau = std::tan(M_PI * alpha / 2.0);
    double T = std::pow(46.0, 1.0 / alpha);
    double h = T / static_cast<double>(n);
    auto f = [&](double t) {
        double ta = std::pow(t, alpha);
        return std::exp(-ta) * std::cos(u * t - rho * tau * ta);
    };
    double s = 0.5 * (f(0.0) + f(T));
    for (std::size_t i = 1; i < n; ++i) s += f(static_cast<double>(i) * h);
    return s * h / M_PI;
}

}  // namespace

TEST_CASE("scale function branches") {
    auto fv = ScaleFunction::finite_variance(2.0);
    CHECK(fv(100.0) == Approx(20.0));
    CHECK_FALSE(fv.is_stable_branch());

    // F_*(x) = x^{-3/2}: b(1000) = 1000^{2/3} = 100
    auto st = ScaleFunction::stable_from_tail(1.5, 1.0);
    CHECK(st(1000.0) == Approx(100.0).epsilon(1e-12));
    CHECK(st.is_stable_branch());
    CHECK(st.alpha() == 1.5);

    CHECK_THROWS_AS(fv(0.0), std::invalid_argument);
    CHECK_THROWS_AS(st(-1.0), std::invalid_argument);

    // finite just past t = 1 and nondecreasing afterwards
    double prev = st(1.0 + 1e-9);
    CHECK(std::isfinite(prev));
    for (double t = 2.0; t < 1e5; t *= 3.0) {
        double v = st(t);
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("generalized inverse brackets the step tail") {
    auto m = JumpModel::pareto_lattice(1.5, 2000);
    auto b = ScaleFunction::stable_from_model(m, 1.5);
    for (double t : {2.0, 5.0, 17.0, 130.0, 999.0}) {
        double x = b(t);
        CHECK(m.tail(x, TailSide::Star) <= 1.0 / t + 1e-15);
        CHECK(m.tail(x - 1.0, TailSide::Star) >= 1.0 / t - 1e-15);
    }
}

TEST_CASE("stable density closed-form checkpoints") {
    StableDensity n2({2.0, 0.0});
    CHECK(n2.pdf(0.0) == Approx(0.3989422804014327).margin(1e-9));

    // Cauchy sanity point, only as a quadrature cross-check outside the
    // supported (1,2] range
    StableDensity cauchy({1.0, 0.0});
    CHECK(cauchy.pdf(0.0) == Approx(1.0 / M_PI).margin(1e-6));

    StableDensity s({1.5, 0.0});
    CHECK(s.pdf(0.0) == Approx(0.28735275145216445).margin(1e-6));
    CHECK(s.pdf(1.0) == Approx(0.20203815960784).margin(1e-6));
    StableDensity skew({1.5, 1.0});
    CHECK(skew.pdf(0.0) == Approx(0.197516171847192).margin(1e-6));
    CHECK(skew.pdf(2.0) == Approx(0.0533842514891989).margin(1e-6));
}

TEST_CASE("density inversion agrees with the doubled-resolution trapezoid") {
    StableDensity s({1.5, 0.0});
    for (double u : {0.0, 0.5, 2.0, 7.0, 20.0}) {
        double oracle = trapezoid_pdf(1.5, 0.0, u, 1 << 16);
        CHECK(s.pdf(u) == Approx(oracle).margin(1e-6));
    }
}

TEST_CASE("stable density integrates to one") {
    StableDensity s({1.5, 0.0});
    double du = 0.05, mass = 0.0;
    for (double u = -50.0; u < 50.0; u += du)
        mass += 0.5 * (s.pdf(u) + s.pdf(u + du)) * du;
    // symmetric tail estimate beyond |u| = 50: (1/pi) Gamma(a) sin(pi a/2) u^-a each side
    double tail = 2.0 / M_PI * std::tgamma(1.5) * std::sin(M_PI * 0.75) * std::pow(50.0, -1.5);
    CHECK(mass + tail == Approx(1.0).margin(1e-4));
}

TEST_CASE("window approximation at the bulk center") {
    auto m = JumpModel::lattice(1, {0.5, 0.5});
    auto scale = ScaleFunction::for_model(m);
    // x = mu n: phi(0)/(sigma sqrt(n))
    double v = stone_shepp_window(m, scale, 100, 150.0, 1.0);
    CHECK(v == Approx(0.3989422804014327 / (0.5 * 10.0)).epsilon(1e-12));
    // linear in delta
    CHECK(stone_shepp_window(m, scale, 100, 150.0, 0.25) == Approx(0.25 * v).epsilon(1e-12));
}

TEST_CASE("window approximation tracks the exact point mass") {
    auto m = JumpModel::lattice(1, {0.5, 0.5});
    auto scale = ScaleFunction::for_model(m);
    auto law = exact_law(m, 400);
    double approx = stone_shepp_window(m, scale, 400, 600.0, 1.0);
    CHECK(approx == Approx(law.p(600)).epsilon(0.05));
}

TEST_CASE("window approximation sums to one across the lattice") {
    auto m = JumpModel::lattice(-1, {0.2, 0.0, 0.5, 0.3});
    auto scale = ScaleFunction::for_model(m);
    for (std::size_t n : {100u, 400u}) {
        double s = 0.0;
        for (long x = -static_cast<long>(n); x <= 2 * static_cast<long>(n); ++x)
            s += stone_shepp_window(m, scale, n, static_cast<double>(x), 1.0);
        CHECK(s == Approx(1.0).margin(1e-3));
    }
}

TEST_CASE("pointwise approximation error shrinks from n=100 to n=400") {
    for (auto m : {JumpModel::lattice(1, {0.5, 0.5}),
                   JumpModel::lattice(-1, {0.2, 0.0, 0.5, 0.3})}) {
        auto scale = ScaleFunction::for_model(m);
        double mu = m.mean();
        auto sup_err = [&](std::size_t n) {
            auto law = exact_law(m, n);
            double psi = scale(static_cast<double>(n));
            double e = 0.0;
            for (long x = law.lo(); x <= law.hi(); ++x) {
                double u = (static_cast<double>(x) - mu * static_cast<double>(n)) / psi;
                e = std::max(e, std::abs(psi * law.p(x) - normal_pdf(u)));
            }
            return e;
        };
        CHECK(sup_err(400) < sup_err(100));
    }
}

TEST_CASE("stable calibration is recorded with its inputs") {
    auto m = JumpModel::pareto_lattice(1.5, 100000);
    auto scale = ScaleFunction::for_model(m);
    auto cal = calibrate_stable_scale(m, scale, 200);
    CHECK(cal.n_cal == 200);
    CHECK(cal.scale_factor > 0.2);
    CHECK(cal.scale_factor < 5.0);
    CHECK(cal.absorbed < 1e-2);
    CHECK(cal.empirical_mad == Approx(cal.scale_factor * cal.stable_mad).epsilon(1e-9));
}

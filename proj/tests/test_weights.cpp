#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "wrf/weights.hpp"

using namespace wrf;
using Catch::Approx;

TEST_CASE("averaged sequence basics") {
    AveragedSeq c3(WeightSeq::constant(3.0), AveragingWindow::constant(4));
    for (std::size_t n : {0u, 1u, 7u, 100u}) CHECK(c3.avg(n) == 3.0);

    AveragedSeq per(WeightSeq::periodic({2.0, 0.0}), AveragingWindow::constant(2));
    for (std::size_t n : {0u, 1u, 2u, 11u}) CHECK(per.avg(n) == Approx(1.0).margin(0.0));

    AveragedSeq lin(WeightSeq::power(1.0), AveragingWindow::constant(1));
    CHECK(lin.avg(7) == 7.0);
}

TEST_CASE("averaged constants are window-invariant") {
    auto w = WeightSeq::constant(2.5);
    for (auto win : {AveragingWindow::constant(1), AveragingWindow::constant(7),
                     AveragingWindow::power(0.4)}) {
        AveragedSeq a(w, win);
        CHECK(a.avg(123) == 2.5);
    }
}

TEST_CASE("window of one reproduces the raw sequence") {
    AveragedSeq a(WeightSeq::power(0.5), AveragingWindow::constant(1));
    for (std::size_t n = 0; n < 50; ++n) CHECK(a.avg(n) == a.a(n));
}

TEST_CASE("partial sums") {
    AveragedSeq ones(WeightSeq::constant(1.0), AveragingWindow::constant(1));
    auto s = ones.partial_sums(10);
    CHECK(s.a == 11.0);       // indices 0..10
    CHECK(s.a_tilde == 11.0);
    CHECK(s.a_abs == 11.0);

    AveragedSeq lin(WeightSeq::power(1.0), AveragingWindow::constant(1));
    CHECK(lin.partial_sums(3).b == 14.0);  // 0 + 1 + 4 + 9
}

TEST_CASE("partial sum increments equal the averaged terms") {
    AveragedSeq a(WeightSeq::periodic({1.0, 3.0, -0.5}), AveragingWindow::constant(3));
    for (std::size_t n = 1; n < 40; ++n) {
        double diff = a.partial_sums(n).a_tilde - a.partial_sums(n - 1).a_tilde;
        CHECK(diff == Approx(a.avg(n)).margin(1e-12));
    }
}

TEST_CASE("windowed local constancy diagnostics") {
    std::vector<double> xs = {64, 128, 256, 512, 1024, 2048};
    std::vector<double> vs = {-2.0, -1.0, -0.5, 0.5, 1.0, 2.0};
    auto sqrt_psi = [](double t) { return std::sqrt(t); };

    AveragedSeq cst(WeightSeq::constant(1.0), AveragingWindow::constant(1));
    auto r1 = check_psi_lc_avg(cst, sqrt_psi, xs, vs);
    CHECK(r1.pass);
    for (double d : r1.sup_dev) CHECK(d == 0.0);

    AveragedSeq per(WeightSeq::periodic({2.0, 0.0}), AveragingWindow::constant(2));
    auto r2 = check_psi_lc_avg(per, sqrt_psi, xs, vs);
    CHECK(r2.pass);
    for (double d : r2.sup_dev) CHECK(d == Approx(0.0).margin(1e-12));

    // e^n is nowhere near sqrt-locally constant: deviations blow up
    AveragedSeq geo(WeightSeq::exp_modulated(1.0, WeightSeq::constant(1.0)),
                    AveragingWindow::constant(1));
    std::vector<double> xs_small = {16, 25, 36, 49, 64};
    auto r3 = check_psi_lc_avg(geo, sqrt_psi, xs_small, vs);
    CHECK_FALSE(r3.pass);
}

TEST_CASE("monotone-on-average diagnostics") {
    // harmonic weights: decreasing variant stable with c near 2 for r = 2
    AveragedSeq harm(WeightSeq::harmonic(), AveragingWindow::constant(1));
    auto h = check_monotone_avg(harm, 2.0, MonotoneVariant::Decreasing, 2, 1000);
    CHECK(h.pass);
    CHECK(h.c_full > 1.5);
    CHECK(h.c_full < 2.0 + 1e-9);

    // sqrt(n): increasing variant stable with c near sqrt(2)
    AveragedSeq root(WeightSeq::power(0.5), AveragingWindow::constant(1));
    auto up = check_monotone_avg(root, 2.0, MonotoneVariant::Increasing, 1, 1000);
    CHECK(up.pass);
    CHECK(up.c_full == Approx(std::sqrt(2.0)).epsilon(0.01));

    // sqrt(n) against the decreasing variant: the constant keeps growing
    auto down = check_monotone_avg(root, 2.0, MonotoneVariant::Decreasing, 1, 1000);
    CHECK_FALSE(down.pass);
}

TEST_CASE("nondecreasing nonnegative catalogue passes the increasing variant") {
    for (auto gen : {WeightSeq::constant(1.0), WeightSeq::power(0.25), WeightSeq::power(0.5),
                     WeightSeq::power(1.0)}) {
        AveragedSeq a(gen, AveragingWindow::constant(1));
        auto rep = check_monotone_avg(a, 2.0, MonotoneVariant::Increasing, 1, 10000);
        INFO(gen.describe() << ": " << rep.detail);
        CHECK(rep.pass);
    }
}

TEST_CASE("default windows") {
    CHECK(default_window(WeightSeq::constant(1.0)).constant_value() == 1);
    CHECK(default_window(WeightSeq::periodic({1, 2, 3})).constant_value() == 3);
    CHECK(default_window(WeightSeq::exp_modulated(0.1, WeightSeq::periodic({1, 2})))
              .constant_value() == 2);
}

TEST_CASE("envelopes for truncation certificates") {
    auto e1 = WeightSeq::constant(2.0).tail_envelope(10);
    CHECK(e1.type == WeightSeq::Envelope::Type::Bounded);
    CHECK(e1.bound == 2.0);

    auto e2 = WeightSeq::power(0.5).tail_envelope(10);
    CHECK(e2.type == WeightSeq::Envelope::Type::Power);
    CHECK(e2.gamma == 0.5);

    auto e3 = WeightSeq::harmonic().tail_envelope(10);
    CHECK(e3.type == WeightSeq::Envelope::Type::Bounded);
    CHECK(e3.bound == Approx(1.0 / 10.0));

    auto e4 = WeightSeq::table({1, 2, 3}).tail_envelope(5);
    CHECK(e4.type == WeightSeq::Envelope::Type::Zero);

    CHECK_THROWS(WeightSeq::exp_modulated(0.5, WeightSeq::constant(1.0)).tail_envelope(0));
}

TEST_CASE("window validation") {
    CHECK_THROWS_AS(AveragingWindow::constant(0), std::invalid_argument);
    CHECK_THROWS_AS(AveragingWindow::power(0.5), std::invalid_argument);
    auto w = AveragingWindow::power(0.3);
    CHECK(w(0) == 1);
    CHECK(w(1000) == static_cast<long>(std::floor(std::pow(1000.0, 0.3))));
}

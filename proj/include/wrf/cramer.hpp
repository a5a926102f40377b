#pragma once

// Cumulant function L(lambda) = ln E e^{lambda xi}, its minimizer, the
// solver for lambda_q with L(lambda_q) = -q on the increasing branch, and
// the exponentially tilted jump law.

#include <algorithm>
#include <cmath>
#include <vector>

#include "wrf/common.hpp"
#include "wrf/jump_model.hpp"

namespace wrf {

inline double cumulant(const JumpModel& m, double lambda) {
    double phi = m.mgf(lambda);
    return std::isfinite(phi) ? std::log(phi) : kInf;
}

// L'(lambda) = phi'(lambda)/phi(lambda); exact sums for lattice models.
inline double cumulant_derivative(const JumpModel& m, double lambda) {
    if (m.is_lattice()) {
        // phi' / phi via log-sum-exp, sharing the max shift
        double mx = -kInf;
        for (long k = m.min_support(); k <= m.max_support(); ++k) {
            double p = m.pmf(k);
            if (p == 0.0) continue;
            mx = std::max(mx, lambda * static_cast<double>(k) + std::log(p));
        }
        KahanSum num, den;
        for (long k = m.min_support(); k <= m.max_support(); ++k) {
            double p = m.pmf(k);
            if (p == 0.0) continue;
            double e = std::exp(lambda * static_cast<double>(k) + std::log(p) - mx);
            num.add(static_cast<double>(k) * e);
            den.add(e);
        }
        return num.value() / den.value();
    }
    // central difference for parametric families
    double h = 1e-6;
    return (cumulant(m, lambda + h) - cumulant(m, lambda - h)) / (2.0 * h);
}

// Minimum point of phi (equivalently of L). Since mu > 0 one always has
// lambda_min < lambda_+; for models with no negative jumps phi is
// nondecreasing and the minimizer degenerates to -inf.
inline double lambda_min(const JumpModel& m) {
    if (m.is_lattice() && m.min_support() >= 0) return -kInf;
    if (!m.is_lattice() && m.family() != Family::Normal)
        fail("lambda_min: only lattice and normal models are supported");
    // phi' is increasing; bracket a sign change of L' around 0
    double hi = 0.0;  // L'(0) = mu > 0
    double lo = -1.0;
    while (cumulant_derivative(m, lo) > 0.0) {
        lo *= 2.0;
        if (lo < -1e6) fail("lambda_min: no sign change found");
    }
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        (cumulant_derivative(m, mid) > 0.0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

inline JumpModel tilt(const JumpModel& m, double lambda) {
    if (!m.is_lattice()) fail_arg("tilt: lattice model required");
    // entries e^{lambda k} p(k) / phi(lambda), normalized in log space
    std::vector<double> w(m.probs().size(), 0.0);
    double mx = -kInf;
    for (long k = m.min_support(); k <= m.max_support(); ++k) {
        double p = m.pmf(k);
        if (p == 0.0) continue;
        mx = std::max(mx, lambda * static_cast<double>(k) + std::log(p));
    }
    KahanSum z;
    for (long k = m.min_support(); k <= m.max_support(); ++k) {
        double p = m.pmf(k);
        if (p == 0.0) continue;
        double e = std::exp(lambda * static_cast<double>(k) + std::log(p) - mx);
        w[static_cast<std::size_t>(k - m.offset())] = e;
        z.add(e);
    }
    for (double& v : w) v /= z.value();
    return JumpModel::lattice(m.offset(), std::move(w));
}

struct TiltContext {
    double q;
    double lambda_lo;      // lambda_-
    double lambda_hi;      // lambda_+
    double lambda_min;
    double cumulant_min;   // L(lambda_min)
    double lambda_q;
    double mu_q;
    JumpModel tilted;
};

// Solve L(lambda) = -q on the increasing branch (lambda_min, lambda_+).
// Bracketed bisection with a Newton polish; root tolerance 1e-12 for
// lattice models, where everything is a closed-form sum.
inline TiltContext solve_lambda_q(const JumpModel& m, double q) {
    if (!m.is_lattice()) fail_arg("solve_lambda_q: lattice model required");
    m.require_renewal_mean();

    double lmin = lambda_min(m);
    double l_at_min = std::isfinite(lmin) ? cumulant(m, lmin)
                                          : std::log(m.pmf(0) > 0.0 ? m.pmf(0) : 0.0);
    // admissible q: -q in (L(lambda_min), L(lambda_+))
    double l_top = m.max_support() > 0 ? kInf : 0.0;
    if (!(-q > l_at_min) || !(-q < l_top)) {
        fail_arg("solve_lambda_q: q=" + std::to_string(q) + " outside the admissible interval (" +
                 std::to_string(-l_top) + ", " + std::to_string(-l_at_min) + ")");
    }

    if (q == 0.0)
        return TiltContext{q, m.mgf_lo(), m.mgf_hi(), lmin, l_at_min, 0.0, m.mean(), m};

    // bracket: L is increasing past lambda_min and L(0) = 0
    double lo, hi;
    if (q < 0.0) {  // need L = -q > 0: root right of 0
        lo = 0.0;
        hi = 1.0;
        while (cumulant(m, hi) < -q) hi *= 2.0;
    } else {  // root in (lambda_min, 0)
        hi = 0.0;
        lo = std::isfinite(lmin) ? lmin : -1.0;
        while (!std::isfinite(lmin) && cumulant(m, lo) > -q) lo *= 2.0;
    }
    for (int i = 0; i < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++i) {
        double mid = 0.5 * (lo + hi);
        (cumulant(m, mid) < -q ? lo : hi) = mid;
    }
    double root = 0.5 * (lo + hi);
    for (int i = 0; i < 4; ++i) {  // Newton polish
        double f = cumulant(m, root) + q;
        double d = cumulant_derivative(m, root);
        if (d <= 0.0) break;
        double next = root - f / d;
        if (next > lo && next < hi) root = next;
    }
    if (std::abs(cumulant(m, root) + q) > 1e-12)
        fail("solve_lambda_q: root tolerance not met, |L(lambda_q)+q|=" +
             std::to_string(std::abs(cumulant(m, root) + q)));

    return TiltContext{q,        m.mgf_lo(), m.mgf_hi(),
                       lmin,     l_at_min,   root,
                       cumulant_derivative(m, root), tilt(m, root)};
}

}  // namespace wrf

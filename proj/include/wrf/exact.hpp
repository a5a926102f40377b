#pragma once

// Exact evaluation of the weighted window sums
//     h(x, Delta) = sum_n a_n P(S_n in [x, x+Delta))
// and of H(x) = sum_n a_n P(S_n < x) for lattice jump models, with a
// certified bound on everything the finite sweep drops:
//   * the n > n_max tail, bounded by an optimized exponential Chebyshev
//     inequality summed in closed form over the weight envelope,
//   * mass absorbed at the window edges (zero for nonnegative jumps),
//   * the materialization gap of cut unbounded supports.
//
// Exponentially modulated weights b_n e^{qn} are routed through the tilted
// identity e^{qn} P(S_n = y) = e^{-lambda_q y} P(S_n^{(lambda_q)} = y),
// which turns them back into a bounded-weight sweep on the tilted walk.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "wrf/common.hpp"
#include "wrf/cramer.hpp"
#include "wrf/jump_model.hpp"
#include "wrf/lattice_law.hpp"
#include "wrf/weights.hpp"

namespace wrf {

struct EvalOptions {
    double target_residual = 1e-10;  // absolute truncation target
    std::size_t max_steps = 5'000'000;
    double margin_logs = 40.0;       // window absorption budget e^{-margin_logs}
    bool route_exp_through_tilt = true;
    bool skip_span_check = false;    // internal: per-point queries on wide-span models
};

struct EvalResult {
    double value = 0.0;
    double residual = 0.0;  // certified bound on |true - value|
    std::size_t n_max = 0;
    std::string method = "direct";
};

namespace detail {

// Positive root of phi(-R) = 1; exists for mu > 0 with some negative jump.
inline double lundberg_exponent(const JumpModel& m) {
    if (m.min_support() >= 0) fail("lundberg_exponent: no negative jumps");
    double lo = 1e-12, hi = 1.0;
    while (m.mgf(-hi) <= 1.0) {
        hi *= 2.0;
        if (hi > 1e6) fail("lundberg_exponent: no root found");
    }
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        (m.mgf(-mid) <= 1.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Bound on sum_{n>N} |b_n| e^{q n} P(S_n < y) for a fixed lambda < 0:
// P(S_n < y) <= e^{n L(lambda) - lambda y}, then the weight envelope is
// summed in closed form. Returns +inf when the combination cannot decay.
inline double chernoff_tail(const JumpModel& m, const WeightSeq& base, double q,
                            double lambda, std::size_t N, double y) {
    double rho_log = cumulant(m, lambda) + q;
    if (!(rho_log < 0.0)) return kInf;
    double rho = std::exp(rho_log);
    auto env = base.tail_envelope(N + 1);
    double Np1 = static_cast<double>(N + 1);
    switch (env.type) {
        case WeightSeq::Envelope::Type::Zero:
            return 0.0;
        case WeightSeq::Envelope::Type::Bounded:
            return env.bound * std::exp(-lambda * y + Np1 * rho_log) / (1.0 - rho);
        case WeightSeq::Envelope::Type::Power: {
            double f = rho * std::exp(env.gamma / Np1);
            if (!(f < 1.0)) return kInf;
            return env.scale * std::exp(-lambda * y + env.gamma * std::log(Np1) + Np1 * rho_log) /
                   (1.0 - f);
        }
    }
    return kInf;
}

struct TruncationPlan {
    std::size_t n_max = 0;
    double lambda = 0.0;     // 0 means the support cutoff alone certifies
    bool have_chernoff = false;
    std::size_t support_cut = 0;  // n with n*min_jump >= y_max, 0 if none

    // certified tail bound for one evaluation threshold y = x + delta
    double tail_bound(const JumpModel& m, const WeightSeq& base, double q, double y) const {
        if (support_cut > 0 && n_max >= support_cut) return 0.0;
        if (static_cast<double>(n_max) * static_cast<double>(m.min_support()) >= y)
            return 0.0;  // per-x cutoff may be earlier than the global one
        if (!have_chernoff) return kInf;
        return chernoff_tail(m, base, q, lambda, n_max, y);
    }
};

// Pick n_max and the bounding tilt. The bound grows with the evaluation
// threshold, so n_max is solved at y_max and every smaller x on the grid
// inherits a tighter per-x bound.
inline TruncationPlan make_truncation_plan(const JumpModel& m, const WeightSeq& base, double q,
                                           double y_max, const EvalOptions& opt) {
    TruncationPlan plan;
    if (m.min_support() > 0) {
        plan.support_cut = static_cast<std::size_t>(
            std::max(1.0, std::ceil(y_max / static_cast<double>(m.min_support()))));
    }

    // candidate tilts: within (-R, 0) for signed models, geometric otherwise
    std::vector<double> lambdas;
    if (m.min_support() < 0) {
        double R = lundberg_exponent(m);
        for (int i = 1; i <= 32; ++i) lambdas.push_back(-R * i / 33.0);
    } else {
        for (int i = -14; i <= 7; ++i) lambdas.push_back(-std::ldexp(1.0, i));
    }

    std::size_t best_n = opt.max_steps + 1;
    double best_lambda = 0.0;
    double mu = m.mean();
    for (double lam : lambdas) {
        if (chernoff_tail(m, base, q, lam, 8, y_max) == kInf &&
            chernoff_tail(m, base, q, lam, 1024, y_max) == kInf)
            continue;
        auto n = static_cast<std::size_t>(std::max(8.0, std::ceil(y_max / std::max(mu, 1e-9))));
        while (n <= opt.max_steps && chernoff_tail(m, base, q, lam, n, y_max) > opt.target_residual)
            n = std::max(n + 16, n + n / 4);
        if (n <= opt.max_steps && n < best_n) {
            best_n = n;
            best_lambda = lam;
        }
    }
    if (best_n <= opt.max_steps) {
        plan.have_chernoff = true;
        plan.lambda = best_lambda;
        plan.n_max = best_n;
    }
    if (plan.support_cut > 0 && (!plan.have_chernoff || plan.support_cut < plan.n_max))
        plan.n_max = plan.support_cut;
    if (!plan.have_chernoff && plan.support_cut == 0)
        fail("truncation: cannot certify the dropped tail for these weights "
             "(no decaying exponential bound exists)");
    if (plan.n_max > opt.max_steps)
        fail("truncation: required " + std::to_string(plan.n_max) + " terms, exceeding max_steps=" +
             std::to_string(opt.max_steps));
    return plan;
}

// Window sized so that absorbed mass contributes below the e^{-margin_logs}
// budget. Mass absorbed below the window is itself Lundberg-rare; mass
// absorbed above is common for a positive-drift walk but re-enters the
// region of interest only via a descent of at least the margin, which the
// same Lundberg exponent bounds. reentry_log carries that log-probability.
struct Window {
    long lo, hi;
    double reentry_log = -kInf;  // log P(absorbed-above mass ever returns)
};

inline Window make_window(const JumpModel& m, double x_lo, double x_hi, double delta,
                          const EvalOptions& opt) {
    long hi = static_cast<long>(std::ceil(x_hi + delta)) - 1;
    long lo = std::min<long>(0, static_cast<long>(std::floor(x_lo)));
    if (m.min_support() >= 0) return {lo, hi, -kInf};
    double R = lundberg_exponent(m);
    long margin =
        static_cast<long>(std::ceil(opt.margin_logs / R)) + std::abs(m.min_support()) + 1;
    return {lo - margin, hi + margin, -R * static_cast<double>(margin)};
}

// Certified error from window absorption: below-mass may fully return
// (but is rare by construction), above-mass returns with the Lundberg
// re-entry probability at most.
inline double absorption_error(const Window& win, const LatticeLaw& law) {
    return law.absorbed_below() + law.absorbed_above() * std::exp(win.reentry_log);
}

// Declared-tail divergence guard: with weights growing like n^g and a
// declared left power tail of index beta, sum a_n F_-(n) diverges when
// beta <= g + 1 and the window sum is провably infinite; refuse.
inline void check_declared_divergence(const JumpModel& m, const WeightSeq& w) {
    if (!m.left_tail()) return;
    if (w.kind() == WeightSeq::Kind::Exp) return;  // handled by the tilt admissibility
    double g = w.growth_exponent();
    if (g == -kInf) return;
    double beta = m.left_tail()->index;
    if (beta <= g + 1.0 + 1e-12)
        fail("divergent: declared left tail index " + std::to_string(beta) +
             " against weight growth n^" + std::to_string(g) +
             " makes sum a_n F_-(n) infinite; no certified finite answer exists");
}

}  // namespace detail

inline EvalResult h_exact_tilted(const JumpModel& model, double q, const WeightSeq& base,
                                 double x, double delta, const EvalOptions& opt = {});

// Weighted window sums over a grid of left endpoints, one shared sweep.
// Delta must be a positive integer multiple of the lattice span.
inline std::vector<EvalResult> h_exact(const JumpModel& model, const WeightSeq& weights,
                                       std::span<const double> xs, double delta,
                                       const EvalOptions& opt = {}) {
    if (!model.is_lattice()) fail_arg("h_exact: lattice model required (use h_mc)");
    model.require_renewal_mean();
    if (!(delta > 0.0)) fail_arg("h_exact: delta must be > 0");
    if (!opt.skip_span_check) {
        double ratio = delta / static_cast<double>(model.span());
        if (std::abs(ratio - std::round(ratio)) > 1e-9 || std::round(ratio) < 1.0)
            fail_arg("h_exact: delta=" + std::to_string(delta) +
                     " is not a positive integer multiple of the span " +
                     std::to_string(model.span()));
    }
    if (xs.empty()) return {};
    detail::check_declared_divergence(model, weights);

    if (weights.kind() == WeightSeq::Kind::Exp && opt.route_exp_through_tilt) {
        std::vector<EvalResult> out;
        out.reserve(xs.size());
        for (double x : xs) out.push_back(h_exact_tilted(model, weights.q(), weights.base(), x, delta, opt));
        return out;
    }
    if (weights.kind() == WeightSeq::Kind::Exp && weights.q() == 0.0) {
        // identity tilt: fall through with the base sequence
        return h_exact(model, weights.base(), xs, delta, opt);
    }

    const WeightSeq& base = weights.kind() == WeightSeq::Kind::Exp ? weights.base() : weights;
    const double q = weights.kind() == WeightSeq::Kind::Exp ? weights.q() : 0.0;

    double x_lo = *std::min_element(xs.begin(), xs.end());
    double x_hi = *std::max_element(xs.begin(), xs.end());
    auto plan = detail::make_truncation_plan(model, base, q, x_hi + delta, opt);
    auto win = detail::make_window(model, x_lo, x_hi, delta, opt);

    LatticeLaw law = LatticeLaw::start(win.lo, win.hi);
    ConvPlan cplan(model, win.lo, win.hi);
    std::vector<KahanSum> acc(xs.size());
    std::vector<double> prefix;
    double sum_abs_w = 0.0, sum_abs_w_n = 0.0;
    for (std::size_t n = 0;; ++n) {
        double w = weights(n);
        if (w != 0.0) {
            law.prefix_sums(prefix);
            for (std::size_t i = 0; i < xs.size(); ++i)
                acc[i].add(w * law.prefix_window_prob(prefix, xs[i], delta));
        }
        sum_abs_w += std::abs(w);
        sum_abs_w_n += std::abs(w) * static_cast<double>(n);
        if (n == plan.n_max) break;
        law.step(cplan);
    }

    double shared_residual = detail::absorption_error(win, law) * sum_abs_w +
                             2.0 * model.cut_mass() * sum_abs_w_n;
    std::vector<EvalResult> out;
    out.reserve(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double tail = plan.tail_bound(model, base, q, xs[i] + delta);
        out.push_back({acc[i].value(), tail + shared_residual, plan.n_max, "direct"});
    }
    return out;
}

inline EvalResult h_exact(const JumpModel& model, const WeightSeq& weights, double x,
                          double delta, const EvalOptions& opt = {}) {
    double xs[1] = {x};
    return h_exact(model, weights, std::span<const double>(xs, 1), delta, opt)[0];
}

// Weighted renewal function H(x) = sum_n a_n P(S_n < x) with certified
// residual; refuses when no decaying bound exists (the series may diverge).
inline EvalResult H_exact(const JumpModel& model, const WeightSeq& weights, double x,
                          const EvalOptions& opt = {}) {
    if (!model.is_lattice()) fail_arg("H_exact: lattice model required");
    model.require_renewal_mean();
    detail::check_declared_divergence(model, weights);

    const bool is_exp = weights.kind() == WeightSeq::Kind::Exp;
    const WeightSeq& base = is_exp ? weights.base() : weights;
    const double q = is_exp ? weights.q() : 0.0;

    auto plan = detail::make_truncation_plan(model, base, q, x, opt);
    auto win = detail::make_window(model, x, x, 1.0, opt);

    LatticeLaw law = LatticeLaw::start(win.lo, win.hi);
    ConvPlan cplan(model, win.lo, win.hi);
    KahanSum acc;
    double sum_abs_w = 0.0, sum_abs_w_n = 0.0;
    for (std::size_t n = 0;; ++n) {
        double w = weights(n);
        if (w != 0.0) acc.add(w * law.cdf_below(x));
        sum_abs_w += std::abs(w);
        sum_abs_w_n += std::abs(w) * static_cast<double>(n);
        if (n == plan.n_max) break;
        law.step(cplan);
    }
    double tail = plan.tail_bound(model, base, q, x);
    return {acc.value(), tail + detail::absorption_error(win, law) * sum_abs_w +
                             2.0 * model.cut_mass() * sum_abs_w_n,
            plan.n_max, "direct"};
}

// sum_n b_n e^{qn} P(S_n in [x, x+delta)) evaluated on the tilted walk:
// per reachable integer y in the window, accumulate A(y) = sum_n b_n
// P(S_n^{(lambda_q)} = y) with the direct machinery, then recombine as
// sum_y e^{-lambda_q y} A(y). Exact up to the same certified residuals.
inline EvalResult h_exact_tilted(const JumpModel& model, double q, const WeightSeq& base,
                                 double x, double delta, const EvalOptions& opt) {
    if (!model.is_lattice()) fail_arg("h_exact_tilted: lattice model required");
    if (base.kind() == WeightSeq::Kind::Exp)
        fail_arg("h_exact_tilted: base weights may not be exp-modulated");
    if (!(delta > 0.0)) fail_arg("h_exact_tilted: delta must be > 0");

    TiltContext ctx = solve_lambda_q(model, q);  // errors name the admissible interval
    ctx.tilted.require_renewal_mean();

    long y_lo = static_cast<long>(std::ceil(x));
    long y_hi = static_cast<long>(std::ceil(x + delta)) - 1;
    if (y_hi < y_lo) return {0.0, 0.0, 0, "tilted"};

    std::vector<double> ys;
    for (long y = y_lo; y <= y_hi; ++y) ys.push_back(static_cast<double>(y));

    EvalOptions inner = opt;
    inner.route_exp_through_tilt = false;
    inner.skip_span_check = true;  // per-point accumulators are exact on any span
    auto point = h_exact(ctx.tilted, base, ys, 1.0, inner);

    KahanSum value;
    double residual = 0.0;
    for (std::size_t i = 0; i < ys.size(); ++i) {
        double scale = std::exp(-ctx.lambda_q * ys[i]);
        value.add(scale * point[i].value);
        residual += scale * point[i].residual;
    }
    // |q + L(lambda_q)| <= 1e-12 distorts term n by a factor e^{n eps}
    double eps_root = std::abs(cumulant(model, ctx.lambda_q) + q);
    residual += std::abs(value.value()) *
                (std::expm1(eps_root * static_cast<double>(point.empty() ? 0 : point[0].n_max)));
    return {value.value(), residual, point.empty() ? 0 : point[0].n_max, "tilted"};
}

}  // namespace wrf

#pragma once

// Experiment harness: compares exact window sums against the asymptotic
// predictors over x grids, scans integro-local approximation errors, and
// verifies the first-passage inequalities that tie the engine's pieces
// together (a violation there means an engine bug, not new mathematics).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wrf/asym.hpp"
#include "wrf/common.hpp"
#include "wrf/cramer.hpp"
#include "wrf/exact.hpp"
#include "wrf/jump_model.hpp"
#include "wrf/lattice_law.hpp"
#include "wrf/mc.hpp"
#include "wrf/stable.hpp"
#include "wrf/weights.hpp"

namespace wrf {

// ---- gamma = P(the walk never goes below its starting point) ---------------

struct GammaEstimate {
    double value = 0.0;
    double error = 0.0;  // one-sided bar: truth lies within [value - error, value]
    std::string method;
};

// Closed form for skip-free-down walks (min jump = -1): the descent
// probability eta solves E[eta^xi] = 1 in (0,1) and gamma = 1 - eta.
// Nonnegative walks give gamma = 1. Everything else is Monte Carlo over a
// horizon with a Lundberg bound on post-horizon ruin added to the bar.
inline GammaEstimate gamma_estimate(const JumpModel& m, std::size_t horizon = 100000,
                                    std::size_t paths = 100000, std::uint64_t seed = 1) {
    m.require_renewal_mean();
    if (!m.is_lattice()) fail_arg("gamma_estimate: lattice model required");
    if (m.min_support() >= 0) return {1.0, 0.0, "trivial"};

    if (m.min_support() == -1) {
        auto excess = [&](double eta) {  // E[eta^xi] - 1, decreasing near 1
            KahanSum s;
            for (long k = m.min_support(); k <= m.max_support(); ++k)
                if (double p = m.pmf(k); p > 0.0)
                    s.add(p * std::pow(eta, static_cast<double>(k)));
            return s.value() - 1.0;
        };
        double lo = 1e-12, hi = 1.0 - 1e-12;
        if (!(excess(lo) > 0.0 && excess(hi) < 0.0))
            fail("gamma_estimate: ruin bracket failed");
        for (int i = 0; i < 200; ++i) {
            double mid = 0.5 * (lo + hi);
            (excess(mid) > 0.0 ? lo : hi) = mid;
        }
        return {1.0 - 0.5 * (lo + hi), 1e-12, "ruin"};
    }

    double R = detail::lundberg_exponent(m);
    detail::JumpSampler sample(m);
    std::size_t alive = 0;
    KahanSum post_bound;
    const std::size_t block = 4096;
    std::size_t n_blocks = (paths + block - 1) / block;
    std::size_t done = 0;
    for (std::size_t b = 0; b < n_blocks; ++b) {
        detail::Rng rng(seed, b);
        std::size_t count = std::min(block, paths - b * block);
        for (std::size_t p = 0; p < count; ++p) {
            double s = 0.0;
            bool ok = true;
            for (std::size_t n = 0; n < horizon; ++n) {
                s += sample(rng);
                if (s < 0.0) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                ++alive;
                post_bound.add(std::exp(-R * s));  // P(ruin after horizon | S_h)
            }
            ++done;
        }
    }
    double g = static_cast<double>(alive) / static_cast<double>(done);
    double se = std::sqrt(std::max(g * (1.0 - g), 1e-12) / static_cast<double>(done));
    return {g, 3.0 * se + post_bound.value() / static_cast<double>(done), "mc"};
}

// ---- first-passage inequality checks ----------------------------------------

struct Lemma3Record {
    double x = 0.0, delta = 0.0, delta_used = 0.0;
    std::size_t n = 0;
    double gamma = 0.0, gamma_error = 0.0;
    double fplus_delta = 0.0;
    double lhs_head = 0.0;                      // sum_{k<=n} P(S_k in window)
    double rhs_head = 0.0;                      // P(max_{k<=n} S_k >= x)/(gamma F_+(D))
    double margin_head = 0.0;
    double lhs_tail = 0.0, lhs_tail_bound = 0.0;  // sum_{k>=n}, certified
    double rhs_tail = 0.0, rhs_tail_error = 0.0;  // MC with error bar
    double margin_tail = 0.0;
    bool refined = false;
    bool pass = false;
    std::uint64_t seed = 0;
};

namespace detail {

inline Lemma3Record lemma3_single(const JumpModel& m, std::size_t n, double x, double delta,
                                  std::uint64_t seed, std::size_t mc_paths) {
    Lemma3Record rec;
    rec.x = x;
    rec.delta = delta;
    rec.delta_used = delta;
    rec.n = n;
    rec.seed = seed;

    auto g = gamma_estimate(m, 100000, 100000, seed);
    rec.gamma = g.value;
    rec.gamma_error = g.error;
    rec.fplus_delta = m.tail_plus(delta);
    if (!(rec.fplus_delta > 0.0)) fail("lemma3: F_+(delta) = 0 after refinement");
    // use the pessimistic end of the gamma bar in the denominators
    double gamma_lo = std::max(rec.gamma - rec.gamma_error, 1e-12);

    EvalOptions opt;
    auto win = make_window(m, std::min(x, 0.0), x, delta, opt);

    // head sum and absorbing max sweep, both exact up to window absorption
    {
        LatticeLaw law = LatticeLaw::start(win.lo, win.hi);
        ConvPlan plan(m, win.lo, win.hi);
        KahanSum head;
        for (std::size_t k = 0;; ++k) {
            head.add(law.window_prob(x, delta));
            if (k == n) break;
            law.step(plan);
        }
        rec.lhs_head = head.value() + absorption_error(win, law) * static_cast<double>(n + 1);

        double pmax;
        if (x <= 0.0) {
            pmax = 1.0;
        } else {
            long bar = static_cast<long>(std::ceil(x));  // absorb at S >= x
            LatticeLaw blocked = LatticeLaw::start(win.lo, bar - 1);
            ConvPlan bplan(m, win.lo, bar - 1);
            for (std::size_t k = 0; k < n; ++k) blocked.step(bplan);
            pmax = blocked.absorbed_above();
        }
        rec.rhs_head = pmax / (gamma_lo * rec.fplus_delta);
        rec.margin_head = rec.rhs_head - rec.lhs_head;
    }

    // tail sum: exact through the truncation plan, certified remainder
    {
        WeightSeq ones = WeightSeq::constant(1.0);
        auto plan = make_truncation_plan(m, ones, 0.0, x + delta, opt);
        std::size_t top = std::max(plan.n_max, n);
        LatticeLaw law = LatticeLaw::start(win.lo, win.hi);
        ConvPlan cplan(m, win.lo, win.hi);
        KahanSum tail;
        for (std::size_t k = 0;; ++k) {
            if (k >= n) tail.add(law.window_prob(x, delta));
            if (k == top) break;
            law.step(cplan);
        }
        rec.lhs_tail = tail.value();
        rec.lhs_tail_bound = plan.tail_bound(m, ones, 0.0, x + delta) +
                             absorption_error(win, law) * static_cast<double>(top - n + 1);
    }

    // RHS of the tail inequality: P(S_n + inf_{k>=n}(S_k - S_n) < x + delta).
    // Skip-free-down walks admit the exact geometric infimum law
    // P(inf <= -j) = eta^j with eta the descent root, so the probability is
    // an exact convolution; anything else falls back to Monte Carlo. The
    // windowed law is exact here: above-window mass carries zero weight for
    // nonnegative walks and a geometrically small one otherwise.
    if (m.min_support() >= -1) {
        double eta = 1.0 - gamma_estimate(m).value;  // 0 for nonnegative walks
        LatticeLaw law = LatticeLaw::start(win.lo, win.hi);
        ConvPlan cplan(m, win.lo, win.hi);
        for (std::size_t k = 0; k < n; ++k) law.step(cplan);
        KahanSum num;
        num.add(law.absorbed_below());  // below the window is below x + delta
        for (long s = law.lo(); s <= law.hi(); ++s) {
            double ps = law.p(s);
            if (ps == 0.0) continue;
            double t = x + delta - static_cast<double>(s);  // need inf < t
            if (t > 0.0) num.add(ps);
            else if (eta > 0.0)
                num.add(ps * std::pow(eta, 1.0 - std::ceil(t)));
        }
        // dropping the above-window mass under-counts the numerator, which
        // only tightens the reported margin; no error bar needed
        rec.rhs_tail = num.value() / (gamma_lo * rec.fplus_delta);
        rec.rhs_tail_error = 0.0;
    } else {
        double R = lundberg_exponent(m);
        JumpSampler sample(m);
        std::size_t post = 4000;
        std::size_t hits = 0;
        KahanSum flip_bound;
        const std::size_t block = 4096;
        std::size_t blocks = (mc_paths + block - 1) / block;
        std::size_t done = 0;
        for (std::size_t b = 0; b < blocks; ++b) {
            Rng rng(seed + 0x5851f42d4c957f2dULL, b);
            std::size_t count = std::min(block, mc_paths - b * block);
            for (std::size_t p = 0; p < count; ++p) {
                double s = 0.0;
                for (std::size_t k = 0; k < n; ++k) s += sample(rng);
                double sn = s, inf = 0.0;
                for (std::size_t k = 0; k < post; ++k) {
                    s += sample(rng);
                    inf = std::min(inf, s - sn);
                }
                if (sn + inf < x + delta) {
                    ++hits;
                } else {
                    // a later flip needs a new record low below x+delta
                    // starting from the path's end position
                    flip_bound.add(std::min(1.0, std::exp(-R * (s - (x + delta)))));
                }
                ++done;
            }
        }
        double pr = static_cast<double>(hits) / static_cast<double>(done);
        double se = std::sqrt(std::max(pr * (1.0 - pr), 1e-12) / static_cast<double>(done));
        rec.rhs_tail = pr / (gamma_lo * rec.fplus_delta);
        rec.rhs_tail_error =
            (3.0 * se + flip_bound.value() / static_cast<double>(done)) /
            (gamma_lo * rec.fplus_delta);
    }
    rec.margin_tail = (rec.rhs_tail - rec.rhs_tail_error) - (rec.lhs_tail + rec.lhs_tail_bound);

    rec.pass = rec.margin_head >= -1e-9 && rec.margin_tail >= -1e-9;
    return rec;
}

}  // namespace detail

// Both inequalities at (n, x, delta). When F_+(delta) = 0 the window is
// split into equal parts small enough that F_+(delta/k) > 0 and each
// sub-window is checked; the worst margins are reported.
inline Lemma3Record lemma3_check(const JumpModel& m, std::size_t n, double x, double delta,
                                 std::uint64_t seed = 1, std::size_t mc_paths = 100000) {
    if (!m.is_lattice()) fail_arg("lemma3_check: lattice model required");
    if (!(delta > 0.0)) fail_arg("lemma3_check: delta must be > 0");
    m.require_renewal_mean();
    if (m.tail_plus(delta) > 0.0) return detail::lemma3_single(m, n, x, delta, seed, mc_paths);

    double mx = static_cast<double>(m.max_support());
    if (!(mx > 0.0)) fail("lemma3_check: no positive jumps, F_+ vanishes everywhere");
    auto parts = static_cast<std::size_t>(std::ceil(delta / mx));
    double dk = delta / static_cast<double>(parts);
    Lemma3Record worst;
    bool first = true;
    for (std::size_t j = 0; j < parts; ++j) {
        auto rec = detail::lemma3_single(m, n, x + static_cast<double>(j) * dk, dk, seed + j,
                                         mc_paths);
        rec.refined = true;
        rec.delta = delta;
        if (first || std::min(rec.margin_head, rec.margin_tail) <
                         std::min(worst.margin_head, worst.margin_tail)) {
            worst = rec;
            first = false;
        }
        worst.pass = worst.pass && rec.pass;
    }
    worst.x = x;
    return worst;
}

// ---- integro-local error scan -----------------------------------------------

struct ScanRow {
    std::size_t n;
    double eps;  // sup_x |psi(n) P(S_n in D[x)) - D phi((x - mu n)/psi(n))|
};

// Gnedenko-style error scan on the unit-span rescale of the model. For the
// stable branch a calibration factor must be supplied (or <= 0 to calibrate
// in place); the finite-variance branch ignores it.
inline std::vector<ScanRow> stone_shepp_scan(const JumpModel& model_in,
                                             std::span<const std::size_t> ns, double delta = 0.0,
                                             double calibration = 0.0) {
    if (!model_in.is_lattice()) fail_arg("stone_shepp_scan: lattice model required");
    model_in.require_renewal_mean();
    JumpModel model = model_in.span() == 1 ? model_in : model_in.rescaled_unit_span();
    if (delta == 0.0) delta = static_cast<double>(model_in.span());
    double d_units = delta / static_cast<double>(model_in.span());
    if (std::abs(d_units - std::round(d_units)) > 1e-9 || std::round(d_units) < 1.0)
        fail_arg("stone_shepp_scan: delta must be a positive multiple of the span");

    if (!(model.variance_finite() && model.variance() > 0.0) &&
        !(model.right_tail() && model.right_tail()->index < 2.0))
        fail("stone_shepp_scan: degenerate model (sigma = 0), no local limit to scan");

    ScaleFunction scale = ScaleFunction::for_model(model);
    std::optional<StableDensity> density;
    double cal = 1.0;
    if (scale.is_stable_branch()) {
        density.emplace(StableParams{scale.alpha(), model.tail_balance_rho()});
        cal = calibration > 0.0 ? calibration
                                : calibrate_stable_scale(model, scale).scale_factor;
    }

    double mu = model.mean();
    std::vector<ScanRow> rows;
    for (std::size_t n : ns) {
        if (n < 1) fail_arg("stone_shepp_scan: n must be >= 1");
        // exact law; windowed with wide absorption when the full support
        // window would be impractical
        long full_lo = std::min<long>(0, model.min_support() * static_cast<long>(n));
        long full_hi = std::max<long>(1, model.max_support() * static_cast<long>(n));
        double psi_n = cal * scale(static_cast<double>(n));
        if (full_hi - full_lo > 2'000'000)
            full_hi = static_cast<long>(std::ceil(mu * static_cast<double>(n) + 400.0 * psi_n));
        LatticeLaw law = LatticeLaw::start(full_lo, full_hi);
        ConvPlan plan(model, full_lo, full_hi);
        for (std::size_t i = 0; i < n; ++i) law.step(plan);

        double eps = 0.0;
        for (long k = law.lo(); k <= law.hi(); ++k) {
            double u = (static_cast<double>(k) - mu * static_cast<double>(n)) / psi_n;
            double phi = density ? density->pdf(u) : normal_pdf(u);
            double p = law.window_prob(static_cast<double>(k), d_units);
            eps = std::max(eps, std::abs(psi_n * p - d_units * phi));
        }
        rows.push_back({n, eps});
    }
    return rows;
}

// ---- scenario comparison ------------------------------------------------------

enum class EvalMethod { Direct, Tilted, Mc };
enum class PassRegion { All, TopHalf, Last };

struct Scenario {
    std::string id;
    std::string description;
    // placeholder model fails require_renewal_mean() until replaced
    JumpModel model = JumpModel::lattice(0, {1.0});
    WeightSeq weights = WeightSeq::constant(1.0);
    AveragingWindow window = AveragingWindow::constant(1);
    std::string formula;  // blackwell|weighted|H_rvf|lrv_sum|h_plus|cramer_nonlattice|cramer_arith
    std::vector<double> grid;
    double delta = 1.0;
    EvalMethod method = EvalMethod::Direct;
    double tolerance = 0.05;
    PassRegion region = PassRegion::TopHalf;
    std::uint64_t seed = 0;
    // predictor parameters
    double r = 2.0;
    double c_minus = 0.0, c_plus = 0.0;  // 0 = defaults 1/(2 mu), 2/mu
    double q = 0.0;                      // exp-modulation, when weights are not exp kind
    double lrv_width = 1.0;
    // Monte Carlo controls
    std::size_t mc_paths = 200000;
    std::size_t mc_horizon = 0;  // 0 = auto
    // side conditions that must pass before trusting the predictor
    std::vector<ConditionId> conditions;
};

struct ComparisonRow {
    double x = 0.0;
    double exact = 0.0;
    double error = 0.0;  // certified residual or MC stderr
    double predicted = 0.0;
    double ratio = 0.0;
    bool pass = false;
    std::size_t n_max = 0;
    std::string method;
};

struct Report {
    std::string scenario_id;
    std::vector<ComparisonRow> rows;
    double max_ratio_err_top_half = 0.0;
    bool trend_pass = false;
    bool all_pass = false;
    std::vector<ConditionReport> conditions;
    std::optional<StableCalibration> calibration;
    double delta = 0.0;
    double tolerance = 0.0;
    std::uint64_t seed = 0;
    std::string note;
};

namespace detail {

inline double scenario_q(const Scenario& s) {
    return s.weights.kind() == WeightSeq::Kind::Exp ? s.weights.q() : s.q;
}

inline const WeightSeq scenario_base(const Scenario& s) {
    return s.weights.kind() == WeightSeq::Kind::Exp ? s.weights.base() : s.weights;
}

}  // namespace detail

inline Report run_comparison(const Scenario& s) {
    if (s.grid.empty()) fail_arg("run_comparison: empty x grid");
    s.model.require_renewal_mean();
    double mu = s.model.mean();

    Report rep;
    rep.scenario_id = s.id;
    rep.delta = s.delta;
    rep.tolerance = s.tolerance;
    rep.seed = s.seed;

    // re-validate predictor side conditions
    std::vector<double> cond_grid;
    for (double g = 32.0; g <= std::max(1024.0, s.grid.back()); g *= 2.0) cond_grid.push_back(g);
    AveragedSeq avg(s.weights.kind() == WeightSeq::Kind::Exp ? s.weights.base() : s.weights,
                    s.window);
    for (ConditionId c : s.conditions) {
        rep.conditions.push_back(check_condition(s.model, avg, c, cond_grid, s.r));
        if (!rep.conditions.back().pass)
            fail("scenario '" + s.id + "': precondition " + to_string(c) + " failed (" +
                 rep.conditions.back().verdict + ")");
    }
    if (s.formula == "h_plus") {
        auto mono = check_monotone_avg(avg, s.r, MonotoneVariant::Decreasing, 1,
                                       std::max<std::size_t>(1000, floor_index(s.grid.back() / mu)));
        if (!mono.pass)
            fail("scenario '" + s.id + "': decreasing-on-average diagnostic failed: " + mono.detail);
    }

    // stable-branch calibration is recorded whenever the declared tails put
    // the model in the non-normal domain
    if (s.model.right_tail() && s.model.right_tail()->index < 2.0) {
        ScaleFunction scale = ScaleFunction::for_model(s.model);
        rep.calibration = calibrate_stable_scale(s.model, scale);
        rep.note = "stable branch: psi(n) = " + std::to_string(rep.calibration->scale_factor) +
                   " * b(n), calibrated at n = " + std::to_string(rep.calibration->n_cal);
    }

    // exact side
    std::vector<ComparisonRow> rows(s.grid.size());
    switch (s.method) {
        case EvalMethod::Direct: {
            if (s.formula == "H_rvf") {
                for (std::size_t i = 0; i < s.grid.size(); ++i) {
                    auto e = H_exact(s.model, s.weights, s.grid[i]);
                    rows[i] = {s.grid[i], e.value, e.residual, 0, 0, false, e.n_max, e.method};
                }
            } else {
                auto ev = h_exact(s.model, s.weights, s.grid, s.delta);
                for (std::size_t i = 0; i < s.grid.size(); ++i)
                    rows[i] = {s.grid[i], ev[i].value, ev[i].residual, 0, 0, false,
                               ev[i].n_max,  ev[i].method};
            }
            break;
        }
        case EvalMethod::Tilted: {
            double q = detail::scenario_q(s);
            WeightSeq base = detail::scenario_base(s);
            for (std::size_t i = 0; i < s.grid.size(); ++i) {
                auto e = h_exact_tilted(s.model, q, base, s.grid[i], s.delta);
                rows[i] = {s.grid[i], e.value, e.residual, 0, 0, false, e.n_max, e.method};
            }
            break;
        }
        case EvalMethod::Mc: {
            for (std::size_t i = 0; i < s.grid.size(); ++i) {
                std::size_t horizon = s.mc_horizon ? s.mc_horizon
                                                   : default_mc_horizon(s.model, s.grid[i], s.delta);
                auto e = h_mc(s.model, s.weights, s.grid[i], s.delta, s.mc_paths, horizon,
                              s.seed + 0x9e3779b97f4a7c15ULL * (i + 1));
                rows[i] = {s.grid[i], e.estimate, e.std_error, 0, 0, false, horizon, "mc"};
            }
            break;
        }
    }

    // predicted side
    for (std::size_t i = 0; i < s.grid.size(); ++i) {
        double x = s.grid[i];
        Prediction p;
        if (s.formula == "weighted" || s.formula == "blackwell") {
            p = predict_weighted(x, s.delta, mu, avg);
        } else if (s.formula == "H_rvf") {
            double gamma = s.weights.kind() == WeightSeq::Kind::Power ? s.weights.gamma() : 0.0;
            p = predict_H_rvf(x, mu, gamma, s.weights);
        } else if (s.formula == "lrv_sum") {
            double cm = s.c_minus > 0.0 ? s.c_minus : 1.0 / (2.0 * mu);
            double cp = s.c_plus > 0.0 ? s.c_plus : 2.0 / mu;
            p = predict_lrv_sum(s.model, s.weights, x, s.delta, cm, cp, s.lrv_width);
        } else if (s.formula == "h_plus") {
            p = predict_h_plus(s.model, avg, x, s.delta, s.r);
        } else if (s.formula == "cramer_nonlattice" || s.formula == "cramer_arith") {
            TiltContext ctx = solve_lambda_q(s.model, detail::scenario_q(s));
            AveragedSeq avg_b(detail::scenario_base(s), s.window);
            p = predict_cramer(x, s.delta, ctx, avg_b,
                               s.formula == "cramer_arith" ? CramerForm::Arithmetic
                                                           : CramerForm::NonLattice);
        } else {
            fail_arg("unknown predictor formula '" + s.formula + "'");
        }
        rows[i].predicted = p.value;
        if (rows[i].predicted == 0.0) {
            rows[i].ratio = rows[i].exact == 0.0 ? 1.0 : kInf;
        } else {
            rows[i].ratio = rows[i].exact / rows[i].predicted;
        }
        double tol = s.tolerance;
        if (s.method == EvalMethod::Mc && rows[i].predicted != 0.0)
            tol += 4.0 * rows[i].error / std::abs(rows[i].predicted);
        rows[i].pass = std::isfinite(rows[i].ratio) && std::abs(rows[i].ratio - 1.0) <= tol;
    }

    // summary
    std::vector<double> err(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) err[i] = std::abs(rows[i].ratio - 1.0);
    double top = 0.0;
    for (std::size_t i = rows.size() / 2; i < rows.size(); ++i) top = std::max(top, err[i]);
    rep.max_ratio_err_top_half = top;
    rep.trend_pass = detail::three_block_trend(err, s.tolerance / 2.0);

    bool pass = true;
    switch (s.region) {
        case PassRegion::All:
            for (const auto& r : rows) pass = pass && r.pass;
            break;
        case PassRegion::TopHalf:
            for (std::size_t i = rows.size() / 2; i < rows.size(); ++i) pass = pass && rows[i].pass;
            break;
        case PassRegion::Last:
            pass = rows.back().pass;
            break;
    }
    rep.all_pass = pass;
    rep.rows = std::move(rows);
    return rep;
}

}  // namespace wrf

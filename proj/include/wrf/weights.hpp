#pragma once

// Weight sequences a_n, integer averaging windows d(n), the averaged
// sequence and its partial sums, and finite-range diagnostics for the
// "locally constant / monotone on average" conditions. The checks are
// falsification devices on nested ranges, not proofs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "wrf/common.hpp"

namespace wrf {

class WeightSeq {
  public:
    enum class Kind { Constant, Power, Harmonic, Periodic, Table, Exp };

    static WeightSeq constant(double c) {
        WeightSeq w;
        w.kind_ = Kind::Constant;
        w.c_ = c;
        return w;
    }
    // a_n = scale * n^gamma; for gamma < 0 the n = 0 entry uses the n = 1 value.
    static WeightSeq power(double gamma, double scale = 1.0) {
        WeightSeq w;
        w.kind_ = Kind::Power;
        w.gamma_ = gamma;
        w.c_ = scale;
        return w;
    }
    static WeightSeq harmonic(double scale = 1.0) {
        WeightSeq w;
        w.kind_ = Kind::Harmonic;
        w.c_ = scale;
        return w;
    }
    static WeightSeq periodic(std::vector<double> pattern) {
        if (pattern.empty()) fail_arg("periodic weights: empty pattern");
        WeightSeq w;
        w.kind_ = Kind::Periodic;
        w.values_ = std::move(pattern);
        return w;
    }
    // Explicit table, zero beyond the end.
    static WeightSeq table(std::vector<double> values) {
        WeightSeq w;
        w.kind_ = Kind::Table;
        w.values_ = std::move(values);
        return w;
    }
    // a_n = b_n e^{qn}
    static WeightSeq exp_modulated(double q, WeightSeq base) {
        if (base.kind_ == Kind::Exp) fail_arg("exp weights: base may not itself be exp-modulated");
        WeightSeq w;
        w.kind_ = Kind::Exp;
        w.q_ = q;
        w.base_ = std::make_shared<WeightSeq>(std::move(base));
        return w;
    }

    double operator()(std::size_t n) const {
        switch (kind_) {
            case Kind::Constant: return c_;
            case Kind::Power:
                if (n == 0) return gamma_ > 0.0 ? 0.0 : c_;
                return c_ * std::pow(static_cast<double>(n), gamma_);
            case Kind::Harmonic: return c_ / static_cast<double>(std::max<std::size_t>(n, 1));
            case Kind::Periodic: return values_[n % values_.size()];
            case Kind::Table: return n < values_.size() ? values_[n] : 0.0;
            case Kind::Exp: return (*base_)(n)*std::exp(q_ * static_cast<double>(n));
        }
        fail("WeightSeq: unreachable");
    }

    Kind kind() const { return kind_; }
    double q() const { return q_; }
    double gamma() const { return gamma_; }
    double scale() const { return c_; }
    const WeightSeq& base() const {
        if (kind_ != Kind::Exp) fail_arg("base(): not an exp-modulated sequence");
        return *base_;
    }
    std::size_t period() const { return kind_ == Kind::Periodic ? values_.size() : 1; }

    // Envelope on |a_n| for n >= from, in a shape the truncation
    // certificates can sum in closed form.
    struct Envelope {
        enum class Type { Zero, Bounded, Power } type;
        double bound = 0.0;   // Bounded: sup |a_n|, n >= from
        double scale = 0.0;   // Power: |a_n| <= scale * n^gamma
        double gamma = 0.0;
    };

    Envelope tail_envelope(std::size_t from) const {
        switch (kind_) {
            case Kind::Constant:
                return {Envelope::Type::Bounded, std::abs(c_), 0, 0};
            case Kind::Power:
                if (gamma_ <= 0.0)
                    return {Envelope::Type::Bounded,
                            std::abs((*this)(std::max<std::size_t>(from, 1))), 0, 0};
                return {Envelope::Type::Power, 0, std::abs(c_), gamma_};
            case Kind::Harmonic:
                return {Envelope::Type::Bounded,
                        std::abs((*this)(std::max<std::size_t>(from, 1))), 0, 0};
            case Kind::Periodic: {
                double m = 0.0;
                for (double v : values_) m = std::max(m, std::abs(v));
                return {Envelope::Type::Bounded, m, 0, 0};
            }
            case Kind::Table:
                if (from >= values_.size()) return {Envelope::Type::Zero, 0, 0, 0};
                else {
                    double m = 0.0;
                    for (std::size_t i = from; i < values_.size(); ++i)
                        m = std::max(m, std::abs(values_[i]));
                    return {Envelope::Type::Bounded, m, 0, 0};
                }
            case Kind::Exp:
                fail("tail_envelope: exp-modulated weights must go through the tilted path");
        }
        fail("tail_envelope: unreachable");
    }

    // Effective power-growth exponent for closed-form series tests.
    // Table weights vanish eventually, reported as -inf.
    double growth_exponent() const {
        switch (kind_) {
            case Kind::Constant: return 0.0;
            case Kind::Power: return gamma_;
            case Kind::Harmonic: return -1.0;
            case Kind::Periodic: return 0.0;
            case Kind::Table: return -kInf;
            case Kind::Exp: fail("growth_exponent: not defined for exp-modulated weights");
        }
        fail("growth_exponent: unreachable");
    }

    std::string describe() const {
        switch (kind_) {
            case Kind::Constant: return "constant(" + std::to_string(c_) + ")";
            case Kind::Power:
                return "power(gamma=" + std::to_string(gamma_) + ", scale=" + std::to_string(c_) + ")";
            case Kind::Harmonic: return "harmonic(scale=" + std::to_string(c_) + ")";
            case Kind::Periodic: return "periodic(period=" + std::to_string(values_.size()) + ")";
            case Kind::Table: return "table(len=" + std::to_string(values_.size()) + ")";
            case Kind::Exp: return "exp(q=" + std::to_string(q_) + ", base=" + base_->describe() + ")";
        }
        fail("describe: unreachable");
    }

  private:
    WeightSeq() = default;
    Kind kind_ = Kind::Constant;
    double c_ = 1.0, gamma_ = 0.0, q_ = 0.0;
    std::vector<double> values_;
    std::shared_ptr<const WeightSeq> base_;
};

class AveragingWindow {
  public:
    static AveragingWindow constant(long d0) {
        if (d0 < 1) fail_arg("averaging window: d must be >= 1");
        AveragingWindow w;
        w.d0_ = d0;
        return w;
    }
    // d(n) = max(floor(n^delta), 1); delta < 1/2 keeps d(t) = o(sqrt(t)).
    static AveragingWindow power(double delta) {
        if (!(delta >= 0.0 && delta < 0.5))
            fail_arg("averaging window: power exponent must lie in [0, 1/2)");
        AveragingWindow w;
        w.delta_ = delta;
        w.powered_ = true;
        return w;
    }

    long operator()(std::size_t n) const {
        if (!powered_) return d0_;
        return std::max<long>(1, static_cast<long>(std::floor(
                                     std::pow(static_cast<double>(n), delta_))));
    }

    bool is_constant() const { return !powered_; }
    long constant_value() const { return d0_; }
    std::string describe() const {
        return powered_ ? "d(n)=floor(n^" + std::to_string(delta_) + ")"
                        : "d=" + std::to_string(d0_);
    }

  private:
    AveragingWindow() = default;
    long d0_ = 1;
    double delta_ = 0.0;
    bool powered_ = false;
};

// d(n) = 1 unless the generator is periodic, in which case the period.
inline AveragingWindow default_window(const WeightSeq& w) {
    if (w.kind() == WeightSeq::Kind::Periodic)
        return AveragingWindow::constant(static_cast<long>(w.period()));
    if (w.kind() == WeightSeq::Kind::Exp && w.base().kind() == WeightSeq::Kind::Periodic)
        return AveragingWindow::constant(static_cast<long>(w.base().period()));
    return AveragingWindow::constant(1);
}

// Memoized averaged sequence and its partial sums. The memo grows
// append-only under a single writer; pure evaluation needs no memo.
class AveragedSeq {
  public:
    AveragedSeq(WeightSeq seq, AveragingWindow window)
        : seq_(std::move(seq)), window_(window) {}

    explicit AveragedSeq(const WeightSeq& seq) : AveragedSeq(seq, default_window(seq)) {}

    const WeightSeq& seq() const { return seq_; }
    const AveragingWindow& window() const { return window_; }

    double a(std::size_t n) const { return seq_(n); }

    // tilde a_n = (1/d(n)) sum_{n <= k < n+d(n)} a_k, exact finite sum
    double avg(std::size_t n) const {
        long d = window_(n);
        KahanSum s;
        for (long k = 0; k < d; ++k) s.add(seq_(n + static_cast<std::size_t>(k)));
        return s.value() / static_cast<double>(d);
    }

    // floor convention for real arguments
    double avg_at(double x) const { return avg(floor_index(x)); }

    struct Sums {
        double a_tilde;  // tilde A_n = sum_{k<=n} tilde a_k
        double a;        // A_n = sum_{k<=n} a_k
        double a_abs;    // sum_{k<=n} |a_k|
        double b;        // B_n = sum_{k<=n} k a_k
    };

    // All four partial sums through index n, memoized in one pass.
    Sums partial_sums(std::size_t n) const {
        extend(n);
        return memo_[n];
    }

  private:
    void extend(std::size_t n) const {
        if (memo_.size() > n) return;
        std::size_t from = memo_.size();
        memo_.resize(n + 1);
        for (std::size_t k = from; k <= n; ++k) {
            double ak = seq_(k);
            double tk = avg(k);
            Sums prev = k == 0 ? Sums{0, 0, 0, 0} : memo_[k - 1];
            memo_[k] = {prev.a_tilde + tk, prev.a + ak, prev.a_abs + std::abs(ak),
                        prev.b + static_cast<double>(k) * ak};
        }
    }

    WeightSeq seq_;
    AveragingWindow window_;
    mutable std::vector<Sums> memo_;
};

// ---- condition diagnostics -------------------------------------------------

struct PsiLcReport {
    std::vector<double> xs;
    std::vector<double> sup_dev;  // sup over v-grid of |avg(x + v psi(x))/avg(x) - 1|
    bool pass = false;
    std::string detail;
};

// Windowed-average local constancy against a scale function psi. Fails hard
// if any averaged value on the probed grid is <= 0.
inline PsiLcReport check_psi_lc_avg(const AveragedSeq& avg,
                                    const std::function<double(double)>& psi,
                                    std::span<const double> xgrid,
                                    std::span<const double> vgrid) {
    PsiLcReport rep;
    for (double x : xgrid) {
        double ax = avg.avg_at(x);
        if (!(ax > 0.0))
            fail("check_psi_lc_avg: averaged weight <= 0 at x=" + std::to_string(x));
        double sup = 0.0;
        for (double v : vgrid) {
            double arg = x + v * psi(x);
            if (arg < 0.0) continue;  // outside the sequence's domain
            double r = avg.avg_at(arg) / ax;
            if (!std::isfinite(r)) {
                sup = kInf;
                break;
            }
            sup = std::max(sup, std::abs(r - 1.0));
        }
        rep.xs.push_back(x);
        rep.sup_dev.push_back(sup);
    }
    // decay verdict: last third vs first third of the grid
    std::size_t n = rep.sup_dev.size();
    if (n < 3) {
        rep.pass = n > 0 && rep.sup_dev.back() <= rep.sup_dev.front() + 1e-12;
    } else {
        auto block_max = [&](std::size_t lo, std::size_t hi) {
            double m = 0.0;
            for (std::size_t i = lo; i < hi; ++i) m = std::max(m, rep.sup_dev[i]);
            return m;
        };
        double m1 = block_max(0, n / 3), m2 = block_max(n / 3, 2 * n / 3),
               m3 = block_max(2 * n / 3, n);
        rep.pass = std::isfinite(m3) && m3 <= m2 + 1e-12 && m2 <= m1 + 1e-12;
        rep.detail = "block sup deviations: " + std::to_string(m1) + " -> " +
                     std::to_string(m2) + " -> " + std::to_string(m3);
    }
    return rep;
}

// Which side of the index the bound |a_k| <= c tilde a_n quantifies over:
// Decreasing (on average) takes all k > n/r, Increasing takes all k < n r.
enum class MonotoneVariant { Decreasing, Increasing };

struct MonotoneReport {
    double c_half = 0.0;  // observed constant on the first nested range
    double c_full = 0.0;  // observed constant on the full range
    bool pass = false;
    std::string detail;
};

// Observed constants sup |a_k| / tilde a_n over admissible (n, k) pairs in
// [lo, hi], compared across two nested ranges. Growth of the constant as the
// range doubles is the falsification signal.
inline MonotoneReport check_monotone_avg(const AveragedSeq& avg, double r,
                                         MonotoneVariant variant, std::size_t lo,
                                         std::size_t hi) {
    if (!(r > 1.0)) fail_arg("check_monotone_avg: r must be > 1");
    if (hi <= lo + 1) fail_arg("check_monotone_avg: degenerate range");

    std::vector<double> absk(hi - lo + 1);
    for (std::size_t i = 0; i < absk.size(); ++i) absk[i] = std::abs(avg.a(lo + i));

    auto observed_c = [&](std::size_t top) -> double {
        // prefix/suffix maxima of |a_k| over [lo, top]
        std::size_t len = top - lo + 1;
        std::vector<double> pre(len), suf(len);
        pre[0] = absk[0];
        for (std::size_t i = 1; i < len; ++i) pre[i] = std::max(pre[i - 1], absk[i]);
        suf[len - 1] = absk[len - 1];
        for (std::size_t i = len - 1; i-- > 0;) suf[i] = std::max(suf[i + 1], absk[i]);

        double c = 0.0;
        for (std::size_t n = lo; n <= top; ++n) {
            double an = avg.avg(n);
            if (!(an > 0.0))
                fail("check_monotone_avg: averaged weight <= 0 at n=" + std::to_string(n));
            double sup_ak;
            if (variant == MonotoneVariant::Decreasing) {
                // k > n/r within [lo, top]
                auto kmin = static_cast<std::size_t>(std::floor(static_cast<double>(n) / r)) + 1;
                kmin = std::max(kmin, lo);
                if (kmin > top) continue;
                sup_ak = suf[kmin - lo];
            } else {
                // k < n*r within [lo, top]
                double bound = static_cast<double>(n) * r;
                std::size_t kmax = bound >= static_cast<double>(top) + 1.0
                                       ? top
                                       : static_cast<std::size_t>(std::ceil(bound)) - 1;
                if (kmax < lo) continue;
                sup_ak = pre[std::min(kmax, top) - lo];
            }
            c = std::max(c, sup_ak / an);
        }
        return c;
    };

    MonotoneReport rep;
    std::size_t mid = lo + (hi - lo) / 2;
    rep.c_half = observed_c(mid);
    rep.c_full = observed_c(hi);
    // stable = the constant does not keep growing as the range doubles
    rep.pass = std::isfinite(rep.c_full) && rep.c_full <= rep.c_half * 1.10 + 1e-12;
    rep.detail = "c[" + std::to_string(lo) + "," + std::to_string(mid) + "]=" +
                 std::to_string(rep.c_half) + ", c[" + std::to_string(lo) + "," +
                 std::to_string(hi) + "]=" + std::to_string(rep.c_full);
    return rep;
}

}  // namespace wrf

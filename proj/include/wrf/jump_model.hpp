#pragma once

// Jump distribution models: finite lattice tables and a few parametric
// continuous families, exposing exact tails, moments, the mgf and its
// domain, and declared power-tail metadata used by the asymptotic
// predictors.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wrf/common.hpp"

namespace wrf {

// Declared pure power tail V(t) = constant * t^-index. Slowly varying
// factors are restricted to constants, so the tail arithmetic stays exact.
struct TailMajorant {
    double index = 0.0;     // alpha or beta, stored positive
    double constant = 1.0;  // multiplicative constant, > 0
};

enum class Family { Lattice, Normal, ShiftedExponential, ParetoShifted };

enum class TailSide { Plus, Minus, Star };

class JumpModel {
  public:
    // ---- constructors ------------------------------------------------

    static JumpModel lattice(long offset, std::vector<double> probs) {
        JumpModel m;
        m.family_ = Family::Lattice;
        m.offset_ = offset;
        m.probs_ = std::move(probs);
        m.finalize_lattice("lattice");
        return m;
    }

    // Unbounded heavy-tail lattice p(k) ~ k^-(alpha+1), k >= 1, materialized
    // to a finite table cut at K and renormalized. The removed mass of the
    // ideal law is kept so the exact engine can fold it into residual bounds.
    static JumpModel pareto_lattice(double alpha, long cut) {
        if (alpha <= 0.0) fail_arg("pareto_lattice: alpha must be > 0");
        if (cut < 2) fail_arg("pareto_lattice: cut must be >= 2");
        std::vector<double> probs(static_cast<std::size_t>(cut));
        // sum smallest terms first
        KahanSum z;
        for (long k = cut; k >= 1; --k)
            z.add(std::pow(static_cast<double>(k), -(alpha + 1.0)));
        double zk = z.value();
        for (long k = 1; k <= cut; ++k)
            probs[static_cast<std::size_t>(k - 1)] =
                std::pow(static_cast<double>(k), -(alpha + 1.0)) / zk;
        JumpModel m;
        m.family_ = Family::Lattice;
        m.offset_ = 1;
        m.probs_ = std::move(probs);
        m.finalize_lattice("pareto_lattice");
        // removed mass of the ideal (uncut) law: sum_{k>K} k^-(a+1) / Z_inf,
        // bounded above by the integral tail over Z_K.
        double tail = std::pow(static_cast<double>(cut), -alpha) / alpha;
        m.cut_mass_ = tail / zk;
        // Declared majorant for F_+ with the exact scanned constant.
        m.right_tail_ = m.scan_power_majorant(alpha, TailSide::Plus);
        return m;
    }

    static JumpModel normal(double mu, double sigma) {
        if (sigma <= 0.0) fail_arg("normal: sigma must be > 0");
        JumpModel m;
        m.family_ = Family::Normal;
        m.p1_ = mu;
        m.p2_ = sigma;
        return m;
    }

    // shift + Exp(rate): mgf finite for lambda < rate.
    static JumpModel shifted_exponential(double rate, double shift) {
        if (rate <= 0.0) fail_arg("shifted_exponential: rate must be > 0");
        JumpModel m;
        m.family_ = Family::ShiftedExponential;
        m.p1_ = rate;
        m.p2_ = shift;
        return m;
    }

    // Pareto(alpha, x_m = 1) minus shift: P(xi >= t) = (t+shift)^-alpha for
    // t + shift >= 1.
    static JumpModel pareto_shifted(double alpha, double shift) {
        if (alpha <= 1.0) fail_arg("pareto_shifted: alpha must be > 1 for a finite mean");
        JumpModel m;
        m.family_ = Family::ParetoShifted;
        m.p1_ = alpha;
        m.p2_ = shift;
        m.right_tail_ = TailMajorant{alpha, 1.0};
        return m;
    }

    // ---- basic structure ----------------------------------------------

    Family family() const { return family_; }
    bool is_lattice() const { return family_ == Family::Lattice; }

    const std::vector<double>& probs() const { return probs_; }
    long offset() const { return offset_; }
    long min_support() const { return min_support_; }
    long max_support() const { return max_support_; }

    double pmf(long k) const {
        if (!is_lattice()) fail_arg("pmf: not a lattice model");
        if (k < offset_ || k >= offset_ + static_cast<long>(probs_.size())) return 0.0;
        return probs_[static_cast<std::size_t>(k - offset_)];
    }

    // gcd of pairwise support differences; 1 for single-atom supports.
    long span() const { return span_; }
    bool max_span_one() const { return span_ == 1; }

    // True when the support lies on span * Z, so a clean rescale exists.
    bool support_on_span_grid() const {
        return span_ >= 1 && ((min_support_ % span_) + span_) % span_ == 0;
    }

    // Divide the support by the span. Requires support_on_span_grid().
    JumpModel rescaled_unit_span() const {
        if (!is_lattice()) fail_arg("rescaled_unit_span: not a lattice model");
        if (span_ == 1) return *this;
        if (!support_on_span_grid())
            fail("rescaled_unit_span: support is a shifted lattice; cannot divide by span " +
                 std::to_string(span_));
        std::vector<double> probs;
        long lo = min_support_ / span_, hi = max_support_ / span_;
        probs.assign(static_cast<std::size_t>(hi - lo + 1), 0.0);
        for (long k = min_support_; k <= max_support_; k += span_)
            probs[static_cast<std::size_t>(k / span_ - lo)] = pmf(k);
        JumpModel m = lattice(lo, std::move(probs));
        m.cut_mass_ = cut_mass_;
        m.right_tail_ = right_tail_;
        m.left_tail_ = left_tail_;
        return m;
    }

    // ---- moments -------------------------------------------------------

    double mean() const {
        switch (family_) {
            case Family::Lattice: return mean_;
            case Family::Normal: return p1_;
            case Family::ShiftedExponential: return p2_ + 1.0 / p1_;
            case Family::ParetoShifted: return p1_ / (p1_ - 1.0) - p2_;
        }
        fail("mean: unreachable");
    }

    // Infinite for heavy-tail families with alpha <= 2.
    double variance() const {
        switch (family_) {
            case Family::Lattice: return var_;
            case Family::Normal: return p2_ * p2_;
            case Family::ShiftedExponential: return 1.0 / (p1_ * p1_);
            case Family::ParetoShifted:
                if (p1_ <= 2.0) return kInf;
                return p1_ / ((p1_ - 1.0) * (p1_ - 1.0) * (p1_ - 2.0));
        }
        fail("variance: unreachable");
    }

    bool variance_finite() const { return std::isfinite(variance()); }

    // ---- tails ----------------------------------------------------------
    // F_+(t) = P(xi >= t), F_-(t) = P(xi < -t) (strict, by definition),
    // F_*(t) = F_-(t) + F_+(t).

    double tail(double t, TailSide side) const {
        switch (side) {
            case TailSide::Plus: return tail_plus(t);
            case TailSide::Minus: return tail_minus(t);
            case TailSide::Star: return tail_plus(t) + tail_minus(t);
        }
        fail("tail: unreachable");
    }

    double tail_plus(double t) const {
        switch (family_) {
            case Family::Lattice: {
                long k = static_cast<long>(std::ceil(t));  // smallest integer >= t
                return lattice_suffix(k);
            }
            case Family::Normal:
                return 0.5 * std::erfc((t - p1_) / (p2_ * std::sqrt(2.0)));
            case Family::ShiftedExponential:
                return t <= p2_ ? 1.0 : std::exp(-p1_ * (t - p2_));
            case Family::ParetoShifted:
                return t + p2_ <= 1.0 ? 1.0 : std::pow(t + p2_, -p1_);
        }
        fail("tail_plus: unreachable");
    }

    double tail_minus(double t) const {
        switch (family_) {
            case Family::Lattice: {
                // P(xi < -t): integers k with k < -t, i.e. k <= ceil(-t)-1.
                long k = static_cast<long>(std::ceil(-t)) - 1;
                return lattice_prefix(k);
            }
            case Family::Normal:
                // P(xi < -t) = Phi((-t - mu)/sigma)
                return 0.5 * std::erfc((t + p1_) / (p2_ * std::sqrt(2.0)));
            case Family::ShiftedExponential:
                return -t <= p2_ ? 0.0 : 1.0 - std::exp(-p1_ * (-t - p2_));
            case Family::ParetoShifted:
                // xi >= 1 - shift, so P(xi < -t) = 1 - F_+(-t) for -t above the
                // lower endpoint and 0 otherwise.
                return -t <= 1.0 - p2_ ? 0.0 : 1.0 - tail_plus(-t);
        }
        fail("tail_minus: unreachable");
    }

    // ---- mgf --------------------------------------------------------------

    // E e^{lambda xi}; +inf outside the domain (lambda_lo, lambda_hi).
    double mgf(double lambda) const {
        switch (family_) {
            case Family::Lattice: {
                // log-sum-exp over the table; huge-but-finite sums overflow to
                // +inf in double, which is the honest answer at this precision.
                double m = -kInf;
                for (std::size_t i = 0; i < probs_.size(); ++i) {
                    if (probs_[i] == 0.0) continue;
                    double e = lambda * static_cast<double>(offset_ + static_cast<long>(i)) +
                               std::log(probs_[i]);
                    m = std::max(m, e);
                }
                if (m > 700.0) return kInf;
                KahanSum s;
                for (std::size_t i = 0; i < probs_.size(); ++i) {
                    if (probs_[i] == 0.0) continue;
                    double e = lambda * static_cast<double>(offset_ + static_cast<long>(i)) +
                               std::log(probs_[i]);
                    s.add(std::exp(e - m));
                }
                return std::exp(m) * s.value();
            }
            case Family::Normal:
                return std::exp(lambda * p1_ + 0.5 * lambda * lambda * p2_ * p2_);
            case Family::ShiftedExponential:
                if (lambda >= p1_) return kInf;
                return std::exp(lambda * p2_) * p1_ / (p1_ - lambda);
            case Family::ParetoShifted: {
                if (lambda > 0.0) return kInf;
                if (lambda == 0.0) return 1.0;
                // E e^{lambda(Y - shift)}, Y ~ Pareto(alpha, 1): Simpson on the
                // substitution y = 1/u, u in (0,1].
                double alpha = p1_;
                auto f = [&](double u) {
                    if (u <= 0.0) return 0.0;
                    double y = 1.0 / u;
                    return alpha * std::pow(y, -alpha - 1.0) * std::exp(lambda * y) * y * y;
                };
                int n = 1 << 14;
                double h = 1.0 / n, s = f(1.0);
                for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(i * h);
                return std::exp(-lambda * p2_) * s * h / 3.0;
            }
        }
        fail("mgf: unreachable");
    }

    double mgf_lo() const {  // lambda_-
        switch (family_) {
            case Family::Lattice: return -kInf;
            case Family::Normal: return -kInf;
            case Family::ShiftedExponential: return -kInf;
            case Family::ParetoShifted: return -kInf;
        }
        fail("mgf_lo: unreachable");
    }

    double mgf_hi() const {  // lambda_+
        switch (family_) {
            case Family::Lattice: return kInf;
            case Family::Normal: return kInf;
            case Family::ShiftedExponential: return p1_;
            case Family::ParetoShifted: return 0.0;
        }
        fail("mgf_hi: unreachable");
    }

    // ---- declared tail metadata -------------------------------------------

    // Raw family parameters: (mu, sigma) | (rate, shift) | (alpha, shift).
    double family_param1() const { return p1_; }
    double family_param2() const { return p2_; }

    const std::optional<TailMajorant>& right_tail() const { return right_tail_; }
    const std::optional<TailMajorant>& left_tail() const { return left_tail_; }
    void declare_right_tail(TailMajorant t) { right_tail_ = t; }
    void declare_left_tail(TailMajorant t) { left_tail_ = t; }

    // Removed ideal-law mass for materialized unbounded supports; 0 otherwise.
    double cut_mass() const { return cut_mass_; }

    // Limiting F_+/F_* balance mapped to [-1, 1] from the declared tails.
    double tail_balance_rho() const {
        bool r = right_tail_.has_value(), l = left_tail_.has_value();
        if (r && !l) return 1.0;
        if (!r && l) return -1.0;
        if (r && l) {
            if (right_tail_->index != left_tail_->index)
                return right_tail_->index < left_tail_->index ? 1.0 : -1.0;
            double cv = right_tail_->constant, cw = left_tail_->constant;
            return (cv - cw) / (cv + cw);
        }
        fail("tail_balance_rho: no declared tail metadata");
    }

    // Requires a positive mean; renewal scenarios reject everything else.
    void require_renewal_mean() const {
        if (!(mean() > 0.0))
            fail_arg("model mean must be > 0 for renewal use (got " +
                     std::to_string(mean()) + ")");
    }

    std::string describe() const {
        switch (family_) {
            case Family::Lattice:
                return "lattice[" + std::to_string(min_support_) + ".." +
                       std::to_string(max_support_) + "], span " + std::to_string(span_);
            case Family::Normal:
                return "normal(mu=" + std::to_string(p1_) + ", sigma=" + std::to_string(p2_) + ")";
            case Family::ShiftedExponential:
                return "shifted_exponential(rate=" + std::to_string(p1_) +
                       ", shift=" + std::to_string(p2_) + ")";
            case Family::ParetoShifted:
                return "pareto_shifted(alpha=" + std::to_string(p1_) +
                       ", shift=" + std::to_string(p2_) + ")";
        }
        fail("describe: unreachable");
    }

  private:
    JumpModel() = default;

    void finalize_lattice(const char* what) {
        if (probs_.empty()) fail_arg(std::string(what) + ": empty probability table");
        double sum = 0.0;
        for (double p : probs_) {
            if (!(p >= 0.0)) fail_arg(std::string(what) + ": negative probability entry");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            fail_arg(std::string(what) + ": probabilities sum to " + std::to_string(sum) +
                     ", expected 1 within 1e-12");
        // trim zero borders so support bounds are tight
        std::size_t lo = 0, hi = probs_.size();
        while (lo < hi && probs_[lo] == 0.0) ++lo;
        while (hi > lo && probs_[hi - 1] == 0.0) --hi;
        if (lo == hi) fail_arg(std::string(what) + ": all-zero table");
        min_support_ = offset_ + static_cast<long>(lo);
        max_support_ = offset_ + static_cast<long>(hi) - 1;

        span_ = 0;
        long prev = 0;
        bool first = true;
        for (long k = min_support_; k <= max_support_; ++k) {
            if (pmf(k) == 0.0) continue;
            if (!first) span_ = positive_gcd(span_, k - prev);
            prev = k;
            first = false;
        }
        if (span_ == 0) span_ = 1;  // single atom

        // exact first two moments
        KahanSum m1, m2;
        for (long k = min_support_; k <= max_support_; ++k) {
            m1.add(pmf(k) * static_cast<double>(k));
        }
        mean_ = m1.value();
        for (long k = min_support_; k <= max_support_; ++k) {
            double d = static_cast<double>(k) - mean_;
            m2.add(pmf(k) * d * d);
        }
        var_ = m2.value();

        // suffix sums for O(1) exact tails: suffix_[i] = P(xi >= offset_+i)
        suffix_.assign(probs_.size() + 1, 0.0);
        for (std::size_t i = probs_.size(); i-- > 0;)
            suffix_[i] = suffix_[i + 1] + probs_[i];
    }

    double lattice_suffix(long k) const {  // P(xi >= k)
        if (k <= min_support_) return suffix_[static_cast<std::size_t>(
            std::max<long>(0, min_support_ - offset_))];
        if (k > max_support_) return 0.0;
        return suffix_[static_cast<std::size_t>(k - offset_)];
    }

    double lattice_prefix(long k) const {  // P(xi <= k)
        if (k < min_support_) return 0.0;
        if (k >= max_support_) return suffix_[0] - 0.0;  // total mass
        return suffix_[0] - suffix_[static_cast<std::size_t>(k + 1 - offset_)];
    }

    // Valid pure-power majorant for the materialized table: the scanned
    // constant sup_t F(t) t^index over the support is exact for this table.
    TailMajorant scan_power_majorant(double index, TailSide side) const {
        double c = 0.0;
        for (long k = std::max(min_support_, 1L); k <= max_support_; ++k) {
            double f = side == TailSide::Plus ? tail_plus(static_cast<double>(k))
                                              : tail_minus(static_cast<double>(k));
            c = std::max(c, f * std::pow(static_cast<double>(k), index));
        }
        return TailMajorant{index, c};
    }

    Family family_ = Family::Lattice;
    // lattice state
    long offset_ = 0;
    std::vector<double> probs_;
    std::vector<double> suffix_;
    long min_support_ = 0, max_support_ = 0, span_ = 1;
    double mean_ = 0.0, var_ = 0.0;
    double cut_mass_ = 0.0;
    // parametric families: (p1, p2) = (mu, sigma) | (rate, shift) | (alpha, shift)
    double p1_ = 0.0, p2_ = 0.0;

    std::optional<TailMajorant> right_tail_;
    std::optional<TailMajorant> left_tail_;
};

// (mu, sigma^2) with sigma^2 possibly infinite.
struct Moments {
    double mu;
    double sigma2;
};

inline Moments moments(const JumpModel& m) { return {m.mean(), m.variance()}; }

}  // namespace wrf

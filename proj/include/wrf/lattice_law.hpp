#pragma once

// Exact distribution of the walk S_n on a bounded integer window with
// tracked absorbed mass above and below. One convolution step advances
// n by one; mass leaving the window is absorbed and never re-enters.
//
// For models whose jumps are all >= 0 the above-absorption is exact for
// every in-window query. For signed jumps the window must carry enough
// margin that the absorbed mass stays negligible; the caller folds the
// tracked totals into its residual certificate.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "wrf/common.hpp"
#include "wrf/fft.hpp"
#include "wrf/jump_model.hpp"

namespace wrf {

// Precomputed per-window convolution geometry: the jump pmf clipped to the
// offsets that can map window to window, per-position absorption tails, and
// the clipped pmf's FFT when the support is wide.
class ConvPlan {
  public:
    ConvPlan(const JumpModel& model, long win_lo, long win_hi)
        : win_lo_(win_lo), win_hi_(win_hi) {
        if (!model.is_lattice()) fail_arg("ConvPlan: lattice model required");
        if (win_hi < win_lo) fail_arg("ConvPlan: empty window");
        const long w = win_hi - win_lo + 1;
        clip_lo_ = std::max(model.min_support(), -(w - 1));
        clip_hi_ = std::min(model.max_support(), w - 1);
        if (clip_lo_ > clip_hi_) {
            // no jump can stay inside: every step absorbs everything
            degenerate_ = true;
        } else {
            pmf_.resize(static_cast<std::size_t>(clip_hi_ - clip_lo_ + 1));
            for (long k = clip_lo_; k <= clip_hi_; ++k)
                pmf_[static_cast<std::size_t>(k - clip_lo_)] = model.pmf(k);
        }
        // absorb_below[i] = P(jump <= -i - 1), absorb_above[i] = P(jump >= w - i),
        // for a source at position win_lo + i.
        absorb_below_.resize(static_cast<std::size_t>(w));
        absorb_above_.resize(static_cast<std::size_t>(w));
        for (long i = 0; i < w; ++i) {
            absorb_below_[static_cast<std::size_t>(i)] =
                1.0 - model.tail_plus(static_cast<double>(-i));  // P(jump < -i)
            absorb_above_[static_cast<std::size_t>(i)] =
                model.tail_plus(static_cast<double>(w - i));
        }
        has_below_ = model.min_support() < 0;
        has_above_ = true;

        use_fft_ = !degenerate_ && pmf_.size() > 48 && static_cast<std::size_t>(w) > 48;
        if (use_fft_) {
            fft_n_ = detail::next_pow2(static_cast<std::size_t>(w) + pmf_.size() - 1);
            pmf_fft_.assign(fft_n_, {0.0, 0.0});
            for (std::size_t i = 0; i < pmf_.size(); ++i) pmf_fft_[i] = pmf_[i];
            detail::fft(pmf_fft_, false);
        }
    }

    long win_lo() const { return win_lo_; }
    long win_hi() const { return win_hi_; }
    long width() const { return win_hi_ - win_lo_ + 1; }

  private:
    friend class LatticeLaw;
    long win_lo_, win_hi_;
    long clip_lo_ = 0, clip_hi_ = -1;
    bool degenerate_ = false;
    bool has_below_ = false, has_above_ = false;
    std::vector<double> pmf_;
    std::vector<double> absorb_below_, absorb_above_;
    bool use_fft_ = false;
    std::size_t fft_n_ = 0;
    std::vector<std::complex<double>> pmf_fft_;
};

class LatticeLaw {
  public:
    // S_0 = delta_0 on the given window; the window must contain 0.
    static LatticeLaw start(long win_lo, long win_hi) {
        if (win_lo > 0 || win_hi < 0) fail_arg("LatticeLaw: window must contain 0");
        LatticeLaw law;
        law.lo_ = win_lo;
        law.p_.assign(static_cast<std::size_t>(win_hi - win_lo + 1), 0.0);
        law.p_[static_cast<std::size_t>(-win_lo)] = 1.0;
        return law;
    }

    long lo() const { return lo_; }
    long hi() const { return lo_ + static_cast<long>(p_.size()) - 1; }
    std::size_t steps() const { return n_; }
    double absorbed_below() const { return below_; }
    double absorbed_above() const { return above_; }
    std::span<const double> probs() const { return p_; }

    double p(long k) const {
        if (k < lo() || k > hi()) return 0.0;
        return p_[static_cast<std::size_t>(k - lo_)];
    }

    double total_in_window() const {
        KahanSum s;
        for (double v : p_) s.add(v);
        return s.value();
    }

    double mean_in_window() const {
        KahanSum s;
        for (std::size_t i = 0; i < p_.size(); ++i)
            s.add(p_[i] * static_cast<double>(lo_ + static_cast<long>(i)));
        return s.value();
    }

    // P(S_n in [x, x+delta)) from in-window bins.
    double window_prob(double x, double delta) const {
        long k_lo = static_cast<long>(std::ceil(x));
        long k_hi = static_cast<long>(std::ceil(x + delta)) - 1;
        k_lo = std::max(k_lo, lo());
        k_hi = std::min(k_hi, hi());
        double s = 0.0;
        for (long k = k_lo; k <= k_hi; ++k) s += p_[static_cast<std::size_t>(k - lo_)];
        return s;
    }

    // P(S_n < x), counting mass absorbed below the window.
    double cdf_below(double x) const {
        long k_hi = static_cast<long>(std::ceil(x)) - 1;  // largest k < x
        double s = below_;
        for (long k = lo(); k <= std::min(k_hi, hi()); ++k)
            s += p_[static_cast<std::size_t>(k - lo_)];
        return s;
    }

    // In-window prefix sums for O(1) window probabilities over an x-grid:
    // out[i] = sum of p over window bins [0, i-1].
    void prefix_sums(std::vector<double>& out) const {
        out.assign(p_.size() + 1, 0.0);
        for (std::size_t i = 0; i < p_.size(); ++i) out[i + 1] = out[i] + p_[i];
    }

    double prefix_window_prob(const std::vector<double>& prefix, double x,
                              double delta) const {
        long k_lo = std::max(static_cast<long>(std::ceil(x)), lo());
        long k_hi = std::min(static_cast<long>(std::ceil(x + delta)) - 1, hi());
        if (k_hi < k_lo) return 0.0;
        return prefix[static_cast<std::size_t>(k_hi - lo_ + 1)] -
               prefix[static_cast<std::size_t>(k_lo - lo_)];
    }

    // One convolution step using the cached plan; the plan's window must
    // match. Absorbed mass increments are exact.
    void step(const ConvPlan& plan) {
        if (plan.win_lo() != lo() || plan.width() != static_cast<long>(p_.size()))
            fail_arg("LatticeLaw::step: plan window mismatch");
        const std::size_t w = p_.size();

        if (plan.has_below_ || plan.has_above_) {
            KahanSum db, da;
            for (std::size_t i = 0; i < w; ++i) {
                if (p_[i] == 0.0) continue;
                if (plan.has_below_) db.add(p_[i] * plan.absorb_below_[i]);
                da.add(p_[i] * plan.absorb_above_[i]);
            }
            below_ += db.value();
            above_ += da.value();
        }

        if (plan.degenerate_) {
            std::fill(p_.begin(), p_.end(), 0.0);
            ++n_;
            return;
        }

        if (plan.use_fft_) {
            std::vector<std::complex<double>> buf(plan.fft_n_, {0.0, 0.0});
            for (std::size_t i = 0; i < w; ++i) buf[i] = p_[i];
            detail::fft(buf, false);
            for (std::size_t i = 0; i < plan.fft_n_; ++i) buf[i] *= plan.pmf_fft_[i];
            detail::fft(buf, true);
            // conv index j corresponds to position lo_ + clip_lo_ + j; keep
            // only the in-window slice and clamp FFT roundoff at zero.
            std::vector<double> next(w, 0.0);
            for (std::size_t i = 0; i < w; ++i) {
                long j = static_cast<long>(i) - plan.clip_lo_;
                double v = 0.0;
                if (j >= 0 && j < static_cast<long>(plan.fft_n_))
                    v = buf[static_cast<std::size_t>(j)].real();
                next[i] = v > 0.0 ? v : 0.0;
            }
            p_.swap(next);
        } else {
            std::vector<double> next(w, 0.0);
            for (long k = plan.clip_lo_; k <= plan.clip_hi_; ++k) {
                double pk = plan.pmf_[static_cast<std::size_t>(k - plan.clip_lo_)];
                if (pk == 0.0) continue;
                // next[i + k] += p_[i] * pk over valid i
                std::size_t src_lo = k < 0 ? static_cast<std::size_t>(-k) : 0;
                std::size_t src_hi = k > 0 ? w - static_cast<std::size_t>(k) : w;
                for (std::size_t i = src_lo; i < src_hi; ++i)
                    next[i + static_cast<std::size_t>(k)] += p_[i] * pk;
            }
            p_.swap(next);
        }
        ++n_;
    }

  private:
    LatticeLaw() = default;
    long lo_ = 0;
    std::vector<double> p_;
    double below_ = 0.0, above_ = 0.0;
    std::size_t n_ = 0;
};

// Exact law of S_n on a window covering the full reachable support, so no
// mass is ever absorbed. Intended for moderate n and supports.
inline LatticeLaw exact_law(const JumpModel& model, std::size_t n) {
    if (!model.is_lattice()) fail_arg("exact_law: lattice model required");
    long lo = std::min<long>(0, model.min_support() * static_cast<long>(n));
    long hi = std::max<long>(0, model.max_support() * static_cast<long>(n));
    if (hi - lo > 50'000'000)
        fail("exact_law: full-support window too wide (" + std::to_string(hi - lo) +
             " bins); use a windowed sweep instead");
    LatticeLaw law = LatticeLaw::start(lo, hi);
    ConvPlan plan(model, lo, hi);
    for (std::size_t i = 0; i < n; ++i) law.step(plan);
    return law;
}

}  // namespace wrf

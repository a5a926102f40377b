#pragma once

// Monte Carlo estimation of h(x, Delta) for models without an exact
// lattice engine (and as an independent cross-check for models with one).
// Path blocks draw from independent streams derived from the root seed by
// counter, so results are reproducible and safe to split across tasks.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "wrf/common.hpp"
#include "wrf/exact.hpp"
#include "wrf/jump_model.hpp"
#include "wrf/weights.hpp"

namespace wrf {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Small, fully specified generator so streams are identical across
// platforms and standard libraries.
class Rng {
  public:
    Rng(std::uint64_t root, std::uint64_t stream) {
        std::uint64_t s = root;
        splitmix64(s);
        s ^= 0xa0761d6478bd642fULL * (stream + 1);
        state_ = s;
        for (int i = 0; i < 4; ++i) splitmix64(state_);
    }

    std::uint64_t next() { return splitmix64(state_); }

    double uniform() {  // (0, 1]
        return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
    }

    double normal() {  // Box-Muller, cached spare
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

  private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

class JumpSampler {
  public:
    explicit JumpSampler(const JumpModel& m) : model_(&m) {
        if (m.is_lattice()) {
            cdf_.reserve(m.probs().size());
            double c = 0.0;
            for (double p : m.probs()) {
                c += p;
                cdf_.push_back(c);
            }
            cdf_.back() = 1.0;
        }
    }

    double operator()(Rng& rng) const {
        const JumpModel& m = *model_;
        switch (m.family()) {
            case Family::Lattice: {
                double u = rng.uniform();
                std::size_t lo = 0, hi = cdf_.size() - 1;
                while (lo < hi) {
                    std::size_t mid = (lo + hi) / 2;
                    if (cdf_[mid] < u) lo = mid + 1;
                    else hi = mid;
                }
                return static_cast<double>(m.offset() + static_cast<long>(lo));
            }
            case Family::Normal:
                return m.family_param1() + m.family_param2() * rng.normal();
            case Family::ShiftedExponential:
                return m.family_param2() - std::log(rng.uniform()) / m.family_param1();
            case Family::ParetoShifted:
                return std::pow(rng.uniform(), -1.0 / m.family_param1()) - m.family_param2();
        }
        fail("JumpSampler: unreachable");
    }

  private:
    const JumpModel* model_;
    std::vector<double> cdf_;
};

}  // namespace detail

struct McEstimate {
    double estimate = 0.0;
    double std_error = 0.0;  // sample std / sqrt(paths)
    std::size_t paths = 0;
    std::string seed_descriptor;
    std::size_t horizon = 0;
    double horizon_tail_bound = 0.0;  // certified bound on the dropped n > horizon part
};

// Mean over paths of sum_{n<=horizon} a_n 1{S_n in [x, x+delta)}.
inline McEstimate h_mc(const JumpModel& model, const WeightSeq& weights, double x,
                       double delta, std::size_t paths, std::size_t horizon,
                       std::uint64_t root_seed = 0) {
    if (!(delta > 0.0)) fail_arg("h_mc: delta must be > 0");
    if (paths == 0) fail_arg("h_mc: need at least one path");
    model.require_renewal_mean();

    // drift bound on the ignored tail, reported with the estimate
    double tail = 0.0;
    {
        const bool is_exp = weights.kind() == WeightSeq::Kind::Exp;
        const WeightSeq& base = is_exp ? weights.base() : weights;
        const double q = is_exp ? weights.q() : 0.0;
        double best = kInf;
        for (int i = -14; i <= 7; ++i) {
            double lam = -std::ldexp(1.0, i);
            best = std::min(best, detail::chernoff_tail(model, base, q, lam, horizon, x + delta));
        }
        tail = best;
    }

    detail::JumpSampler sample(model);
    const std::size_t block = 4096;
    double mean = 0.0, m2 = 0.0;
    std::size_t done = 0;
    std::size_t n_blocks = (paths + block - 1) / block;
    for (std::size_t b = 0; b < n_blocks; ++b) {
        detail::Rng rng(root_seed, b);
        std::size_t count = std::min(block, paths - b * block);
        for (std::size_t p = 0; p < count; ++p) {
            double s = 0.0;
            KahanSum y;
            if (x <= 0.0 && 0.0 < x + delta) y.add(weights(0));
            for (std::size_t n = 1; n <= horizon; ++n) {
                s += sample(rng);
                if (x <= s && s < x + delta) y.add(weights(n));
            }
            ++done;
            double v = y.value();
            double d = v - mean;
            mean += d / static_cast<double>(done);
            m2 += d * (v - mean);
        }
    }
    double var = done > 1 ? m2 / static_cast<double>(done - 1) : 0.0;
    McEstimate est;
    est.estimate = mean;
    est.std_error = std::sqrt(std::max(var, 0.0) / static_cast<double>(done));
    est.paths = done;
    est.horizon = horizon;
    est.horizon_tail_bound = tail;
    est.seed_descriptor = "splitmix64(root=" + std::to_string(root_seed) + ", blocks=" +
                          std::to_string(n_blocks) + "x" + std::to_string(block) + ")";
    return est;
}

// A sensible horizon: past the bulk x/mu plus a dispersion cushion.
inline std::size_t default_mc_horizon(const JumpModel& model, double x, double delta) {
    double mu = model.mean();
    double var = model.variance_finite() ? model.variance() : mu * mu;
    double bulk = (x + delta) / mu;
    return static_cast<std::size_t>(std::ceil(bulk + 12.0 * std::sqrt(var * bulk) / mu + 64.0));
}

}  // namespace wrf

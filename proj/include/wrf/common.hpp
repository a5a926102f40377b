#pragma once

// Small shared helpers used across the library.

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace wrf {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] inline void fail(const std::string& msg) {
    throw std::runtime_error(msg);
}

[[noreturn]] inline void fail_arg(const std::string& msg) {
    throw std::invalid_argument(msg);
}

// Compensated accumulator for long sums of mixed-sign terms.
struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;

    void add(double v) {
        double y = v - carry;
        double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    double value() const { return sum; }
};

// Floor-index convention for evaluating a sequence at a real argument.
inline std::size_t floor_index(double x) {
    if (x < 0.0) fail_arg("floor_index: negative argument " + std::to_string(x));
    return static_cast<std::size_t>(std::floor(x));
}

inline long positive_gcd(long a, long b) {
    return std::gcd(std::abs(a), std::abs(b));
}

}  // namespace wrf

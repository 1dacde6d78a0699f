#ifndef OMCOOL_TEST_HELPERS_HPP
#define OMCOOL_TEST_HELPERS_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace omtest {

// Reproducible Gaussian draws for synthetic data, independent of the
// standard library's distribution implementation.
class Gauss {
public:
    explicit Gauss(std::uint64_t seed) : rng_(seed) {}

    double operator()() {
        if (have_) {
            have_ = false;
            return spare_;
        }
        const double u1 = (static_cast<double>(rng_() >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = (static_cast<double>(rng_() >> 11) + 1.0) * 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
        have_ = true;
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 rng_;
    double spare_ = 0.0;
    bool have_ = false;
};

inline double rel_diff(double a, double b) {
    return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

} // namespace omtest

#endif

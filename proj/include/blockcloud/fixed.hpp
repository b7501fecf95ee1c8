#ifndef BLOCKCLOUD_FIXED_HPP
#define BLOCKCLOUD_FIXED_HPP

#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace blockcloud {

/// CFTX amount as a decimal fixed-point value with 6 fractional digits.
/// All ledger arithmetic is carried in whole micro-CFTX so that sum
/// invariants (credit tables, token supply, reward splits) hold exactly.
class Cftx {
public:
    static constexpr std::int64_t kScale = 1'000'000;

    constexpr Cftx() = default;

    static constexpr Cftx from_micro(std::int64_t micro) {
        Cftx c;
        c.micro_ = micro;
        return c;
    }

    static constexpr Cftx from_units(std::int64_t units) {
        return from_micro(units * kScale);
    }

    /// Quantizes a real-valued amount to the nearest micro-CFTX.
    static Cftx from_real(double value) {
        if (!std::isfinite(value)) throw std::domain_error("Cftx: non-finite value");
        return from_micro(std::llround(value * static_cast<double>(kScale)));
    }

    constexpr std::int64_t micro() const { return micro_; }
    double real() const { return static_cast<double>(micro_) / kScale; }

    constexpr bool is_negative() const { return micro_ < 0; }

    friend constexpr Cftx operator+(Cftx a, Cftx b) { return from_micro(a.micro_ + b.micro_); }
    friend constexpr Cftx operator-(Cftx a, Cftx b) { return from_micro(a.micro_ - b.micro_); }
    constexpr Cftx operator-() const { return from_micro(-micro_); }
    Cftx& operator+=(Cftx o) { micro_ += o.micro_; return *this; }
    Cftx& operator-=(Cftx o) { micro_ -= o.micro_; return *this; }

    /// Scales by a nonnegative fraction, rounding down (dust stays with the caller).
    Cftx scaled_floor(double fraction) const {
        if (fraction < 0.0 || !std::isfinite(fraction))
            throw std::domain_error("Cftx: bad scale fraction");
        long double v = static_cast<long double>(micro_) * static_cast<long double>(fraction);
        return from_micro(static_cast<std::int64_t>(std::floor(v)));
    }

    /// Scales by a multiplier, rounding to nearest (market-value style pricing).
    Cftx scaled_round(double multiplier) const {
        long double v = static_cast<long double>(micro_) * static_cast<long double>(multiplier);
        return from_micro(static_cast<std::int64_t>(std::llroundl(v)));
    }

    friend constexpr auto operator<=>(Cftx, Cftx) = default;

    std::string str() const {
        std::int64_t m = micro_;
        const char* sign = m < 0 ? "-" : "";
        if (m < 0) m = -m;
        std::int64_t whole = m / kScale;
        std::int64_t frac = m % kScale;
        char buf[40];
        std::snprintf(buf, sizeof buf, "%s%lld.%06lld", sign,
                      static_cast<long long>(whole), static_cast<long long>(frac));
        return buf;
    }

private:
    std::int64_t micro_ = 0;
};

constexpr Cftx kZeroCftx{};

}  // namespace blockcloud

#endif

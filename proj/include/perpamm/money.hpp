#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace perpamm {

using Seconds = std::int64_t;

// 128-bit intermediate for products of two fixed-point amounts.
__extension__ typedef __int128 Wide;

inline constexpr Seconds kSecondsPerYear = 31'536'000;

enum class Rounding { HalfEven, Floor, Ceil };

// Fixed-point amount with six fractional decimal digits. Used for collateral,
// notional sizes, prices and vault assets alike.
class Money {
public:
    static constexpr std::int64_t kScale = 1'000'000;

    constexpr Money() = default;

    static constexpr Money from_units(std::int64_t units) { return Money(units); }
    static constexpr Money whole(std::int64_t value) { return Money(value * kScale); }
    // Quantizes a binary64 value onto the six-digit grid.
    static Money from_double(double value, Rounding mode = Rounding::HalfEven);
    // Exact decimal parse ("2000.5", "-1e3" is rejected); digits beyond the
    // sixth fractional place are rounded half-even.
    static Money parse(std::string_view text);

    constexpr std::int64_t units() const { return units_; }
    double to_double() const { return static_cast<double>(units_) / kScale; }

    // Fixed notation with the requested number of fractional digits (>= 6).
    std::string to_string(int fractional_digits = 6) const;

    constexpr Money operator-() const { return Money(-units_); }
    constexpr Money& operator+=(Money rhs) { units_ += rhs.units_; return *this; }
    constexpr Money& operator-=(Money rhs) { units_ -= rhs.units_; return *this; }
    friend constexpr Money operator+(Money a, Money b) { return Money(a.units_ + b.units_); }
    friend constexpr Money operator-(Money a, Money b) { return Money(a.units_ - b.units_); }
    friend constexpr auto operator<=>(Money, Money) = default;

private:
    constexpr explicit Money(std::int64_t units) : units_(units) {}
    std::int64_t units_ = 0;
};

inline constexpr Money max(Money a, Money b) { return a < b ? b : a; }
inline constexpr Money min(Money a, Money b) { return a < b ? a : b; }

// Integer division of a 128-bit numerator with the requested rounding.
std::int64_t divide(Wide numerator, Wide denominator, Rounding mode);

// Percent values that drive exact comparisons (slippage, oracle bands) are
// pinned to nine fractional digits before use.
std::int64_t percent_to_nano(double percent);

// True iff 100 * numerator / denominator <= percent, evaluated exactly
// against the nine-digit quantization of `percent`.
bool ratio_within_percent(Money numerator, Money denominator, double percent);

// Rounds a binary64 value half-even to nine fractional digits.
double quantize9(double value);

// `value` in fixed notation with nine fractional digits.
std::string format9(double value);

}  // namespace perpamm

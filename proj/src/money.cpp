#include "perpamm/money.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "perpamm/error.hpp"

namespace perpamm {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::DomainError: return "DomainError";
        case ErrorCode::QuoteError: return "QuoteError";
        case ErrorCode::InvalidPrice: return "InvalidPrice";
        case ErrorCode::StaleFeed: return "StaleFeed";
        case ErrorCode::DeviationTooHigh: return "DeviationTooHigh";
        case ErrorCode::MissingFeed: return "MissingFeed";
        case ErrorCode::UnknownMarket: return "UnknownMarket";
        case ErrorCode::UnknownOrder: return "UnknownOrder";
        case ErrorCode::PositionNotFound: return "PositionNotFound";
        case ErrorCode::InvalidOrder: return "InvalidOrder";
        case ErrorCode::LeverageExceeded: return "LeverageExceeded";
        case ErrorCode::SlippageExceeded: return "SlippageExceeded";
        case ErrorCode::OpenInterestCapExceeded: return "OpenInterestCapExceeded";
        case ErrorCode::ExposureCapExceeded: return "ExposureCapExceeded";
        case ErrorCode::InsufficientLiquidity: return "InsufficientLiquidity";
        case ErrorCode::InsufficientCollateral: return "InsufficientCollateral";
        case ErrorCode::InsufficientFunds: return "InsufficientFunds";
        case ErrorCode::NotLiquidatable: return "NotLiquidatable";
        case ErrorCode::ZeroAmount: return "ZeroAmount";
        case ErrorCode::ZeroShareMint: return "ZeroShareMint";
        case ErrorCode::InsufficientShares: return "InsufficientShares";
        case ErrorCode::LiquidityReserved: return "LiquidityReserved";
        case ErrorCode::InsolventVault: return "InsolventVault";
        case ErrorCode::ClockRegression: return "ClockRegression";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::InvalidScenario: return "InvalidScenario";
        case ErrorCode::InvalidTrace: return "InvalidTrace";
        case ErrorCode::InvalidGrid: return "InvalidGrid";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

namespace {

double round_with(double scaled, Rounding mode) {
    switch (mode) {
        case Rounding::Floor: return std::floor(scaled);
        case Rounding::Ceil: return std::ceil(scaled);
        case Rounding::HalfEven: break;
    }
    // nearbyint honours the default FE_TONEAREST mode: ties go to even.
    return std::nearbyint(scaled);
}

}  // namespace

Money Money::from_double(double value, Rounding mode) {
    if (!std::isfinite(value)) {
        throw Error(ErrorCode::DomainError, "non-finite monetary value");
    }
    const double scaled = round_with(value * static_cast<double>(kScale), mode);
    if (std::abs(scaled) >= 9.0e18) {
        throw Error(ErrorCode::DomainError, "monetary value out of range");
    }
    return Money(static_cast<std::int64_t>(scaled));
}

Money Money::parse(std::string_view text) {
    auto fail = [&]() -> Error {
        return Error(ErrorCode::DomainError, "malformed decimal '" + std::string(text) + "'");
    };
    std::size_t i = 0;
    bool negative = false;
    if (i < text.size() && (text[i] == '-' || text[i] == '+')) {
        negative = text[i] == '-';
        ++i;
    }
    Wide integral = 0;
    std::size_t digits = 0;
    for (; i < text.size() && text[i] >= '0' && text[i] <= '9'; ++i, ++digits) {
        integral = integral * 10 + (text[i] - '0');
        if (integral > static_cast<Wide>(std::numeric_limits<std::int64_t>::max() / kScale)) {
            throw fail();
        }
    }
    std::int64_t fraction = 0;
    int kept = 0;
    int first_dropped = -1;
    bool sticky = false;
    if (i < text.size() && text[i] == '.') {
        ++i;
        for (; i < text.size() && text[i] >= '0' && text[i] <= '9'; ++i, ++digits) {
            const int d = text[i] - '0';
            if (kept < 6) {
                fraction = fraction * 10 + d;
                ++kept;
            } else if (first_dropped < 0) {
                first_dropped = d;
            } else if (d != 0) {
                sticky = true;
            }
        }
    }
    if (digits == 0 || i != text.size()) throw fail();
    for (; kept < 6; ++kept) fraction *= 10;
    Wide units = integral * kScale + fraction;
    if (first_dropped > 5 || (first_dropped == 5 && (sticky || (units & 1) != 0))) {
        ++units;
    }
    return Money(static_cast<std::int64_t>(negative ? -units : units));
}

std::string Money::to_string(int fractional_digits) const {
    const bool negative = units_ < 0;
    const Wide magnitude = negative ? -static_cast<Wide>(units_) : units_;
    const auto integral = static_cast<unsigned long long>(magnitude / kScale);
    const auto fraction = static_cast<unsigned long long>(magnitude % kScale);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s%llu.%06llu", negative ? "-" : "", integral, fraction);
    std::string out(buf);
    if (fractional_digits > 6) out.append(static_cast<std::size_t>(fractional_digits - 6), '0');
    return out;
}

std::int64_t divide(Wide numerator, Wide denominator, Rounding mode) {
    if (denominator == 0) throw Error(ErrorCode::DomainError, "division by zero");
    if (denominator < 0) {
        numerator = -numerator;
        denominator = -denominator;
    }
    Wide q = numerator / denominator;
    Wide r = numerator % denominator;
    if (r != 0) {
        switch (mode) {
            case Rounding::Floor:
                if (r < 0) --q;
                break;
            case Rounding::Ceil:
                if (r > 0) ++q;
                break;
            case Rounding::HalfEven: {
                const Wide twice = 2 * (r < 0 ? -r : r);
                const int dir = r < 0 ? -1 : 1;
                if (twice > denominator || (twice == denominator && (q & 1) != 0)) q += dir;
                break;
            }
        }
    }
    return static_cast<std::int64_t>(q);
}

std::int64_t percent_to_nano(double percent) {
    if (!std::isfinite(percent)) throw Error(ErrorCode::DomainError, "non-finite percent");
    return static_cast<std::int64_t>(std::nearbyint(percent * 1e9));
}

bool ratio_within_percent(Money numerator, Money denominator, double percent) {
    const Wide lhs = static_cast<Wide>(numerator.units()) * 100 * 1'000'000'000;
    const Wide rhs = static_cast<Wide>(denominator.units()) * percent_to_nano(percent);
    return lhs <= rhs;
}

double quantize9(double value) {
    const double scaled = value * 1e9;
    if (!std::isfinite(scaled) || std::abs(scaled) > 9.0e15) return value;
    return std::nearbyint(scaled) / 1e9;
}

std::string format9(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9f", value);
    std::string out(buf);
    if (out == "-0.000000000") out.erase(0, 1);
    return out;
}

}  // namespace perpamm

#pragma once

// Liquidity-curve and borrowing-fee curves. All inputs and outputs live on the
// 0-100 percent scale. Templated on the scalar so the same expressions can be
// evaluated in extended precision by tests and tooling.

#include <cmath>
#include <concepts>
#include <string>
#include <utility>

#include "perpamm/error.hpp"

namespace perpamm {

template <std::floating_point Scalar>
struct BasicDeviationParams {
    Scalar k_delta{0};  // coefficient of u^2
    Scalar c_d{0};      // minimum deviation, percent

    friend bool operator==(const BasicDeviationParams&, const BasicDeviationParams&) = default;
};

template <std::floating_point Scalar>
struct BasicBaseFeeParams {
    Scalar k_b{0};  // coefficient of u^2
    Scalar c_b{0};  // floor rate, percent per year

    friend bool operator==(const BasicBaseFeeParams&, const BasicBaseFeeParams&) = default;
};

template <std::floating_point Scalar>
struct BasicDynamicFeeParams {
    Scalar m_max{0};      // asymptotic maximum, percent per year
    Scalar steepness{1};  // sigmoid steepness per percent of skew

    friend bool operator==(const BasicDynamicFeeParams&, const BasicDynamicFeeParams&) = default;
};

using DeviationParams = BasicDeviationParams<double>;
using BaseFeeParams = BasicBaseFeeParams<double>;
using DynamicFeeParams = BasicDynamicFeeParams<double>;

template <std::floating_point Scalar>
struct BasicQuote {
    Scalar long_price;
    Scalar short_price;
};

template <std::floating_point Scalar>
struct BasicBorrowRates {
    Scalar long_rate;
    Scalar short_rate;
};

using Quote = BasicQuote<double>;
using BorrowRates = BasicBorrowRates<double>;

namespace detail {

template <std::floating_point Scalar>
void require_utilization(Scalar u) {
    if (!(u >= Scalar(0) && u <= Scalar(100))) {
        throw Error(ErrorCode::DomainError,
                    "utilization " + std::to_string(static_cast<double>(u)) + " outside [0, 100]");
    }
}

// Degree-2 even parabola shared by the deviation and base-fee curves.
template <std::floating_point Scalar>
constexpr Scalar even_parabola(Scalar x, Scalar coefficient, Scalar constant) {
    return coefficient * x * x + constant;
}

}  // namespace detail

/// Price deviation (virtual spread) at utilization `u`: k_delta * u^2 + c_d.
template <std::floating_point Scalar>
Scalar eval_deviation(Scalar u, const BasicDeviationParams<Scalar>& p) {
    detail::require_utilization(u);
    return detail::even_parabola(u, p.k_delta, p.c_d);
}

/// Long quotes sit delta percent above the oracle price, short quotes the
/// same distance below it.
template <std::floating_point Scalar>
BasicQuote<Scalar> quote_prices(Scalar oracle_price, Scalar u, const BasicDeviationParams<Scalar>& p) {
    if (!(oracle_price > Scalar(0))) {
        throw Error(ErrorCode::DomainError, "oracle price must be positive");
    }
    const Scalar delta = eval_deviation(u, p);
    if (delta >= Scalar(100)) {
        throw Error(ErrorCode::QuoteError, "deviation of 100% or more leaves no short quote");
    }
    const Scalar offset = oracle_price * delta / Scalar(100);
    return {oracle_price + offset, oracle_price - offset};
}

/// Annualized base borrowing fee: k_b * u^2 + c_b.
template <std::floating_point Scalar>
Scalar eval_base_fee(Scalar u, const BasicBaseFeeParams<Scalar>& p) {
    detail::require_utilization(u);
    return detail::even_parabola(u, p.k_b, p.c_b);
}

/// Market skew 100 * |L - S| / P.
template <std::floating_point Scalar>
Scalar compute_skew(Scalar long_oi, Scalar short_oi, Scalar pool_value) {
    if (!(pool_value > Scalar(0))) {
        throw Error(ErrorCode::DomainError, "pool value must be positive");
    }
    if (long_oi < Scalar(0) || short_oi < Scalar(0)) {
        throw Error(ErrorCode::DomainError, "open interest must be non-negative");
    }
    return Scalar(100) * std::abs(long_oi - short_oi) / pool_value;
}

/// Annualized dynamic borrowing fee M (1 - e^{-k s}) / (1 + e^{-k s}).
///
/// Evaluated through expm1 so small skews keep full relative precision; the
/// value is identical to M tanh(k s / 2).
template <std::floating_point Scalar>
Scalar eval_dynamic_fee(Scalar skew, const BasicDynamicFeeParams<Scalar>& p) {
    if (!(skew >= Scalar(0))) {
        throw Error(ErrorCode::DomainError, "skew must be non-negative");
    }
    const Scalar em1 = std::expm1(-p.steepness * skew);  // e^{-ks} - 1
    return p.m_max * (-em1) / (Scalar(2) + em1);
}

/// Total borrow rate per side. Both sides pay the base fee; only the side
/// with strictly larger open interest pays the dynamic fee.
template <std::floating_point Scalar>
BasicBorrowRates<Scalar> total_borrow_rates(Scalar u, Scalar long_oi, Scalar short_oi, Scalar pool_value,
                                            const BasicBaseFeeParams<Scalar>& base,
                                            const BasicDynamicFeeParams<Scalar>& dyn) {
    const Scalar base_rate = eval_base_fee(u, base);
    const Scalar dynamic_rate = eval_dynamic_fee(compute_skew(long_oi, short_oi, pool_value), dyn);
    BasicBorrowRates<Scalar> rates{base_rate, base_rate};
    if (long_oi > short_oi) {
        rates.long_rate += dynamic_rate;
    } else if (short_oi > long_oi) {
        rates.short_rate += dynamic_rate;
    }
    return rates;
}

}  // namespace perpamm

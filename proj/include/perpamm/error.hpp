#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace perpamm {

enum class ErrorCode {
    DomainError,
    QuoteError,
    InvalidPrice,
    StaleFeed,
    DeviationTooHigh,
    MissingFeed,
    UnknownMarket,
    UnknownOrder,
    PositionNotFound,
    InvalidOrder,
    LeverageExceeded,
    SlippageExceeded,
    OpenInterestCapExceeded,
    ExposureCapExceeded,
    InsufficientLiquidity,
    InsufficientCollateral,
    InsufficientFunds,
    NotLiquidatable,
    ZeroAmount,
    ZeroShareMint,
    InsufficientShares,
    LiquidityReserved,
    InsolventVault,
    ClockRegression,
    InvalidConfig,
    InvalidScenario,
    InvalidTrace,
    InvalidGrid,
    IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure the engine reports carries a stable code; the CLI prints it
// as `ERROR <code>: <message>`.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace perpamm

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "perpamm/curve_math.hpp"
#include "perpamm/money.hpp"
#include "perpamm/oracle.hpp"
#include "perpamm/vault.hpp"

namespace perpamm {

using OrderId = std::uint64_t;
using PositionId = std::uint64_t;

enum class Direction { Long, Short };

enum class OrderKind { MarketOpen, MarketClose, LimitOpen, StopLoss, TakeProfit };

std::string_view to_string(Direction d) noexcept;
std::string_view to_string(OrderKind k) noexcept;
std::optional<Direction> parse_direction(std::string_view text) noexcept;
std::optional<OrderKind> parse_order_kind(std::string_view text) noexcept;

bool is_open_kind(OrderKind kind) noexcept;
bool is_trigger_kind(OrderKind kind) noexcept;

// Side of the quote consumed when opening (`opening`) or closing a position.
TradeSide trade_side(Direction direction, bool opening) noexcept;

struct MarketConfig {
    std::string market_id;
    DeviationParams deviation;
    BaseFeeParams base_fee;
    DynamicFeeParams dynamic_fee;
    Money max_open_interest;          // per side
    double max_leverage = 1.0;
    Money max_exposure;               // |L - S|
    double maintenance_margin_rate = 0.0;  // percent of size
    double open_close_fee_rate = 0.0;      // percent of size
    double liquidation_fee_rate = 0.0;     // percent of remaining equity
    double treasury_share = 0.0;           // percent of fee revenue kept by the treasury
    OracleConfig oracle;

    friend bool operator==(const MarketConfig&, const MarketConfig&) = default;
};

struct ConfigViolation {
    std::string field;
    std::string message;
};

// Checks every MarketConfig invariant; empty when the config is usable.
std::vector<ConfigViolation> validate(const MarketConfig& cfg);

struct PoolState {
    Money pool_value;
    Money reserved;
    Money long_oi;
    Money short_oi;
    double cum_fee_index_long = 0.0;
    double cum_fee_index_short = 0.0;
    Seconds last_accrual_time = 0;

    double index(Direction d) const { return d == Direction::Long ? cum_fee_index_long : cum_fee_index_short; }

    friend bool operator==(const PoolState&, const PoolState&) = default;
};

struct Position {
    PositionId position_id = 0;
    std::string owner;
    std::string market_id;
    Direction direction = Direction::Long;
    Money size;
    Money collateral;
    Money entry_price;
    double entry_fee_index = 0.0;

    friend bool operator==(const Position&, const Position&) = default;
};

struct Order {
    OrderId order_id = 0;  // assigned by create_order
    std::string owner;
    std::string market_id;
    OrderKind kind = OrderKind::MarketOpen;
    Direction direction = Direction::Long;
    Money size;
    Money collateral;
    Money acceptable_price;
    double max_slippage = 0.0;  // percent
    Money trigger_price;
    PositionId position_id = 0;  // closing kinds only
    Seconds created_at = 0;

    friend bool operator==(const Order&, const Order&) = default;
};

struct SettlementReceipt {
    OrderId order_id = 0;
    PositionId position_id = 0;
    Money executed_price;
    Money open_close_fee;
    Money borrow_fee_paid;
    Money realized_pnl;
    Money liquidation_fee;
    Money payout;  // returned to the owner's wallet

    friend bool operator==(const SettlementReceipt&, const SettlementReceipt&) = default;
};

// 100 * reserved / pool_value.
double utilization(const PoolState& pool);

// Annualized borrow rates for both sides at the current pool state, quantized
// to nine fractional digits. Zero when the pool is empty.
BorrowRates current_borrow_rates(const PoolState& pool, const MarketConfig& cfg);

// Advances both cumulative fee indices to `now` at the rates implied by the
// pre-accrual state.
PoolState accrue_fees(PoolState pool, const MarketConfig& cfg, Seconds now);

// Execution quote on the fixed-point grid: the deviation is quantized to nine
// digits and applied symmetrically, so long + short = 2 * oracle exactly.
struct MoneyQuote {
    Money long_price;
    Money short_price;
};
MoneyQuote quote_execution_prices(Money oracle_price, double u, const DeviationParams& p);

// size * (mark - entry) / entry, signed by direction, floored.
Money position_pnl(const Position& pos, Money mark_price);

// Borrow fees owed since entry: size * (index_now - entry_index).
Money owed_borrow_fees(const Position& pos, const PoolState& pool);

// collateral + pnl - owed borrow fees.
Money position_equity(const Position& pos, const PoolState& pool, Money mark_price);

// equity <= maintenance_margin_rate% of size.
bool check_liquidation(const Position& pos, const PoolState& pool, const MarketConfig& cfg, Money mark_price);

struct Market {
    MarketConfig config;
    PoolState pool;

    friend bool operator==(const Market&, const Market&) = default;
};

// Everything the engine mutates. Value type: copies are snapshots.
struct EngineState {
    std::map<std::string, Market> markets;
    FeedStore feeds;
    Vault vault;
    std::map<std::string, Money> wallets;
    std::map<OrderId, Order> orders;
    std::map<PositionId, Position> positions;
    Money treasury;
    OrderId next_order_id = 1;

    friend bool operator==(const EngineState&, const EngineState&) = default;
};

// Single-writer protocol state machine. Every mutating call either commits in
// full or throws and leaves the state untouched.
class Engine {
public:
    Engine() = default;
    explicit Engine(const std::vector<MarketConfig>& markets, Seconds start_time = 0);

    void add_market(const MarketConfig& cfg, Seconds start_time = 0);

    void fund(const std::string& account, Money amount);
    void ingest_price(const PricePoint& point);

    Shares deposit(const std::string& account, Money assets);
    Money redeem(const std::string& account, Shares shares);

    // Accrues every market to `now`.
    void accrue(Seconds now);
    void accrue(const std::string& market_id, Seconds now);

    OrderId create_order(Order order, Seconds now);
    void cancel_order(OrderId id);
    SettlementReceipt settle_order(OrderId id, Seconds now);
    SettlementReceipt liquidate(PositionId id, Seconds now);

    // Trigger orders in `market_id` whose level `mark_price` has reached.
    std::vector<OrderId> evaluate_triggers(const std::string& market_id, Money mark_price, Seconds now) const;

    // Aggregate oracle mark for closing `pos` at `now`.
    Money liquidation_mark(const Position& pos, Seconds now) const;

    const EngineState& state() const { return state_; }
    const Market& market(const std::string& market_id) const;
    Money wallet(const std::string& account) const;

    // Wallets + escrowed order collateral + position collateral + vault + treasury.
    Money total_value() const;

private:
    EngineState state_;
};

}  // namespace perpamm

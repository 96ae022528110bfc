#include "perpamm/market_engine.hpp"

#include <algorithm>
#include <cmath>

#include "perpamm/error.hpp"

namespace perpamm {

namespace {

constexpr std::int64_t kNano = 1'000'000'000;

// amount * percent / 100 on the fixed-point grid.
Money percent_of(Money amount, double percent, Rounding mode) {
    return Money::from_units(divide(static_cast<Wide>(amount.units()) * percent_to_nano(percent),
                                    static_cast<Wide>(100) * kNano, mode));
}

Money clamp_money(Money value, Money lo, Money hi) { return max(lo, min(value, hi)); }

std::string market_ref(const std::string& id) { return "market '" + id + "'"; }

Market& find_market(EngineState& s, const std::string& id) {
    const auto it = s.markets.find(id);
    if (it == s.markets.end()) throw Error(ErrorCode::UnknownMarket, "unknown " + market_ref(id));
    return it->second;
}

Money& wallet_of(EngineState& s, const std::string& account) { return s.wallets[account]; }

Money total_reserved(const EngineState& s) {
    Money total;
    for (const auto& [id, m] : s.markets) total += m.pool.reserved;
    return total;
}

void sync_pool_value(EngineState& s) {
    for (auto& [id, m] : s.markets) m.pool.pool_value = s.vault.total_assets();
}

// Splits fee revenue between treasury and vault; the treasury share is floored.
void route_revenue(EngineState& s, const MarketConfig& cfg, Money revenue) {
    if (revenue <= Money{}) return;
    const Money treasury = percent_of(revenue, cfg.treasury_share, Rounding::Floor);
    s.treasury += treasury;
    s.vault.credit(revenue - treasury);
}

// Positive: the vault gains; negative: the vault pays the trader.
void settle_with_vault(EngineState& s, Money vault_delta) {
    if (vault_delta >= Money{}) {
        s.vault.credit(vault_delta);
    } else {
        s.vault.debit(-vault_delta);
    }
}

void check_slippage(Money executed, Money acceptable, TradeSide side, double max_slippage) {
    const bool adverse = side == TradeSide::Buy ? executed > acceptable : executed < acceptable;
    if (!adverse) return;
    const Money move = side == TradeSide::Buy ? executed - acceptable : acceptable - executed;
    if (!ratio_within_percent(move, acceptable, max_slippage)) {
        throw Error(ErrorCode::SlippageExceeded,
                    "execution price " + executed.to_string() + " moved more than " +
                        std::to_string(max_slippage) + "% from " + acceptable.to_string());
    }
}

double clamped_utilization(const PoolState& pool) {
    if (pool.pool_value <= Money{}) {
        throw Error(ErrorCode::InsufficientLiquidity, "pool has no liquidity");
    }
    return std::min(utilization(pool), 100.0);
}

Money execution_price(const EngineState& s, const Market& m, TradeSide side, Seconds now) {
    const Money oracle = aggregate(s.feeds, side, m.config.oracle, now);
    const MoneyQuote quote = quote_execution_prices(oracle, clamped_utilization(m.pool), m.config.deviation);
    return side == TradeSide::Buy ? quote.long_price : quote.short_price;
}

Money& side_oi(PoolState& pool, Direction d) { return d == Direction::Long ? pool.long_oi : pool.short_oi; }

void remove_exposure(PoolState& pool, const Position& pos) {
    side_oi(pool, pos.direction) -= pos.size;
    pool.reserved -= pos.size;
}

void drop_position(EngineState& s, PositionId id) {
    s.positions.erase(id);
    std::erase_if(s.orders, [id](const auto& entry) {
        return !is_open_kind(entry.second.kind) && entry.second.position_id == id;
    });
}

}  // namespace

std::string_view to_string(Direction d) noexcept { return d == Direction::Long ? "long" : "short"; }

std::string_view to_string(OrderKind k) noexcept {
    switch (k) {
        case OrderKind::MarketOpen: return "market_open";
        case OrderKind::MarketClose: return "market_close";
        case OrderKind::LimitOpen: return "limit_open";
        case OrderKind::StopLoss: return "stop_loss";
        case OrderKind::TakeProfit: return "take_profit";
    }
    return "unknown";
}

std::optional<Direction> parse_direction(std::string_view text) noexcept {
    if (text == "long") return Direction::Long;
    if (text == "short") return Direction::Short;
    return std::nullopt;
}

std::optional<OrderKind> parse_order_kind(std::string_view text) noexcept {
    for (auto k : {OrderKind::MarketOpen, OrderKind::MarketClose, OrderKind::LimitOpen, OrderKind::StopLoss,
                   OrderKind::TakeProfit}) {
        if (to_string(k) == text) return k;
    }
    return std::nullopt;
}

bool is_open_kind(OrderKind kind) noexcept {
    return kind == OrderKind::MarketOpen || kind == OrderKind::LimitOpen;
}

bool is_trigger_kind(OrderKind kind) noexcept {
    return kind == OrderKind::LimitOpen || kind == OrderKind::StopLoss || kind == OrderKind::TakeProfit;
}

TradeSide trade_side(Direction direction, bool opening) noexcept {
    const bool buys = (direction == Direction::Long) == opening;
    return buys ? TradeSide::Buy : TradeSide::Sell;
}

std::vector<ConfigViolation> validate(const MarketConfig& cfg) {
    std::vector<ConfigViolation> out;
    auto require = [&](bool ok, std::string field, std::string message) {
        if (!ok) out.push_back({std::move(field), std::move(message)});
    };
    auto non_negative = [&](double v, const char* field) {
        require(std::isfinite(v) && v >= 0.0, field, "must be a finite value >= 0");
    };

    require(!cfg.market_id.empty(), "market_id", "must be non-empty");
    non_negative(cfg.deviation.k_delta, "deviation.k_delta");
    non_negative(cfg.deviation.c_d, "deviation.c_d");
    if (std::isfinite(cfg.deviation.k_delta) && std::isfinite(cfg.deviation.c_d)) {
        require(cfg.deviation.k_delta * 1e4 + cfg.deviation.c_d < 100.0, "deviation",
                "deviation at full utilization must stay below 100%");
    }
    non_negative(cfg.base_fee.k_b, "base_fee.k_b");
    non_negative(cfg.base_fee.c_b, "base_fee.c_b");
    non_negative(cfg.dynamic_fee.m_max, "dynamic_fee.m_max");
    require(std::isfinite(cfg.dynamic_fee.steepness) && cfg.dynamic_fee.steepness > 0.0, "dynamic_fee.steepness",
            "must be > 0");
    require(cfg.max_open_interest >= Money{}, "max_open_interest", "must be >= 0");
    require(cfg.max_exposure >= Money{}, "max_exposure", "must be >= 0");
    require(std::isfinite(cfg.max_leverage) && cfg.max_leverage >= 1.0, "max_leverage", "must be >= 1");
    non_negative(cfg.maintenance_margin_rate, "maintenance_margin_rate");
    non_negative(cfg.open_close_fee_rate, "open_close_fee_rate");
    non_negative(cfg.liquidation_fee_rate, "liquidation_fee_rate");
    require(cfg.liquidation_fee_rate <= 100.0, "liquidation_fee_rate", "must be <= 100");
    non_negative(cfg.treasury_share, "treasury_share");
    require(cfg.treasury_share <= 100.0, "treasury_share", "must be <= 100");
    if (std::isfinite(cfg.maintenance_margin_rate) && std::isfinite(cfg.max_leverage)) {
        require(cfg.maintenance_margin_rate * cfg.max_leverage < 100.0, "maintenance_margin_rate",
                "maintenance_margin_rate * max_leverage must be < 100");
    }
    require(cfg.oracle.max_age > 0, "oracle.max_age", "must be > 0");
    non_negative(cfg.oracle.min_acceptable_deviation, "oracle.min_acceptable_deviation");
    require(cfg.oracle.min_acceptable_deviation < cfg.oracle.threshold_deviation, "oracle.threshold_deviation",
            "must exceed min_acceptable_deviation");
    require(!cfg.oracle.primary_feed.empty() && !cfg.oracle.secondary_feed.empty(), "oracle",
            "feed ids must be non-empty");
    require(cfg.oracle.primary_feed != cfg.oracle.secondary_feed, "oracle.secondary_feed",
            "must differ from primary_feed");
    return out;
}

double utilization(const PoolState& pool) {
    if (pool.pool_value <= Money{}) throw Error(ErrorCode::DomainError, "utilization of an empty pool");
    return 100.0 * pool.reserved.to_double() / pool.pool_value.to_double();
}

BorrowRates current_borrow_rates(const PoolState& pool, const MarketConfig& cfg) {
    if (pool.pool_value <= Money{}) return {0.0, 0.0};
    const double u = std::min(utilization(pool), 100.0);
    const BorrowRates rates = total_borrow_rates(u, pool.long_oi.to_double(), pool.short_oi.to_double(),
                                                 pool.pool_value.to_double(), cfg.base_fee, cfg.dynamic_fee);
    return {quantize9(rates.long_rate), quantize9(rates.short_rate)};
}

PoolState accrue_fees(PoolState pool, const MarketConfig& cfg, Seconds now) {
    if (now < pool.last_accrual_time) {
        throw Error(ErrorCode::ClockRegression, "accrual at " + std::to_string(now) + " precedes " +
                                                    std::to_string(pool.last_accrual_time));
    }
    const Seconds dt = now - pool.last_accrual_time;
    if (dt == 0) return pool;
    const BorrowRates rates = current_borrow_rates(pool, cfg);
    const double years = static_cast<double>(dt) / static_cast<double>(kSecondsPerYear);
    pool.cum_fee_index_long += rates.long_rate / 100.0 * years;
    pool.cum_fee_index_short += rates.short_rate / 100.0 * years;
    pool.last_accrual_time = now;
    return pool;
}

MoneyQuote quote_execution_prices(Money oracle_price, double u, const DeviationParams& p) {
    if (oracle_price <= Money{}) throw Error(ErrorCode::DomainError, "oracle price must be positive");
    const double delta = quantize9(eval_deviation(u, p));
    if (delta >= 100.0) throw Error(ErrorCode::QuoteError, "deviation of 100% or more leaves no short quote");
    const Money offset = percent_of(oracle_price, delta, Rounding::HalfEven);
    const MoneyQuote quote{oracle_price + offset, oracle_price - offset};
    if (quote.short_price <= Money{}) throw Error(ErrorCode::QuoteError, "short quote is not positive");
    return quote;
}

Money position_pnl(const Position& pos, Money mark_price) {
    const Wide move = static_cast<Wide>(mark_price.units()) - pos.entry_price.units();
    const Wide signed_move = pos.direction == Direction::Long ? move : -move;
    return Money::from_units(
        divide(static_cast<Wide>(pos.size.units()) * signed_move, pos.entry_price.units(), Rounding::Floor));
}

Money owed_borrow_fees(const Position& pos, const PoolState& pool) {
    const double growth = pool.index(pos.direction) - pos.entry_fee_index;
    if (growth <= 0.0) return Money{};
    return Money::from_double(pos.size.to_double() * growth);
}

Money position_equity(const Position& pos, const PoolState& pool, Money mark_price) {
    return pos.collateral + position_pnl(pos, mark_price) - owed_borrow_fees(pos, pool);
}

bool check_liquidation(const Position& pos, const PoolState& pool, const MarketConfig& cfg, Money mark_price) {
    const Money maintenance = percent_of(pos.size, cfg.maintenance_margin_rate, Rounding::Ceil);
    return position_equity(pos, pool, mark_price) <= maintenance;
}

Engine::Engine(const std::vector<MarketConfig>& markets, Seconds start_time) {
    for (const auto& cfg : markets) add_market(cfg, start_time);
}

void Engine::add_market(const MarketConfig& cfg, Seconds start_time) {
    if (const auto violations = validate(cfg); !violations.empty()) {
        throw Error(ErrorCode::InvalidConfig, violations.front().field + ": " + violations.front().message);
    }
    if (state_.markets.contains(cfg.market_id)) {
        throw Error(ErrorCode::InvalidConfig, "duplicate " + market_ref(cfg.market_id));
    }
    Market m{cfg, PoolState{}};
    m.pool.pool_value = state_.vault.total_assets();
    m.pool.last_accrual_time = start_time;
    state_.markets.emplace(cfg.market_id, std::move(m));
}

void Engine::fund(const std::string& account, Money amount) {
    if (amount <= Money{}) throw Error(ErrorCode::ZeroAmount, "funding must be positive");
    state_.wallets[account] += amount;
}

void Engine::ingest_price(const PricePoint& point) { state_.feeds.ingest(point); }

Shares Engine::deposit(const std::string& account, Money assets) {
    EngineState next = state_;
    Money& wallet = wallet_of(next, account);
    if (wallet < assets) {
        throw Error(ErrorCode::InsufficientFunds, account + " cannot deposit " + assets.to_string());
    }
    wallet -= assets;
    const Shares minted = next.vault.deposit(account, assets);
    sync_pool_value(next);
    state_ = std::move(next);
    return minted;
}

Money Engine::redeem(const std::string& account, Shares shares) {
    EngineState next = state_;
    const Money assets = next.vault.redeem(account, shares);
    if (next.vault.total_assets() < total_reserved(next)) {
        throw Error(ErrorCode::LiquidityReserved, "redeem would release liquidity reserved by open positions");
    }
    wallet_of(next, account) += assets;
    sync_pool_value(next);
    state_ = std::move(next);
    return assets;
}

void Engine::accrue(Seconds now) {
    EngineState next = state_;
    for (auto& [id, m] : next.markets) m.pool = accrue_fees(m.pool, m.config, now);
    state_ = std::move(next);
}

void Engine::accrue(const std::string& market_id, Seconds now) {
    Market& m = find_market(state_, market_id);
    m.pool = accrue_fees(m.pool, m.config, now);
}

OrderId Engine::create_order(Order order, Seconds now) {
    EngineState next = state_;
    const Market& m = find_market(next, order.market_id);
    auto invalid = [](const std::string& why) { return Error(ErrorCode::InvalidOrder, why); };

    if (order.owner.empty()) throw invalid("order needs an owner");
    if (!std::isfinite(order.max_slippage) || order.max_slippage < 0.0) throw invalid("max_slippage must be >= 0");
    if (is_trigger_kind(order.kind) && order.trigger_price <= Money{}) {
        throw invalid(std::string(to_string(order.kind)) + " needs a positive trigger_price");
    }
    if (!is_trigger_kind(order.kind) && order.acceptable_price <= Money{}) {
        throw invalid(std::string(to_string(order.kind)) + " needs a positive acceptable_price");
    }
    if (order.acceptable_price < Money{}) throw invalid("acceptable_price must be >= 0");

    if (is_open_kind(order.kind)) {
        if (order.size <= Money{} || order.collateral <= Money{}) {
            throw invalid("open orders need positive size and collateral");
        }
        const Wide lhs = static_cast<Wide>(order.size.units()) * kNano;
        const Wide rhs = static_cast<Wide>(order.collateral.units()) * percent_to_nano(m.config.max_leverage);
        if (lhs > rhs) {
            throw Error(ErrorCode::LeverageExceeded, "size " + order.size.to_string() + " on collateral " +
                                                         order.collateral.to_string() + " exceeds " +
                                                         std::to_string(m.config.max_leverage) + "x");
        }
        Money& wallet = wallet_of(next, order.owner);
        if (wallet < order.collateral) {
            throw Error(ErrorCode::InsufficientFunds, order.owner + " cannot escrow " + order.collateral.to_string());
        }
        wallet -= order.collateral;
        order.position_id = 0;
    } else {
        if (order.position_id == 0) throw invalid("closing orders must reference a position");
        if (order.collateral != Money{}) throw invalid("closing orders carry no collateral");
    }

    order.order_id = next.next_order_id++;
    order.created_at = now;
    next.orders.emplace(order.order_id, order);
    state_ = std::move(next);
    return order.order_id;
}

void Engine::cancel_order(OrderId id) {
    EngineState next = state_;
    const auto it = next.orders.find(id);
    if (it == next.orders.end()) throw Error(ErrorCode::UnknownOrder, "unknown order " + std::to_string(id));
    if (is_open_kind(it->second.kind)) wallet_of(next, it->second.owner) += it->second.collateral;
    next.orders.erase(it);
    state_ = std::move(next);
}

SettlementReceipt Engine::settle_order(OrderId id, Seconds now) {
    EngineState next = state_;
    const auto it = next.orders.find(id);
    if (it == next.orders.end()) throw Error(ErrorCode::UnknownOrder, "unknown order " + std::to_string(id));
    const Order order = it->second;
    Market& m = find_market(next, order.market_id);
    const MarketConfig& cfg = m.config;
    m.pool = accrue_fees(m.pool, cfg, now);

    const Money acceptable = order.acceptable_price > Money{} ? order.acceptable_price : order.trigger_price;
    SettlementReceipt receipt;
    receipt.order_id = id;

    if (is_open_kind(order.kind)) {
        const TradeSide side = trade_side(order.direction, true);
        const Money exec = execution_price(next, m, side, now);
        check_slippage(exec, acceptable, side, order.max_slippage);

        const Money open_fee = percent_of(order.size, cfg.open_close_fee_rate, Rounding::HalfEven);
        if (open_fee >= order.collateral) {
            throw Error(ErrorCode::InsufficientCollateral, "open fee consumes the whole collateral");
        }

        side_oi(m.pool, order.direction) += order.size;
        m.pool.reserved += order.size;
        if (side_oi(m.pool, order.direction) > cfg.max_open_interest) {
            throw Error(ErrorCode::OpenInterestCapExceeded,
                        std::string(to_string(order.direction)) + " open interest would exceed " +
                            cfg.max_open_interest.to_string());
        }
        const Money exposure = m.pool.long_oi > m.pool.short_oi ? m.pool.long_oi - m.pool.short_oi
                                                                : m.pool.short_oi - m.pool.long_oi;
        if (exposure > cfg.max_exposure) {
            throw Error(ErrorCode::ExposureCapExceeded, "net exposure would exceed " + cfg.max_exposure.to_string());
        }

        route_revenue(next, cfg, open_fee);
        sync_pool_value(next);
        if (total_reserved(next) > next.vault.total_assets()) {
            throw Error(ErrorCode::InsufficientLiquidity, "not enough free liquidity for size " +
                                                              order.size.to_string());
        }

        Position pos;
        pos.position_id = id;
        pos.owner = order.owner;
        pos.market_id = order.market_id;
        pos.direction = order.direction;
        pos.size = order.size;
        pos.collateral = order.collateral - open_fee;
        pos.entry_price = exec;
        pos.entry_fee_index = m.pool.index(order.direction);
        next.positions.emplace(id, pos);

        receipt.position_id = id;
        receipt.executed_price = exec;
        receipt.open_close_fee = open_fee;
        next.orders.erase(id);
        state_ = std::move(next);
        return receipt;
    }

    const auto pit = next.positions.find(order.position_id);
    if (pit == next.positions.end()) {
        throw Error(ErrorCode::PositionNotFound, "position " + std::to_string(order.position_id) + " is not open");
    }
    const Position pos = pit->second;
    if (pos.owner != order.owner || pos.market_id != order.market_id) {
        throw Error(ErrorCode::InvalidOrder, "order does not match position " + std::to_string(pos.position_id));
    }

    const TradeSide side = trade_side(pos.direction, false);
    const Money exec = execution_price(next, m, side, now);
    check_slippage(exec, acceptable, side, order.max_slippage);

    const Money pnl = position_pnl(pos, exec);
    const Money borrow = owed_borrow_fees(pos, m.pool);
    const Money close_fee = percent_of(pos.size, cfg.open_close_fee_rate, Rounding::HalfEven);
    const Money gross = pos.collateral + pnl;
    const Money borrow_paid = clamp_money(gross, Money{}, borrow);
    const Money close_fee_paid = clamp_money(gross - borrow_paid, Money{}, close_fee);
    const Money payout = max(Money{}, gross - borrow - close_fee);

    remove_exposure(m.pool, pos);
    drop_position(next, pos.position_id);
    settle_with_vault(next, pos.collateral - payout - borrow_paid - close_fee_paid);
    route_revenue(next, cfg, borrow_paid + close_fee_paid);
    sync_pool_value(next);
    wallet_of(next, pos.owner) += payout;

    receipt.position_id = pos.position_id;
    receipt.executed_price = exec;
    receipt.open_close_fee = close_fee_paid;
    receipt.borrow_fee_paid = borrow_paid;
    receipt.realized_pnl = pnl;
    receipt.payout = payout;
    next.orders.erase(id);
    state_ = std::move(next);
    return receipt;
}

Money Engine::liquidation_mark(const Position& pos, Seconds now) const {
    const Market& m = market(pos.market_id);
    return aggregate(state_.feeds, trade_side(pos.direction, false), m.config.oracle, now);
}

SettlementReceipt Engine::liquidate(PositionId id, Seconds now) {
    EngineState next = state_;
    const auto pit = next.positions.find(id);
    if (pit == next.positions.end()) {
        throw Error(ErrorCode::PositionNotFound, "position " + std::to_string(id) + " is not open");
    }
    const Position pos = pit->second;
    Market& m = find_market(next, pos.market_id);
    const MarketConfig& cfg = m.config;
    m.pool = accrue_fees(m.pool, cfg, now);

    const Money mark = aggregate(next.feeds, trade_side(pos.direction, false), cfg.oracle, now);
    if (!check_liquidation(pos, m.pool, cfg, mark)) {
        throw Error(ErrorCode::NotLiquidatable, "position " + std::to_string(id) + " is above maintenance margin");
    }

    const Money pnl = position_pnl(pos, mark);
    const Money borrow = owed_borrow_fees(pos, m.pool);
    const Money gross = pos.collateral + pnl;
    const Money borrow_paid = clamp_money(gross, Money{}, borrow);
    const Money remaining = max(Money{}, gross - borrow);
    const Money liquidation_fee = percent_of(remaining, cfg.liquidation_fee_rate, Rounding::HalfEven);
    const Money refund = remaining - liquidation_fee;

    remove_exposure(m.pool, pos);
    drop_position(next, id);
    settle_with_vault(next, pos.collateral - borrow_paid - remaining);
    route_revenue(next, cfg, borrow_paid + liquidation_fee);
    sync_pool_value(next);
    wallet_of(next, pos.owner) += refund;

    SettlementReceipt receipt;
    receipt.position_id = id;
    receipt.executed_price = mark;
    receipt.borrow_fee_paid = borrow_paid;
    receipt.realized_pnl = pnl;
    receipt.liquidation_fee = liquidation_fee;
    receipt.payout = refund;
    state_ = std::move(next);
    return receipt;
}

std::vector<OrderId> Engine::evaluate_triggers(const std::string& market_id, Money mark_price, Seconds now) const {
    std::vector<OrderId> ready;
    for (const auto& [id, order] : state_.orders) {
        if (order.market_id != market_id || !is_trigger_kind(order.kind) || order.created_at > now) continue;
        Direction dir = order.direction;
        if (!is_open_kind(order.kind)) {
            const auto pit = state_.positions.find(order.position_id);
            if (pit == state_.positions.end()) continue;
            dir = pit->second.direction;
        }
        const bool at_or_below = mark_price <= order.trigger_price;
        const bool at_or_above = mark_price >= order.trigger_price;
        const bool is_long = dir == Direction::Long;
        bool fire = false;
        switch (order.kind) {
            case OrderKind::LimitOpen:
            case OrderKind::StopLoss: fire = is_long ? at_or_below : at_or_above; break;
            case OrderKind::TakeProfit: fire = is_long ? at_or_above : at_or_below; break;
            default: break;
        }
        if (fire) ready.push_back(id);
    }
    return ready;
}

const Market& Engine::market(const std::string& market_id) const {
    const auto it = state_.markets.find(market_id);
    if (it == state_.markets.end()) throw Error(ErrorCode::UnknownMarket, "unknown " + market_ref(market_id));
    return it->second;
}

Money Engine::wallet(const std::string& account) const {
    const auto it = state_.wallets.find(account);
    return it == state_.wallets.end() ? Money{} : it->second;
}

Money Engine::total_value() const {
    Money total = state_.vault.total_assets() + state_.treasury;
    for (const auto& [account, balance] : state_.wallets) total += balance;
    for (const auto& [id, order] : state_.orders) {
        if (is_open_kind(order.kind)) total += order.collateral;
    }
    for (const auto& [id, pos] : state_.positions) total += pos.collateral;
    return total;
}

}  // namespace perpamm

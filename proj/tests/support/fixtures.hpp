#pragma once

#include "perpamm/market_engine.hpp"

namespace perpamm::testing {

// A market with every fee, deviation and margin parameter at zero and
// generous caps; tests switch on what they exercise.
inline MarketConfig flat_market(const std::string& id = "ETH-USD") {
    MarketConfig cfg;
    cfg.market_id = id;
    cfg.deviation = {0.0, 0.0};
    cfg.base_fee = {0.0, 0.0};
    cfg.dynamic_fee = {0.0, 1.0};
    cfg.max_open_interest = Money::whole(1'000'000'000);
    cfg.max_exposure = Money::whole(1'000'000'000);
    cfg.max_leverage = 10.0;
    cfg.maintenance_margin_rate = 1.0;
    cfg.oracle.max_age = 3600;
    cfg.oracle.min_acceptable_deviation = 0.1;
    cfg.oracle.threshold_deviation = 1.0;
    return cfg;
}

inline void set_price(Engine& engine, Money price, Seconds t) {
    engine.ingest_price({"primary", price, t});
    engine.ingest_price({"secondary", price, t});
}

inline Order market_open(const std::string& owner, Direction dir, Money size, Money collateral, Money acceptable,
                         double max_slippage = 1.0, const std::string& market = "ETH-USD") {
    Order o;
    o.owner = owner;
    o.market_id = market;
    o.kind = OrderKind::MarketOpen;
    o.direction = dir;
    o.size = size;
    o.collateral = collateral;
    o.acceptable_price = acceptable;
    o.max_slippage = max_slippage;
    return o;
}

inline Order market_close(const std::string& owner, PositionId pos, Money acceptable, double max_slippage = 100.0,
                          const std::string& market = "ETH-USD") {
    Order o;
    o.owner = owner;
    o.market_id = market;
    o.kind = OrderKind::MarketClose;
    o.position_id = pos;
    o.acceptable_price = acceptable;
    o.max_slippage = max_slippage;
    return o;
}

}  // namespace perpamm::testing

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "perpamm/market_engine.hpp"

namespace perpamm {

enum class ActionKind { Deposit, Redeem, CreateOrder, SettleOrder, CancelOrder, LiquidateCheck };

std::string_view to_string(ActionKind kind) noexcept;

struct Action {
    Seconds time = 0;
    std::string actor;
    ActionKind kind = ActionKind::Deposit;
    Money amount;                        // deposit
    Shares shares = 0;                   // redeem
    Order order;                         // create_order
    std::string ref;                     // label for the order created here
    std::optional<OrderId> order_id;     // settle/cancel
    std::string order_ref;               // settle/cancel by label
    std::optional<PositionId> position_id;  // create_order (closes), liquidate_check
    std::string position_ref;            // label of the order that opened the position
};

struct Scenario {
    std::string config;  // optional path hints, relative to the scenario file
    std::string trace;
    Seconds snapshot_interval = 86'400;
    std::map<std::string, Money> accounts;  // initial wallet balances
    std::vector<Action> actions;
};

// Parses and structurally validates a scenario document: closed key sets,
// time-ordered actions, known action kinds.
Scenario parse_scenario(const nlohmann::json& doc);
Scenario load_scenario(const std::filesystem::path& path);

struct Snapshot {
    Seconds time = 0;
    std::string market_id;
    PoolState pool;
    double utilization = 0.0;
    double skew = 0.0;
    double long_rate = 0.0;
    double short_rate = 0.0;
    Money vault_assets;
    double share_price = 1.0;
    Shares total_shares = 0;
    std::size_t open_positions = 0;
    Money treasury;
};

struct RunReceipt {
    Seconds time = 0;
    std::string source;  // "action:<index>" or "trigger"
    std::string actor;
    std::string action;
    std::string status = "ok";  // "ok" or an error code
    std::string detail;
    Money amount;
    SettlementReceipt settlement;
};

struct RunResult {
    std::vector<Snapshot> snapshots;
    std::vector<RunReceipt> receipts;
    EngineState final_state;
    bool halted = false;
    std::string halt_reason;
};

// Deterministic replay. At each timestamp: price rows, fee accrual, trigger
// evaluation (mark = primary feed), then scenario actions in declaration
// order; snapshots are taken after everything at their timestamp.
RunResult run(const std::vector<MarketConfig>& markets, const std::vector<PricePoint>& trace,
              const Scenario& scenario);

std::string snapshots_csv(const std::vector<Snapshot>& snapshots);
std::string receipts_csv(const std::vector<RunReceipt>& receipts);

}  // namespace perpamm

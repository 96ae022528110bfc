#include "perpamm/scenario_sim.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "perpamm/config_io.hpp"
#include "perpamm/error.hpp"

namespace perpamm {

using nlohmann::json;

namespace {

Error scenario_error(const std::string& message) { return Error(ErrorCode::InvalidScenario, message); }

void require_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!obj.is_object()) throw scenario_error(where + " must be an object");
    for (const auto& [key, value] : obj.items()) {
        if (std::find_if(allowed.begin(), allowed.end(), [&](const char* k) { return key == k; }) == allowed.end()) {
            throw scenario_error("unknown key " + where + "." + key);
        }
    }
}

// Monetary fields accept JSON numbers or exact decimal strings.
Money money_field(const json& v, const std::string& where) {
    try {
        if (v.is_string()) return Money::parse(v.get<std::string>());
        if (v.is_number()) return Money::from_double(v.get<double>());
    } catch (const Error& e) {
        throw scenario_error(where + ": " + e.what());
    }
    throw scenario_error(where + " must be a number or decimal string");
}

std::uint64_t id_field(const json& v, const std::string& where) {
    if (!v.is_number_unsigned() || v.get<std::uint64_t>() == 0) throw scenario_error(where + " must be a positive integer");
    return v.get<std::uint64_t>();
}

std::string string_field(const json& v, const std::string& where) {
    if (!v.is_string()) throw scenario_error(where + " must be a string");
    return v.get<std::string>();
}

void read_order_ref(const json& params, Action& a, const std::string& where) {
    if (params.contains("order_id")) a.order_id = id_field(params["order_id"], where + ".order_id");
    if (params.contains("order_ref")) a.order_ref = string_field(params["order_ref"], where + ".order_ref");
    if (a.order_id.has_value() == !a.order_ref.empty()) {
        throw scenario_error(where + " needs exactly one of order_id, order_ref");
    }
}

void read_position_ref(const json& params, Action& a, const std::string& where) {
    if (params.contains("position_id")) a.position_id = id_field(params["position_id"], where + ".position_id");
    if (params.contains("position_ref")) {
        a.position_ref = string_field(params["position_ref"], where + ".position_ref");
    }
    if (a.position_id && !a.position_ref.empty()) {
        throw scenario_error(where + " takes position_id or position_ref, not both");
    }
}

Action parse_action(const json& doc, std::size_t index) {
    const std::string where = "actions[" + std::to_string(index) + "]";
    require_keys(doc, {"time", "actor", "kind", "params"}, where);
    Action a;
    if (!doc.contains("time") || !doc["time"].is_number_integer()) throw scenario_error(where + ".time must be an integer");
    a.time = doc["time"].get<Seconds>();
    if (!doc.contains("actor")) throw scenario_error(where + ".actor is required");
    a.actor = string_field(doc["actor"], where + ".actor");
    if (!doc.contains("kind")) throw scenario_error(where + ".kind is required");
    const std::string kind = string_field(doc["kind"], where + ".kind");
    const json params = doc.value("params", json::object());
    const std::string pwhere = where + ".params";

    if (kind == "deposit") {
        a.kind = ActionKind::Deposit;
        require_keys(params, {"assets"}, pwhere);
        if (!params.contains("assets")) throw scenario_error(pwhere + ".assets is required");
        a.amount = money_field(params["assets"], pwhere + ".assets");
    } else if (kind == "redeem") {
        a.kind = ActionKind::Redeem;
        require_keys(params, {"shares"}, pwhere);
        if (!params.contains("shares")) throw scenario_error(pwhere + ".shares is required");
        a.shares = money_field(params["shares"], pwhere + ".shares").units();
    } else if (kind == "create_order") {
        a.kind = ActionKind::CreateOrder;
        require_keys(params,
                     {"market", "kind", "direction", "size", "collateral", "acceptable_price", "max_slippage",
                      "trigger_price", "position_id", "position_ref", "ref"},
                     pwhere);
        Order& o = a.order;
        o.owner = a.actor;
        if (params.contains("market")) o.market_id = string_field(params["market"], pwhere + ".market");
        if (!params.contains("kind")) throw scenario_error(pwhere + ".kind is required");
        const auto order_kind = parse_order_kind(string_field(params["kind"], pwhere + ".kind"));
        if (!order_kind) throw scenario_error(pwhere + ".kind is not an order kind");
        o.kind = *order_kind;
        if (params.contains("direction")) {
            const auto dir = parse_direction(string_field(params["direction"], pwhere + ".direction"));
            if (!dir) throw scenario_error(pwhere + ".direction must be long or short");
            o.direction = *dir;
        }
        if (params.contains("size")) o.size = money_field(params["size"], pwhere + ".size");
        if (params.contains("collateral")) o.collateral = money_field(params["collateral"], pwhere + ".collateral");
        if (params.contains("acceptable_price")) {
            o.acceptable_price = money_field(params["acceptable_price"], pwhere + ".acceptable_price");
        }
        if (params.contains("trigger_price")) {
            o.trigger_price = money_field(params["trigger_price"], pwhere + ".trigger_price");
        }
        if (params.contains("max_slippage")) {
            if (!params["max_slippage"].is_number()) throw scenario_error(pwhere + ".max_slippage must be a number");
            o.max_slippage = params["max_slippage"].get<double>();
        }
        if (params.contains("ref")) a.ref = string_field(params["ref"], pwhere + ".ref");
        read_position_ref(params, a, pwhere);
    } else if (kind == "settle_order" || kind == "cancel_order") {
        a.kind = kind == "settle_order" ? ActionKind::SettleOrder : ActionKind::CancelOrder;
        require_keys(params, {"order_id", "order_ref"}, pwhere);
        read_order_ref(params, a, pwhere);
    } else if (kind == "liquidate_check") {
        a.kind = ActionKind::LiquidateCheck;
        require_keys(params, {"position_id", "position_ref"}, pwhere);
        read_position_ref(params, a, pwhere);
    } else {
        throw scenario_error(where + ".kind '" + kind + "' is not an action kind");
    }
    return a;
}

std::string csv_field(const std::string& text) {
    if (text.find_first_of(",\"\n") == std::string::npos) return text;
    std::string out = "\"";
    for (char c : text) {
        if (c == '"') out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + "\"";
}

std::string money9(Money m) { return m.to_string(9); }

class Runner {
public:
    Runner(const std::vector<MarketConfig>& markets, const std::vector<PricePoint>& trace, const Scenario& scenario)
        : trace_(trace), scenario_(scenario) {
        for (const auto& cfg : markets) market_ids_.push_back(cfg.market_id);
        validate_references(markets);

        std::set<Seconds> event_times;
        for (const auto& p : trace) event_times.insert(p.publish_time);
        for (const auto& a : scenario.actions) event_times.insert(a.time);
        start_ = event_times.empty() ? 0 : *event_times.begin();
        engine_ = Engine(markets, start_);
        for (const auto& [account, balance] : scenario.accounts) {
            if (balance > Money{}) engine_.fund(account, balance);
        }
        if (event_times.empty()) return;

        const Seconds end = *event_times.rbegin();
        for (Seconds t = start_; t <= end; t += scenario.snapshot_interval) snapshot_times_.insert(t);
        snapshot_times_.insert(end);
        timeline_ = event_times;
        timeline_.insert(snapshot_times_.begin(), snapshot_times_.end());
    }

    RunResult execute() {
        std::size_t next_price = 0;
        std::size_t next_action = 0;
        for (const Seconds t : timeline_) {
            bool prices_changed = false;
            for (; next_price < trace_.size() && trace_[next_price].publish_time == t; ++next_price) {
                engine_.ingest_price(trace_[next_price]);
                prices_changed = true;
            }
            engine_.accrue(t);
            if (prices_changed) evaluate_triggers(t);
            for (; !result_.halted && next_action < scenario_.actions.size() &&
                   scenario_.actions[next_action].time == t;
                 ++next_action) {
                apply(scenario_.actions[next_action], next_action);
            }
            if (result_.halted || snapshot_times_.contains(t)) take_snapshots(t);
            if (result_.halted) break;
        }
        result_.final_state = engine_.state();
        return std::move(result_);
    }

private:
    void validate_references(const std::vector<MarketConfig>& markets) {
        if (scenario_.snapshot_interval <= 0) throw scenario_error("snapshot_interval must be > 0");
        for (std::size_t i = 0; i < scenario_.actions.size(); ++i) {
            const Action& a = scenario_.actions[i];
            const std::string where = "actions[" + std::to_string(i) + "]";
            if (!scenario_.accounts.contains(a.actor)) throw scenario_error(where + ": undefined account " + a.actor);
            if (a.kind == ActionKind::CreateOrder && !a.order.market_id.empty() &&
                std::find(market_ids_.begin(), market_ids_.end(), a.order.market_id) == market_ids_.end()) {
                throw scenario_error(where + ": undefined market " + a.order.market_id);
            }
            if (a.kind == ActionKind::CreateOrder && a.order.market_id.empty() && markets.size() != 1) {
                throw scenario_error(where + ": market is required when several markets are configured");
            }
        }
    }

    void evaluate_triggers(Seconds t) {
        for (const auto& id : market_ids_) {
            const auto primary = engine_.state().feeds.latest(engine_.market(id).config.oracle.primary_feed);
            if (!primary) continue;
            for (const OrderId order : engine_.evaluate_triggers(id, primary->price, t)) {
                const Order o = engine_.state().orders.at(order);
                RunReceipt r = make_receipt(t, "trigger", o.owner, std::string(to_string(o.kind)));
                guarded(r, [&] { r.settlement = engine_.settle_order(order, t); });
                if (result_.halted) return;
            }
        }
    }

    void apply(const Action& a, std::size_t index) {
        RunReceipt r = make_receipt(a.time, "action:" + std::to_string(index), a.actor, std::string(to_string(a.kind)));
        switch (a.kind) {
            case ActionKind::Deposit:
                guarded(r, [&] {
                    r.amount = Money::from_units(engine_.deposit(a.actor, a.amount));
                    r.detail = "shares minted";
                });
                break;
            case ActionKind::Redeem:
                guarded(r, [&] {
                    r.amount = engine_.redeem(a.actor, a.shares);
                    r.detail = "assets returned";
                });
                break;
            case ActionKind::CreateOrder:
                guarded(r, [&] {
                    Order o = a.order;
                    if (o.market_id.empty()) o.market_id = market_ids_.front();
                    if (!a.position_ref.empty()) o.position_id = resolve(a.position_ref);
                    if (a.position_id) o.position_id = *a.position_id;
                    r.action = "create_order:" + std::string(to_string(o.kind));
                    r.settlement.order_id = engine_.create_order(o, a.time);
                    r.settlement.position_id = o.position_id;
                    if (!a.ref.empty()) refs_[a.ref] = r.settlement.order_id;
                });
                break;
            case ActionKind::SettleOrder:
                guarded(r, [&] {
                    const OrderId id = a.order_id ? *a.order_id : resolve(a.order_ref);
                    r.settlement.order_id = id;
                    r.settlement = engine_.settle_order(id, a.time);
                });
                break;
            case ActionKind::CancelOrder:
                guarded(r, [&] {
                    const OrderId id = a.order_id ? *a.order_id : resolve(a.order_ref);
                    r.settlement.order_id = id;
                    engine_.cancel_order(id);
                });
                break;
            case ActionKind::LiquidateCheck:
                liquidate_check(a, r);
                return;
        }
    }

    void liquidate_check(const Action& a, RunReceipt& base) {
        std::vector<PositionId> targets;
        bool explicit_target = false;
        try {
            if (a.position_id || !a.position_ref.empty()) {
                targets.push_back(a.position_id ? *a.position_id : resolve(a.position_ref));
                explicit_target = true;
            } else {
                for (const auto& [id, pos] : engine_.state().positions) targets.push_back(id);
            }
        } catch (const Error& e) {
            base.status = std::string(to_string(e.code()));
            base.detail = e.what();
            result_.receipts.push_back(base);
            return;
        }
        bool acted = false;
        for (const PositionId id : targets) {
            RunReceipt r = base;
            r.settlement.position_id = id;
            const auto pit = engine_.state().positions.find(id);
            if (pit != engine_.state().positions.end() && !explicit_target) {
                try {
                    const Position& pos = pit->second;
                    const Market& m = engine_.market(pos.market_id);
                    if (!check_liquidation(pos, m.pool, m.config, engine_.liquidation_mark(pos, a.time))) continue;
                } catch (const Error&) {
                    // fall through: liquidate() reports the failure
                }
            }
            acted = true;
            guarded(r, [&] { r.settlement = engine_.liquidate(id, a.time); });
            if (result_.halted) return;
        }
        if (!acted) {
            base.detail = "no liquidatable positions";
            result_.receipts.push_back(base);
        }
    }

    OrderId resolve(const std::string& ref) const {
        const auto it = refs_.find(ref);
        if (it == refs_.end()) throw Error(ErrorCode::UnknownOrder, "no order labelled '" + ref + "'");
        return it->second;
    }

    RunReceipt make_receipt(Seconds t, std::string source, std::string actor, std::string action) const {
        RunReceipt r;
        r.time = t;
        r.source = std::move(source);
        r.actor = std::move(actor);
        r.action = std::move(action);
        return r;
    }

    template <typename Fn>
    void guarded(RunReceipt& r, Fn&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            r.status = std::string(to_string(e.code()));
            r.detail = e.what();
            if (e.code() == ErrorCode::InsolventVault) {
                result_.halted = true;
                result_.halt_reason = e.what();
            }
        }
        result_.receipts.push_back(r);
    }

    void take_snapshots(Seconds t) {
        const EngineState& s = engine_.state();
        for (const auto& id : market_ids_) {
            const Market& m = s.markets.at(id);
            Snapshot snap;
            snap.time = t;
            snap.market_id = id;
            snap.pool = m.pool;
            if (m.pool.pool_value > Money{}) {
                snap.utilization = quantize9(utilization(m.pool));
                snap.skew = quantize9(compute_skew(m.pool.long_oi.to_double(), m.pool.short_oi.to_double(),
                                                   m.pool.pool_value.to_double()));
            }
            const BorrowRates rates = current_borrow_rates(m.pool, m.config);
            snap.long_rate = rates.long_rate;
            snap.short_rate = rates.short_rate;
            snap.vault_assets = s.vault.total_assets();
            snap.share_price = quantize9(s.vault.share_price());
            snap.total_shares = s.vault.total_shares();
            snap.open_positions = static_cast<std::size_t>(std::count_if(
                s.positions.begin(), s.positions.end(), [&](const auto& e) { return e.second.market_id == id; }));
            snap.treasury = s.treasury;
            result_.snapshots.push_back(std::move(snap));
        }
    }

    const std::vector<PricePoint>& trace_;
    const Scenario& scenario_;
    std::vector<std::string> market_ids_;
    Engine engine_;
    Seconds start_ = 0;
    std::set<Seconds> timeline_;
    std::set<Seconds> snapshot_times_;
    std::map<std::string, OrderId> refs_;
    RunResult result_;
};

}  // namespace

std::string_view to_string(ActionKind kind) noexcept {
    switch (kind) {
        case ActionKind::Deposit: return "deposit";
        case ActionKind::Redeem: return "redeem";
        case ActionKind::CreateOrder: return "create_order";
        case ActionKind::SettleOrder: return "settle_order";
        case ActionKind::CancelOrder: return "cancel_order";
        case ActionKind::LiquidateCheck: return "liquidate_check";
    }
    return "unknown";
}

Scenario parse_scenario(const json& doc) {
    require_keys(doc, {"config", "trace", "snapshot_interval", "accounts", "actions"}, "scenario");
    Scenario s;
    if (doc.contains("config")) s.config = string_field(doc["config"], "scenario.config");
    if (doc.contains("trace")) s.trace = string_field(doc["trace"], "scenario.trace");
    if (doc.contains("snapshot_interval")) {
        if (!doc["snapshot_interval"].is_number_integer() || doc["snapshot_interval"].get<Seconds>() <= 0) {
            throw scenario_error("scenario.snapshot_interval must be a positive integer");
        }
        s.snapshot_interval = doc["snapshot_interval"].get<Seconds>();
    }
    if (doc.contains("accounts")) {
        if (!doc["accounts"].is_object()) throw scenario_error("scenario.accounts must be an object");
        for (const auto& [name, balance] : doc["accounts"].items()) {
            const Money m = money_field(balance, "scenario.accounts." + name);
            if (m < Money{}) throw scenario_error("scenario.accounts." + name + " must be >= 0");
            s.accounts[name] = m;
        }
    }
    if (doc.contains("actions")) {
        if (!doc["actions"].is_array()) throw scenario_error("scenario.actions must be an array");
        for (std::size_t i = 0; i < doc["actions"].size(); ++i) {
            s.actions.push_back(parse_action(doc["actions"][i], i));
            if (i > 0 && s.actions[i].time < s.actions[i - 1].time) {
                throw scenario_error("actions must be sorted by time (actions[" + std::to_string(i) + "])");
            }
        }
    }
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    try {
        return parse_scenario(json::parse(read_file(path)));
    } catch (const json::parse_error& e) {
        throw scenario_error(path.string() + ": " + e.what());
    }
}

RunResult run(const std::vector<MarketConfig>& markets, const std::vector<PricePoint>& trace,
              const Scenario& scenario) {
    for (std::size_t i = 1; i < trace.size(); ++i) {
        if (trace[i].publish_time < trace[i - 1].publish_time) {
            throw Error(ErrorCode::InvalidTrace, "trace timestamps must be nondecreasing");
        }
    }
    return Runner(markets, trace, scenario).execute();
}

std::string snapshots_csv(const std::vector<Snapshot>& snapshots) {
    std::ostringstream out;
    out << "time,market_id,pool_value,reserved,long_oi,short_oi,utilization,skew,long_rate,short_rate,"
           "cum_fee_index_long,cum_fee_index_short,vault_assets,share_price,total_shares,open_positions,treasury\n";
    for (const auto& s : snapshots) {
        out << s.time << ',' << csv_field(s.market_id) << ',' << money9(s.pool.pool_value) << ','
            << money9(s.pool.reserved) << ',' << money9(s.pool.long_oi) << ',' << money9(s.pool.short_oi) << ','
            << format9(s.utilization) << ',' << format9(s.skew) << ',' << format9(s.long_rate) << ','
            << format9(s.short_rate) << ',' << format9(s.pool.cum_fee_index_long) << ','
            << format9(s.pool.cum_fee_index_short) << ',' << money9(s.vault_assets) << ','
            << format9(s.share_price) << ','
            << money9(Money::from_units(s.total_shares)) << ',' << s.open_positions << ',' << money9(s.treasury)
            << '\n';
    }
    return out.str();
}

std::string receipts_csv(const std::vector<RunReceipt>& receipts) {
    std::ostringstream out;
    out << "time,source,actor,action,status,order_id,position_id,amount,executed_price,open_close_fee,"
           "borrow_fee_paid,realized_pnl,liquidation_fee,payout,detail\n";
    for (const auto& r : receipts) {
        const SettlementReceipt& s = r.settlement;
        out << r.time << ',' << r.source << ',' << csv_field(r.actor) << ',' << r.action << ',' << r.status << ','
            << s.order_id << ',' << s.position_id << ',' << money9(r.amount) << ',' << money9(s.executed_price)
            << ',' << money9(s.open_close_fee) << ',' << money9(s.borrow_fee_paid) << ','
            << money9(s.realized_pnl) << ',' << money9(s.liquidation_fee) << ',' << money9(s.payout) << ','
            << csv_field(r.detail) << '\n';
    }
    return out.str();
}

}  // namespace perpamm

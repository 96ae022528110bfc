// One PASS/FAIL line per acceptance criterion; exit status is the number of failures.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "perpamm/config_io.hpp"
#include "perpamm/curve_math.hpp"
#include "perpamm/error.hpp"
#include "perpamm/figures.hpp"
#include "perpamm/market_engine.hpp"
#include "perpamm/oracle.hpp"
#include "perpamm/vault.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace perpamm;
using namespace perpamm::testing;
namespace fs = std::filesystem;

namespace {

struct Failure {
    std::string what;
};

void expect(bool ok, const std::string& what) {
    if (!ok) throw Failure{what};
}

bool close_rel(double a, double b, double rel) {
    return std::fabs(a - b) <= rel * std::max({std::fabs(a), std::fabs(b), 1e-300}) || a == b;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Money m(const char* text) { return Money::parse(text); }

std::vector<std::string> csv_lines(const std::string& csv) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos < csv.size()) {
        const auto nl = csv.find('\n', pos);
        out.push_back(csv.substr(pos, nl - pos));
        if (nl == std::string::npos) break;
        pos = nl + 1;
    }
    return out;
}

// --- 1 ---
void quote_table() {
    const auto t0 = std::chrono::steady_clock::now();
    FigureParams p;
    p.k_delta = {0.0004};
    const Table t = emit_figure_data(FigureKind::DeviationPrice, p, Grid::parse("0:100:25"));
    const auto lines = csv_lines(t.to_csv());
    const std::vector<std::string> want = {
        "0.000000000,2000.000000000,2000.000000000,2000.000000000",
        "25.000000000,2000.000000000,2005.000000000,1995.000000000",
        "50.000000000,2000.000000000,2020.000000000,1980.000000000",
        "75.000000000,2000.000000000,2045.000000000,1955.000000000",
        "100.000000000,2000.000000000,2080.000000000,1920.000000000",
    };
    expect(lines.size() == want.size() + 1, "row count");
    for (std::size_t i = 0; i < want.size(); ++i) expect(lines[i + 1] == want[i], "row " + lines[i + 1]);
    expect(seconds_since(t0) < 1.0, "runtime");
}

// --- 2 ---
void deviation_endpoints() {
    const double ks[] = {0.000125, 0.00025, 0.0005};
    const double want[] = {1.25, 2.5, 5.0};
    for (int i = 0; i < 3; ++i)
        expect(std::fabs(eval_deviation(100.0, DeviationParams{ks[i], 0.0}) - want[i]) <= 1e-9, "k_delta");
    FigureParams p;
    const Table t = emit_figure_data(FigureKind::DeviationPct, p, Grid::parse("0:100:1"));
    for (int i = 0; i < 3; ++i) expect(std::fabs(t.rows.back()[1 + i] - want[i]) <= 1e-9, "table column");
}

// --- 3 ---
void base_fee_endpoints() {
    const double ks[] = {0.0325, 0.01, 0.005};
    const double want[] = {325.0, 100.0, 50.0};
    for (int i = 0; i < 3; ++i)
        expect(std::fabs(eval_base_fee(100.0, BaseFeeParams{ks[i], 0.0}) - want[i]) <= 1e-9, "k_b");
    FigureParams p;
    const Table t = emit_figure_data(FigureKind::BaseFee, p, Grid::parse("0:100:1"));
    for (int i = 0; i < 3; ++i) expect(std::fabs(t.rows.back()[1 + i] - want[i]) <= 1e-9, "table column");
}

// --- 4 ---
void dynamic_fee_shape() {
    const double m_max = 500.0;
    for (double k : {0.0125, 0.0225, 0.0325}) {
        const DynamicFeeParams p{m_max, k};
        expect(eval_dynamic_fee(0.0, p) == 0.0, "F_d(0)");
        double prev = 0.0;
        for (int i = 1; i <= 1000; ++i) {
            const double s = i / 10.0;
            const double f = eval_dynamic_fee(s, p);
            expect(f > prev, "strictly increasing");
            expect(f < m_max, "below M");
            const auto recip = static_cast<double>(dynamic_fee_reciprocal(s, k, m_max));
            const auto negexp = static_cast<double>(dynamic_fee_negative_exp(s, k, m_max));
            expect(close_rel(recip, negexp, 1e-9), "closed forms agree");
            expect(close_rel(f, negexp, 1e-9), "engine matches closed form");
            prev = f;
        }
    }
}

// --- 5 ---
void oracle_table() {
    OracleConfig cfg;
    cfg.max_age = 60;
    cfg.min_acceptable_deviation = 0.1;
    cfg.threshold_deviation = 1.0;
    const Seconds now = 1000;
    struct Band {
        const char* secondary;
        int band;  // 0 primary only, 1 pick by side, 2 reject
    };
    // 0.05%, 0.5%, 1.5%, then the two closed boundaries 0.1% and 1.0%.
    const Band bands[] = {{"2001", 0}, {"2010", 1}, {"2030", 2}, {"2002", 0}, {"2020", 1}};
    int cases = 0;
    for (const Band& b : bands) {
        for (TradeSide side : {TradeSide::Buy, TradeSide::Sell}) {
            for (bool stale : {false, true}) {
                const PricePoint primary{"primary", m("2000"), stale ? now - 61 : now - 60};
                const PricePoint secondary{"secondary", m(b.secondary), now};
                std::string outcome;
                Money price;
                try {
                    price = aggregate(primary, secondary, side, cfg, now);
                    outcome = "ok";
                } catch (const Error& e) {
                    outcome = std::string(to_string(e.code()));
                }
                if (stale) {
                    expect(outcome == "StaleFeed", "staleness first");
                } else if (b.band == 2) {
                    expect(outcome == "DeviationTooHigh", "high band rejects");
                } else if (b.band == 0) {
                    expect(outcome == "ok" && price == m("2000"), "low band uses primary");
                } else {
                    const Money want = side == TradeSide::Buy ? m(b.secondary) : m("2000");
                    expect(outcome == "ok" && price == want, "middle band picks by side");
                }
                ++cases;
            }
        }
    }
    expect(cases == 20, "case count");
    // A stale secondary is rejected just the same.
    bool threw = false;
    try {
        aggregate({"primary", m("2000"), now}, {"secondary", m("2000"), now - 61}, TradeSide::Buy, cfg, now);
    } catch (const Error& e) {
        threw = e.code() == ErrorCode::StaleFeed;
    }
    expect(threw, "stale secondary");
}

// --- 6 ---
void conservation() {
    const auto t0 = std::chrono::steady_clock::now();
    MarketConfig cfg = flat_market();
    cfg.maintenance_margin_rate = 5.0;
    Engine e({cfg});
    std::mt19937_64 rng(2024);
    const char* traders[] = {"t1", "t2", "t3", "t4"};
    const char* lps[] = {"lp1", "lp2"};
    for (auto* who : traders) e.fund(who, Money::whole(50'000));
    for (auto* who : lps) e.fund(who, Money::whole(200'000));
    e.deposit("lp1", Money::whole(100'000));

    std::int64_t price_units = Money::whole(2000).units();
    Seconds now = 0;
    set_price(e, Money::from_units(price_units), now);
    const Money initial = e.total_value();
    int settlements = 0;
    int applied = 0;

    std::uniform_int_distribution<int> pick(0, 99);
    for (int i = 0; i < 1000; ++i) {
        now += 60;
        price_units = std::max<std::int64_t>(price_units + static_cast<std::int64_t>(rng() % 40'000'001) - 20'000'000,
                                             Money::whole(500).units());
        set_price(e, Money::from_units(price_units), now);
        const Money px = Money::from_units(price_units);
        const int roll = pick(rng);
        try {
            if (roll < 10) {
                e.deposit(lps[rng() % 2], Money::from_units(1 + static_cast<std::int64_t>(rng() % 5'000'000'000)));
            } else if (roll < 15) {
                const char* who = lps[rng() % 2];
                const Shares bal = e.state().vault.balance(who);
                if (bal > 0) e.redeem(who, 1 + static_cast<Shares>(rng() % static_cast<std::uint64_t>(bal)));
            } else if (roll < 55) {
                const Money collateral = Money::from_units(1'000'000 + static_cast<std::int64_t>(rng() % 999'000'000));
                const Money size = Money::from_units(collateral.units() * (1 + static_cast<std::int64_t>(rng() % 10)));
                const Direction dir = rng() % 2 ? Direction::Long : Direction::Short;
                const OrderId id = e.create_order(market_open(traders[rng() % 4], dir, size, collateral, px), now);
                e.settle_order(id, now);
                ++settlements;
            } else if (roll < 85) {
                const auto& positions = e.state().positions;
                if (!positions.empty()) {
                    auto it = positions.begin();
                    std::advance(it, static_cast<long>(rng() % positions.size()));
                    const Position pos = it->second;
                    const OrderId id = e.create_order(market_close(pos.owner, pos.position_id, px), now);
                    e.settle_order(id, now);
                    ++settlements;
                }
            } else {
                std::vector<PositionId> unhealthy;
                for (const auto& [id, pos] : e.state().positions) {
                    if (check_liquidation(pos, e.market(pos.market_id).pool, cfg, e.liquidation_mark(pos, now)))
                        unhealthy.push_back(id);
                }
                for (PositionId id : unhealthy) {
                    e.liquidate(id, now);
                    ++settlements;
                }
            }
            ++applied;
        } catch (const Error&) {
            // rejected actions leave state untouched; conservation is still checked
        }
        const PoolState& pool = e.market(cfg.market_id).pool;
        expect(pool.reserved == pool.long_oi + pool.short_oi, "reserved equals L+S");
        const std::int64_t drift = std::abs((e.total_value() - initial).units());
        expect(drift <= settlements, "value drift " + std::to_string(drift));
    }
    expect(applied > 500, "too few actions applied");
    expect(settlements > 200, "too few settlements");
    expect(seconds_since(t0) < 10.0, "runtime");
}

// --- 7 ---
void accrual_equivalence() {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> kb(0.0, 0.03), cb(0.0, 50.0), mmax(0.0, 500.0), steep(0.001, 0.05);
    std::uniform_int_distribution<std::int64_t> oi(0, 5'000'000'000);
    std::uniform_int_distribution<Seconds> dt(1, 365 * 86'400);
    for (int i = 0; i < 100; ++i) {
        MarketConfig cfg = flat_market();
        cfg.base_fee = {kb(rng), cb(rng)};
        cfg.dynamic_fee = {mmax(rng), steep(rng)};
        PoolState pool;
        pool.long_oi = Money::from_units(oi(rng));
        pool.short_oi = Money::from_units(oi(rng));
        pool.reserved = pool.long_oi + pool.short_oi;
        pool.pool_value = pool.reserved + Money::from_units(oi(rng) + 1);
        const Seconds t2 = dt(rng);
        const Seconds t1 = std::uniform_int_distribution<Seconds>(0, t2)(rng);
        const PoolState one = accrue_fees(pool, cfg, t2);
        const PoolState two = accrue_fees(accrue_fees(pool, cfg, t1), cfg, t2);
        expect(close_rel(one.cum_fee_index_long, two.cum_fee_index_long, 1e-9), "long index split");
        expect(close_rel(one.cum_fee_index_short, two.cum_fee_index_short, 1e-9), "short index split");
    }

    MarketConfig cfg = flat_market();
    cfg.base_fee = {0.0, 36.5};
    Engine e({cfg});
    e.fund("lp", Money::whole(10'000));
    e.fund("alice", Money::whole(1'000));
    e.deposit("lp", Money::whole(10'000));
    set_price(e, m("2000"), 0);
    const OrderId id = e.create_order(market_open("alice", Direction::Long, m("1000"), m("100"), m("2000")), 0);
    e.settle_order(id, 0);
    const Seconds ten_days = 10 * 86'400;
    set_price(e, m("2000"), ten_days);
    const auto r = e.settle_order(e.create_order(market_close("alice", id, m("2000")), ten_days), ten_days);
    expect(std::abs((r.borrow_fee_paid - m("10")).units()) <= 1, "ten-day charge " + r.borrow_fee_paid.to_string());
}

// --- 8 ---
void liquidation_boundary() {
    const MarketConfig cfg = flat_market();  // maintenance margin 1%
    Position pos;
    pos.position_id = 1;
    pos.owner = "alice";
    pos.market_id = cfg.market_id;
    pos.direction = Direction::Long;
    pos.size = m("1000");
    pos.collateral = m("100");
    pos.entry_price = m("2000");
    const PoolState pool;
    const Money maintenance = m("10");

    expect(!check_liquidation(pos, pool, cfg, m("1822")), "healthy at 1822");
    expect(check_liquidation(pos, pool, cfg, m("1820")), "liquidatable at 1820");

    // Invariant: lo liquidatable, hi healthy.
    std::int64_t lo = m("1820").units(), hi = m("1822").units();
    while (hi - lo > 1) {
        const std::int64_t mid = lo + (hi - lo) / 2;
        if (check_liquidation(pos, pool, cfg, Money::from_units(mid)))
            lo = mid;
        else
            hi = mid;
    }
    const Money eq_lo = position_equity(pos, pool, Money::from_units(lo));
    const Money eq_hi = position_equity(pos, pool, Money::from_units(hi));
    expect(eq_lo <= maintenance, "equity at the flip is at or below maintenance");
    expect(eq_hi > maintenance, "equity above the flip exceeds maintenance");
    for (std::int64_t p = m("1820").units(); p <= m("1822").units(); p += 1000) {
        const Money mark = Money::from_units(p);
        expect(check_liquidation(pos, pool, cfg, mark) == (position_equity(pos, pool, mark) <= maintenance),
               "agreement with position_equity");
    }
}

// --- 9 ---
void vault_equivalence() {
    std::mt19937_64 rng(99);
    Vault v;
    RationalVault ref;
    const char* accounts[] = {"a", "b", "c"};
    std::int64_t asset_drift = 0;
    for (int i = 0; i < 100'000; ++i) {
        const char* who = accounts[rng() % 3];
        const int op = static_cast<int>(rng() % 10);
        if (op < 5) {
            const std::int64_t amount = 1 + static_cast<std::int64_t>(rng() % 10'000'000'000);
            const std::int64_t want = ref.deposit(who, amount);
            Shares got = -1;
            try {
                got = v.deposit(who, Money::from_units(amount));
            } catch (const Error& e) {
                expect(e.code() == ErrorCode::ZeroShareMint, "unexpected deposit error");
            }
            expect(got == want, "minted shares");
        } else if (op < 8) {
            const Shares bal = v.balance(who);
            if (bal == 0) continue;
            const Shares burn = 1 + static_cast<Shares>(rng() % static_cast<std::uint64_t>(bal));
            const std::int64_t want = ref.redeem(who, burn);
            const Money got = v.redeem(who, burn);
            asset_drift = std::max(asset_drift, std::abs(got.units() - want));
        } else {
            if (v.total_shares() == 0) continue;
            const std::int64_t amount = static_cast<std::int64_t>(rng() % 1'000'000'000);
            v.credit(Money::from_units(amount));
            ref.credit(amount);
        }
        for (const char* a : accounts) expect(v.balance(a) == ref.balance(a), "share balances");
        expect(v.total_shares() == ref.shares(), "total shares");
        const auto gap = RationalVault::Rational(v.total_assets().units()) - ref.assets();
        expect(gap <= 1 && gap >= -1, "total assets");
    }
    expect(asset_drift <= 1, "redeem payout delta");
}

// --- 10 ---
std::string shell_quote(const std::string& s) { return "'" + s + "'"; }

void determinism() {
    const fs::path data = PERPAMM_TEST_DATA_DIR;
    const fs::path root = fs::temp_directory_path() / "perpamm_acceptance_determinism";
    fs::remove_all(root);
    const std::string cli = PERPAMM_CLI_PATH;

    auto run_twice = [&](const std::string& name, const std::function<std::string(const fs::path&)>& command,
                         const std::vector<std::string>& files) {
        std::string first[8];
        for (int pass = 0; pass < 2; ++pass) {
            const fs::path dir = root / name / std::to_string(pass);
            fs::create_directories(dir);
            const int rc = std::system((command(dir) + " >/dev/null 2>&1").c_str());
            expect(rc == 0, name + " exited nonzero");
            for (std::size_t f = 0; f < files.size(); ++f) {
                const std::string body = read_file(dir / files[f]);
                if (pass == 0)
                    first[f] = body;
                else
                    expect(body == first[f], name + ": " + files[f] + " differs");
            }
        }
    };

    run_twice(
        "run",
        [&](const fs::path& dir) {
            return shell_quote(cli) + " run --scenario " + shell_quote((data / "demo_scenario.json").string()) +
                   " --out-dir " + shell_quote(dir.string());
        },
        {"snapshots.csv", "receipts.csv", "manifest.json"});
    run_twice(
        "run_fees",
        [&](const fs::path& dir) {
            return shell_quote(cli) + " run --config " + shell_quote((data / "flat_fee_market.json").string()) +
                   " --trace " + shell_quote((data / "flat_trace.csv").string()) + " --scenario " +
                   shell_quote((data / "fee_scenario.json").string()) + " --out-dir " + shell_quote(dir.string());
        },
        {"snapshots.csv", "receipts.csv", "manifest.json"});
    for (const char* kind : {"deviation_price", "deviation_pct", "base_fee", "dynamic_fee"}) {
        run_twice(
            std::string("curves_") + kind,
            [&](const fs::path& dir) {
                return shell_quote(cli) + " curves --kind " + kind + " --M 500 --grid 0:100:0.1 --out " +
                       shell_quote((dir / "out.csv").string());
            },
            {"out.csv"});
    }
    fs::remove_all(root);
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        void (*fn)();
    };
    const Criterion criteria[] = {
        {"deviation_quote_table", quote_table},
        {"deviation_at_full_utilization", deviation_endpoints},
        {"base_fee_at_full_utilization", base_fee_endpoints},
        {"dynamic_fee_shape", dynamic_fee_shape},
        {"oracle_decision_table", oracle_table},
        {"conservation_randomized_1000_actions", conservation},
        {"accrual_split_equivalence", accrual_equivalence},
        {"liquidation_boundary_bisection", liquidation_boundary},
        {"vault_rational_reference", vault_equivalence},
        {"cli_determinism", determinism},
    };
    int failures = 0;
    int n = 0;
    for (const Criterion& c : criteria) {
        ++n;
        std::string detail;
        bool ok = false;
        try {
            c.fn();
            ok = true;
        } catch (const Failure& f) {
            detail = f.what;
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        if (ok)
            std::printf("PASS %2d %s\n", n, c.name);
        else
            std::printf("FAIL %2d %s: %s\n", n, c.name, detail.c_str());
        failures += ok ? 0 : 1;
    }
    std::fflush(stdout);
    return failures;
}

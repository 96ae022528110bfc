#pragma once

#include <map>
#include <optional>
#include <string>

#include "perpamm/money.hpp"

namespace perpamm {

struct PricePoint {
    std::string feed_id;
    Money price;
    Seconds publish_time = 0;

    friend bool operator==(const PricePoint&, const PricePoint&) = default;
};

struct OracleConfig {
    Seconds max_age = 60;
    double min_acceptable_deviation = 0.0;  // percent
    double threshold_deviation = 1.0;       // percent
    std::string primary_feed = "primary";
    std::string secondary_feed = "secondary";

    friend bool operator==(const OracleConfig&, const OracleConfig&) = default;
};

// Direction in which the trader consumes a quote. Opening long and closing
// short buy; opening short and closing long sell.
enum class TradeSide { Buy, Sell };

// Latest price per feed.
class FeedStore {
public:
    // Newer points replace older ones; a point older than the stored one is
    // ignored. Non-positive prices are rejected with InvalidPrice.
    void ingest(const PricePoint& point);

    std::optional<PricePoint> latest(const std::string& feed_id) const;
    const std::map<std::string, PricePoint>& points() const { return latest_; }

    friend bool operator==(const FeedStore&, const FeedStore&) = default;

private:
    std::map<std::string, PricePoint> latest_;
};

// 100 * |p1 - p2| / min(p1, p2), in percent.
double feed_deviation(Money first, Money second);

// Dual-feed aggregation. Staleness of either feed fails first (StaleFeed);
// deviations above the threshold fail with DeviationTooHigh; deviations up to
// the minimum acceptable band use the primary price; anything in between
// returns the price least favorable to the trader for `side`.
Money aggregate(const PricePoint& primary, const PricePoint& secondary, TradeSide side,
                const OracleConfig& cfg, Seconds now);

// Looks up both configured feeds in `store` and aggregates them.
Money aggregate(const FeedStore& store, TradeSide side, const OracleConfig& cfg, Seconds now);

}  // namespace perpamm

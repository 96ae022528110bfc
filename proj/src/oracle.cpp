#include "perpamm/oracle.hpp"

#include "perpamm/error.hpp"

namespace perpamm {

void FeedStore::ingest(const PricePoint& point) {
    if (point.price <= Money{}) {
        throw Error(ErrorCode::InvalidPrice,
                    "feed " + point.feed_id + " published non-positive price " + point.price.to_string());
    }
    if (point.publish_time < 0) {
        throw Error(ErrorCode::InvalidPrice, "feed " + point.feed_id + " published before the epoch");
    }
    auto [it, inserted] = latest_.try_emplace(point.feed_id, point);
    if (!inserted && point.publish_time >= it->second.publish_time) {
        it->second = point;
    }
}

std::optional<PricePoint> FeedStore::latest(const std::string& feed_id) const {
    if (auto it = latest_.find(feed_id); it != latest_.end()) return it->second;
    return std::nullopt;
}

double feed_deviation(Money first, Money second) {
    const Money diff = first > second ? first - second : second - first;
    return 100.0 * diff.to_double() / min(first, second).to_double();
}

Money aggregate(const PricePoint& primary, const PricePoint& secondary, TradeSide side,
                const OracleConfig& cfg, Seconds now) {
    for (const PricePoint* point : {&primary, &secondary}) {
        if (point->price <= Money{}) {
            throw Error(ErrorCode::InvalidPrice, "feed " + point->feed_id + " has non-positive price");
        }
        if (now - point->publish_time > cfg.max_age) {
            throw Error(ErrorCode::StaleFeed, "feed " + point->feed_id + " is " +
                                                  std::to_string(now - point->publish_time) +
                                                  "s old (max " + std::to_string(cfg.max_age) + "s)");
        }
    }

    const Money p1 = primary.price;
    const Money p2 = secondary.price;
    const Money diff = p1 > p2 ? p1 - p2 : p2 - p1;
    const Money base = min(p1, p2);

    if (!ratio_within_percent(diff, base, cfg.threshold_deviation)) {
        throw Error(ErrorCode::DeviationTooHigh,
                    "feeds " + primary.feed_id + " and " + secondary.feed_id + " deviate by " +
                        std::to_string(feed_deviation(p1, p2)) + "%");
    }
    if (ratio_within_percent(diff, base, cfg.min_acceptable_deviation)) {
        return p1;
    }
    return side == TradeSide::Buy ? max(p1, p2) : min(p1, p2);
}

Money aggregate(const FeedStore& store, TradeSide side, const OracleConfig& cfg, Seconds now) {
    const auto primary = store.latest(cfg.primary_feed);
    const auto secondary = store.latest(cfg.secondary_feed);
    if (!primary) throw Error(ErrorCode::MissingFeed, "no price for feed " + cfg.primary_feed);
    if (!secondary) throw Error(ErrorCode::MissingFeed, "no price for feed " + cfg.secondary_feed);
    return aggregate(*primary, *secondary, side, cfg, now);
}

}  // namespace perpamm

#include "perpamm/config_io.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "perpamm/error.hpp"

namespace perpamm {

using nlohmann::json;

namespace {

Error config_error(const std::string& message) { return Error(ErrorCode::InvalidConfig, message); }

// Reads a JSON object with a closed key set.
class ObjectReader {
public:
    ObjectReader(const json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
        if (!doc_.is_object()) throw config_error(where() + " must be an object");
    }

    double number(const std::string& key) {
        const json& v = take(key);
        if (!v.is_number()) throw config_error(where(key) + " must be a number");
        return v.get<double>();
    }

    double number_or(const std::string& key, double fallback) {
        return doc_.contains(key) ? number(key) : fallback;
    }

    Money money(const std::string& key) {
        try {
            return Money::from_double(number(key));
        } catch (const Error& e) {
            throw config_error(where(key) + ": " + e.what());
        }
    }

    Seconds seconds(const std::string& key) {
        const json& v = take(key);
        if (!v.is_number_integer()) throw config_error(where(key) + " must be an integer");
        return v.get<Seconds>();
    }

    std::string string(const std::string& key) {
        const json& v = take(key);
        if (!v.is_string()) throw config_error(where(key) + " must be a string");
        return v.get<std::string>();
    }

    std::string string_or(const std::string& key, std::string fallback) {
        return doc_.contains(key) ? string(key) : std::move(fallback);
    }

    ObjectReader object(const std::string& key) { return ObjectReader(take(key), where(key)); }

    // Rejects anything not consumed.
    void finish() const {
        for (const auto& [key, value] : doc_.items()) {
            if (!seen_.contains(key)) throw config_error("unknown key " + where(key));
        }
    }

private:
    const json& take(const std::string& key) {
        if (!doc_.contains(key)) throw config_error("missing key " + where(key));
        seen_.insert(key);
        return doc_.at(key);
    }

    std::string where(const std::string& key = {}) const {
        if (key.empty()) return path_.empty() ? "document" : path_;
        return path_.empty() ? key : path_ + "." + key;
    }

    const json& doc_;
    std::string path_;
    std::set<std::string> seen_;
};

}  // namespace

MarketConfig market_config_from_json(const json& doc) {
    ObjectReader r(doc, "");
    MarketConfig cfg;
    cfg.market_id = r.string("market_id");
    {
        ObjectReader d = r.object("deviation");
        cfg.deviation.k_delta = d.number("k_delta");
        cfg.deviation.c_d = d.number("c_d");
        d.finish();
    }
    {
        ObjectReader b = r.object("base_fee");
        cfg.base_fee.k_b = b.number("k_b");
        cfg.base_fee.c_b = b.number("c_b");
        b.finish();
    }
    {
        ObjectReader f = r.object("dynamic_fee");
        cfg.dynamic_fee.m_max = f.number("m_max");
        cfg.dynamic_fee.steepness = f.number("steepness");
        f.finish();
    }
    cfg.max_open_interest = r.money("max_open_interest");
    cfg.max_leverage = r.number("max_leverage");
    cfg.max_exposure = r.money("max_exposure");
    cfg.maintenance_margin_rate = r.number("maintenance_margin_rate");
    cfg.open_close_fee_rate = r.number("open_close_fee_rate");
    cfg.liquidation_fee_rate = r.number("liquidation_fee_rate");
    cfg.treasury_share = r.number_or("treasury_share", 0.0);
    {
        ObjectReader o = r.object("oracle");
        cfg.oracle.max_age = o.seconds("max_age");
        cfg.oracle.min_acceptable_deviation = o.number("min_acceptable_deviation");
        cfg.oracle.threshold_deviation = o.number("threshold_deviation");
        cfg.oracle.primary_feed = o.string_or("primary_feed", cfg.oracle.primary_feed);
        cfg.oracle.secondary_feed = o.string_or("secondary_feed", cfg.oracle.secondary_feed);
        o.finish();
    }
    r.finish();
    return cfg;
}

json to_json(const MarketConfig& cfg) {
    return json{
        {"market_id", cfg.market_id},
        {"deviation", {{"k_delta", cfg.deviation.k_delta}, {"c_d", cfg.deviation.c_d}}},
        {"base_fee", {{"k_b", cfg.base_fee.k_b}, {"c_b", cfg.base_fee.c_b}}},
        {"dynamic_fee", {{"m_max", cfg.dynamic_fee.m_max}, {"steepness", cfg.dynamic_fee.steepness}}},
        {"max_open_interest", cfg.max_open_interest.to_double()},
        {"max_leverage", cfg.max_leverage},
        {"max_exposure", cfg.max_exposure.to_double()},
        {"maintenance_margin_rate", cfg.maintenance_margin_rate},
        {"open_close_fee_rate", cfg.open_close_fee_rate},
        {"liquidation_fee_rate", cfg.liquidation_fee_rate},
        {"treasury_share", cfg.treasury_share},
        {"oracle",
         {{"max_age", cfg.oracle.max_age},
          {"min_acceptable_deviation", cfg.oracle.min_acceptable_deviation},
          {"threshold_deviation", cfg.oracle.threshold_deviation},
          {"primary_feed", cfg.oracle.primary_feed},
          {"secondary_feed", cfg.oracle.secondary_feed}}},
    };
}

std::vector<MarketConfig> load_market_configs(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw config_error(path.string() + ": " + e.what());
    }
    std::vector<MarketConfig> out;
    if (doc.is_array()) {
        for (const auto& item : doc) out.push_back(market_config_from_json(item));
    } else {
        out.push_back(market_config_from_json(doc));
    }
    if (out.empty()) throw config_error(path.string() + ": no markets defined");
    return out;
}

std::vector<PricePoint> parse_price_trace(std::string_view csv) {
    std::vector<PricePoint> points;
    std::istringstream in{std::string(csv)};
    std::string line;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& why) {
        return Error(ErrorCode::InvalidTrace, "line " + std::to_string(line_no) + ": " + why);
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1) {
            if (line != "timestamp,feed_id,price") throw fail("expected header 'timestamp,feed_id,price'");
            continue;
        }
        if (line.empty()) continue;

        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
        if (c2 == std::string::npos || line.find(',', c2 + 1) != std::string::npos) {
            throw fail("expected three fields");
        }
        const std::string_view ts(line.data(), c1);
        PricePoint p;
        p.feed_id = line.substr(c1 + 1, c2 - c1 - 1);
        if (p.feed_id.empty()) throw fail("empty feed_id");
        const auto [ptr, ec] = std::from_chars(ts.data(), ts.data() + ts.size(), p.publish_time);
        if (ec != std::errc{} || ptr != ts.data() + ts.size()) throw fail("timestamp is not an integer");
        try {
            p.price = Money::parse(std::string_view(line).substr(c2 + 1));
        } catch (const Error& e) {
            throw fail(e.what());
        }
        if (p.price <= Money{}) throw fail("price must be positive");
        if (!points.empty() && p.publish_time < points.back().publish_time) {
            throw fail("timestamps must be nondecreasing");
        }
        points.push_back(std::move(p));
    }
    if (line_no == 0) throw Error(ErrorCode::InvalidTrace, "empty trace file");
    return points;
}

std::vector<PricePoint> load_price_trace(const std::filesystem::path& path) {
    try {
        return parse_price_trace(read_file(path));
    } catch (const Error& e) {
        if (e.code() != ErrorCode::InvalidTrace) throw;
        throw Error(ErrorCode::InvalidTrace, path.string() + ": " + e.what());
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw Error(ErrorCode::IoError, "write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error(ErrorCode::IoError, "cannot move output into " + path.string());
    }
}

}  // namespace perpamm

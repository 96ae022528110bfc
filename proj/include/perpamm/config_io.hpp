#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "perpamm/market_engine.hpp"
#include "perpamm/oracle.hpp"

namespace perpamm {

// MarketConfig <-> JSON. Keys mirror the struct fields; nested objects for
// `deviation`, `base_fee`, `dynamic_fee` and `oracle`. Unknown or missing
// required keys raise InvalidConfig. Invariants are NOT checked here; see
// validate().
MarketConfig market_config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const MarketConfig& cfg);

// A config file holds one MarketConfig object or an array of them.
std::vector<MarketConfig> load_market_configs(const std::filesystem::path& path);

// CSV with header `timestamp,feed_id,price`; timestamps must be
// nondecreasing.
std::vector<PricePoint> parse_price_trace(std::string_view csv);
std::vector<PricePoint> load_price_trace(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

// Writes via a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace perpamm

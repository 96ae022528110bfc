#include "perpamm/figures.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "perpamm/curve_math.hpp"
#include "perpamm/error.hpp"
#include "perpamm/money.hpp"

namespace perpamm {

namespace {

Error grid_error(const std::string& message) { return Error(ErrorCode::InvalidGrid, message); }

double parse_double(std::string_view text) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
        throw grid_error("'" + std::string(text) + "' is not a number");
    }
    return v;
}

std::string label(const char* name, double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "(%s=%.10g)", name, value);
    return buf;
}

std::vector<double> or_default(const std::vector<double>& given, std::vector<double> fallback) {
    return given.empty() ? fallback : given;
}

}  // namespace

std::optional<FigureKind> parse_figure_kind(std::string_view text) noexcept {
    if (text == "deviation_price") return FigureKind::DeviationPrice;
    if (text == "deviation_pct") return FigureKind::DeviationPct;
    if (text == "base_fee") return FigureKind::BaseFee;
    if (text == "dynamic_fee") return FigureKind::DynamicFee;
    return std::nullopt;
}

Grid Grid::parse(std::string_view text) {
    const auto c1 = text.find(':');
    const auto c2 = c1 == std::string_view::npos ? c1 : text.find(':', c1 + 1);
    if (c2 == std::string_view::npos) throw grid_error("grid must look like lo:hi:step");
    Grid g{parse_double(text.substr(0, c1)), parse_double(text.substr(c1 + 1, c2 - c1 - 1)),
           parse_double(text.substr(c2 + 1))};
    g.points();
    return g;
}

std::vector<double> Grid::points() const {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !std::isfinite(step)) throw grid_error("grid must be finite");
    if (step <= 0.0) throw grid_error("grid step must be positive");
    if (hi < lo) throw grid_error("grid upper bound is below the lower bound");
    const double span = (hi - lo) / step;
    if (span > 1e7) throw grid_error("grid has too many points");
    const auto count = static_cast<std::size_t>(std::floor(span + 1e-9)) + 1;
    std::vector<double> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(std::min(hi, lo + static_cast<double>(i) * step));
    return out;
}

std::string Table::to_csv() const {
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out += ',';
        out += header[i];
    }
    out += '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += format9(row[i]);
        }
        out += '\n';
    }
    return out;
}

Table emit_figure_data(FigureKind kind, const FigureParams& params, const Grid& grid) {
    const std::vector<double> xs = grid.points();
    Table t;
    switch (kind) {
        case FigureKind::DeviationPrice: {
            const auto ks = or_default(params.k_delta, {0.0004});
            t.header = {"utilization", "oracle_price"};
            for (double k : ks) {
                t.header.push_back("long" + label("k_delta", k));
                t.header.push_back("short" + label("k_delta", k));
            }
            for (double u : xs) {
                std::vector<double> row{u, params.oracle_price};
                for (double k : ks) {
                    const Quote q = quote_prices(params.oracle_price, u, DeviationParams{k, params.c_d});
                    row.push_back(q.long_price);
                    row.push_back(q.short_price);
                }
                t.rows.push_back(std::move(row));
            }
            break;
        }
        case FigureKind::DeviationPct: {
            const auto ks = or_default(params.k_delta, {0.000125, 0.00025, 0.0005});
            t.header = {"utilization"};
            for (double k : ks) t.header.push_back("deviation" + label("k_delta", k));
            for (double u : xs) {
                std::vector<double> row{u};
                for (double k : ks) row.push_back(eval_deviation(u, DeviationParams{k, params.c_d}));
                t.rows.push_back(std::move(row));
            }
            break;
        }
        case FigureKind::BaseFee: {
            const auto ks = or_default(params.k_b, {0.0325, 0.01, 0.005});
            t.header = {"utilization"};
            for (double k : ks) t.header.push_back("base_fee" + label("k_b", k));
            for (double u : xs) {
                std::vector<double> row{u};
                for (double k : ks) row.push_back(eval_base_fee(u, BaseFeeParams{k, params.c_b}));
                t.rows.push_back(std::move(row));
            }
            break;
        }
        case FigureKind::DynamicFee: {
            if (!params.m_max) throw Error(ErrorCode::DomainError, "dynamic_fee needs the maximum fee M");
            const auto ks = or_default(params.steepness, {0.0125, 0.0225, 0.0325});
            t.header = {"skew"};
            for (double k : ks) t.header.push_back("dynamic_fee" + label("k", k));
            for (double s : xs) {
                std::vector<double> row{s};
                for (double k : ks) row.push_back(eval_dynamic_fee(s, DynamicFeeParams{*params.m_max, k}));
                t.rows.push_back(std::move(row));
            }
            break;
        }
    }
    return t;
}

}  // namespace perpamm

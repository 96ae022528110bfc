#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace perpamm {

enum class FigureKind { DeviationPrice, DeviationPct, BaseFee, DynamicFee };

std::optional<FigureKind> parse_figure_kind(std::string_view text) noexcept;

// Inclusive grid lo, lo + step, ..., up to hi.
struct Grid {
    double lo = 0.0;
    double hi = 100.0;
    double step = 1.0;

    static Grid parse(std::string_view text);  // "lo:hi:step"
    std::vector<double> points() const;
};

// Curve parameters for figure tables. Empty coefficient lists fall back to the
// series plotted in the reference figures.
struct FigureParams {
    std::vector<double> k_delta;
    double c_d = 0.0;
    std::vector<double> k_b;
    double c_b = 0.0;
    std::vector<double> steepness;
    std::optional<double> m_max;
    double oracle_price = 2000.0;
};

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    // Header line plus one row per grid point, nine fractional digits.
    std::string to_csv() const;
};

Table emit_figure_data(FigureKind kind, const FigureParams& params, const Grid& grid);

}  // namespace perpamm

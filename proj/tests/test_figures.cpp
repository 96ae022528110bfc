#include <doctest.h>

#include "perpamm/error.hpp"
#include "perpamm/figures.hpp"

using namespace perpamm;

TEST_CASE("grid parsing") {
    const Grid g = Grid::parse("0:100:25");
    CHECK(g.points() == std::vector<double>{0, 25, 50, 75, 100});
    CHECK(Grid::parse("0:1:0.1").points().size() == 11);
    CHECK(Grid::parse("0:1:0.1").points().back() == 1.0);
    CHECK(Grid::parse("5:5:1").points().size() == 1);
    CHECK_THROWS_AS(Grid::parse("0:100"), Error);
    CHECK_THROWS_AS(Grid::parse("0:100:0"), Error);
    CHECK_THROWS_AS(Grid::parse("10:0:1"), Error);
    CHECK_THROWS_AS(Grid::parse("a:b:c"), Error);
}

TEST_CASE("deviation_price table") {
    const Table t = emit_figure_data(FigureKind::DeviationPrice, FigureParams{}, Grid{0, 100, 1});
    CHECK(t.header == std::vector<std::string>{"utilization", "oracle_price", "long(k_delta=0.0004)",
                                               "short(k_delta=0.0004)"});
    REQUIRE(t.rows.size() == 101);
    CHECK(t.rows.back()[2] == doctest::Approx(2080.0));
    CHECK(t.rows.back()[3] == doctest::Approx(1920.0));
    const std::string csv = t.to_csv();
    CHECK(csv.find("\n100.000000000,2000.000000000,2080.000000000,1920.000000000\n") != std::string::npos);
}

TEST_CASE("base_fee table uses the three reference coefficients by default") {
    const Table t = emit_figure_data(FigureKind::BaseFee, FigureParams{}, Grid{0, 100, 1});
    REQUIRE(t.header.size() == 4);
    CHECK(t.rows.back()[1] == doctest::Approx(325.0));
    CHECK(t.rows.back()[2] == doctest::Approx(100.0));
    CHECK(t.rows.back()[3] == doctest::Approx(50.0));
}

TEST_CASE("dynamic_fee table needs M and starts at zero") {
    CHECK_THROWS_AS(emit_figure_data(FigureKind::DynamicFee, FigureParams{}, Grid{0, 100, 1}), Error);
    FigureParams p;
    p.m_max = 500.0;
    const Table t = emit_figure_data(FigureKind::DynamicFee, p, Grid{0, 100, 1});
    CHECK(t.rows.front() == std::vector<double>{0, 0, 0, 0});
}

TEST_CASE("every emitted series is nondecreasing along the grid") {
    FigureParams p;
    p.m_max = 500.0;
    for (auto kind : {FigureKind::DeviationPrice, FigureKind::DeviationPct, FigureKind::BaseFee,
                      FigureKind::DynamicFee}) {
        const Table t = emit_figure_data(kind, p, Grid{0, 100, 0.5});
        for (std::size_t col = 1; col < t.header.size(); ++col) {
            const bool decreasing_ok = t.header[col].rfind("short", 0) == 0;
            for (std::size_t r = 1; r < t.rows.size(); ++r) {
                if (decreasing_ok) {
                    REQUIRE(t.rows[r][col] <= t.rows[r - 1][col]);
                } else {
                    REQUIRE(t.rows[r][col] >= t.rows[r - 1][col]);
                }
            }
        }
    }
}

TEST_CASE("utilization grids beyond 100 are domain errors") {
    CHECK_THROWS_AS(emit_figure_data(FigureKind::BaseFee, FigureParams{}, Grid{0, 120, 10}), Error);
}

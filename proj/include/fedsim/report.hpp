#pragma once
#include "fedsim/harness.hpp"

#include <string>
#include <vector>

namespace fedsim::report {

// Fixed header, one row per round, 9-significant-digit shortest reals,
// empty fields for undefined values, LF line endings. Byte-stable for
// identical metrics.
std::string csv_to_string(const std::vector<harness::RoundMetrics>& metrics);
void write_csv(const std::vector<harness::RoundMetrics>& metrics, const std::string& path);

struct Series {
    std::string name;
    std::vector<std::pair<double, double>> points;
};

// Standalone 800x500 SVG line chart: axes with min/max labels, one
// polyline and legend entry per series. Deterministic output.
std::string svg_to_string(const std::vector<Series>& series);
void render_svg(const std::vector<Series>& series, const std::string& path);

// Read series back out of a metrics CSV (x = round column). Rows with an
// empty cell in the requested column are skipped.
std::vector<Series> series_from_csv(const std::string& csv_path,
                                    const std::vector<std::string>& columns);

std::string format_real(double v); // %.9g

} // namespace fedsim::report

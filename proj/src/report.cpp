#include "fedsim/report.hpp"
#include "fedsim/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace fedsim::report {

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

namespace {

std::string opt_field(const std::optional<double>& v) {
    return v ? format_real(*v) : std::string();
}

} // namespace

std::string csv_to_string(const std::vector<harness::RoundMetrics>& metrics) {
    std::string out = "round,train_loss,test_accuracy,test_loss,global_update_norm,"
                      "d_t,mean_pairwise_cosine,effective_eta_l\n";
    for (const auto& m : metrics) {
        out += std::to_string(m.round);
        out += ',';
        out += format_real(m.train_loss);
        out += ',';
        out += opt_field(m.test_accuracy);
        out += ',';
        out += opt_field(m.test_loss);
        out += ',';
        out += format_real(m.global_update_norm);
        out += ',';
        out += opt_field(m.d_t);
        out += ',';
        out += opt_field(m.mean_pairwise_cosine);
        out += ',';
        out += format_real(m.effective_eta_l);
        out += '\n';
    }
    return out;
}

void write_csv(const std::vector<harness::RoundMetrics>& metrics, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write CSV: " + path);
    out << csv_to_string(metrics);
    if (!out) throw IoError("write failed: " + path);
}

namespace {

constexpr double kWidth = 800.0, kHeight = 500.0;
constexpr double kLeft = 70.0, kRight = 30.0, kTop = 30.0, kBottom = 50.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

std::string coord(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

} // namespace

std::string svg_to_string(const std::vector<Series>& series) {
    if (series.empty()) throw ConfigError("render_svg: no series");
    for (const auto& s : series)
        if (s.points.size() < 2)
            throw ConfigError("render_svg: series '" + s.name + "' needs at least 2 points");

    double xmin = series[0].points[0].first, xmax = xmin;
    double ymin = series[0].points[0].second, ymax = ymin;
    for (const auto& s : series)
        for (const auto& [x, y] : s.points) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    if (xmax <= xmin) throw ConfigError("render_svg: degenerate x range");
    if (ymax <= ymin) {
        ymin -= 0.5; // flat series still renders
        ymax += 0.5;
    }

    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    auto sx = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * plot_w; };
    auto sy = [&](double y) { return kTop + plot_h - (y - ymin) / (ymax - ymin) * plot_h; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 500\">\n";
    svg << "<rect x=\"0\" y=\"0\" width=\"800\" height=\"500\" fill=\"white\"/>\n";
    // axes
    svg << "<line x1=\"" << coord(kLeft) << "\" y1=\"" << coord(kTop + plot_h) << "\" x2=\""
        << coord(kLeft + plot_w) << "\" y2=\"" << coord(kTop + plot_h)
        << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << coord(kLeft) << "\" y1=\"" << coord(kTop) << "\" x2=\""
        << coord(kLeft) << "\" y2=\"" << coord(kTop + plot_h) << "\" stroke=\"black\"/>\n";
    // min/max labels
    svg << "<text x=\"" << coord(kLeft) << "\" y=\"" << coord(kHeight - 20)
        << "\" font-size=\"12\">" << format_real(xmin) << "</text>\n";
    svg << "<text x=\"" << coord(kLeft + plot_w - 40) << "\" y=\"" << coord(kHeight - 20)
        << "\" font-size=\"12\">" << format_real(xmax) << "</text>\n";
    svg << "<text x=\"5\" y=\"" << coord(kTop + plot_h) << "\" font-size=\"12\">"
        << format_real(ymin) << "</text>\n";
    svg << "<text x=\"5\" y=\"" << coord(kTop + 10) << "\" font-size=\"12\">" << format_real(ymax)
        << "</text>\n";

    for (std::size_t i = 0; i < series.size(); ++i) {
        const char* color = kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        bool first = true;
        for (const auto& [x, y] : series[i].points) {
            if (!first) svg << ' ';
            svg << coord(sx(x)) << ',' << coord(sy(y));
            first = false;
        }
        svg << "\"/>\n";
        // legend
        const double ly = kTop + 16.0 * static_cast<double>(i);
        svg << "<rect x=\"" << coord(kLeft + plot_w - 150) << "\" y=\"" << coord(ly)
            << "\" width=\"10\" height=\"10\" fill=\"" << color << "\"/>\n";
        svg << "<text x=\"" << coord(kLeft + plot_w - 135) << "\" y=\"" << coord(ly + 9)
            << "\" font-size=\"12\">" << series[i].name << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

void render_svg(const std::vector<Series>& series, const std::string& path) {
    const std::string body = svg_to_string(series);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write SVG: " + path);
    out << body;
    if (!out) throw IoError("write failed: " + path);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cell);
            cell.clear();
        } else if (c != '\r') {
            cell.push_back(c);
        }
    }
    cells.push_back(cell);
    return cells;
}

} // namespace

std::vector<Series> series_from_csv(const std::string& csv_path,
                                    const std::vector<std::string>& columns) {
    std::ifstream in(csv_path);
    if (!in) throw IoError("cannot open CSV: " + csv_path);
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty CSV: " + csv_path);
    const auto header = split_csv_line(line);

    auto column_index = [&](const std::string& name) -> std::size_t {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw ConfigError("CSV has no column '" + name + "'");
    };
    const std::size_t x_col = column_index("round");

    std::vector<Series> series;
    std::vector<std::size_t> idx;
    for (const auto& name : columns) {
        idx.push_back(column_index(name));
        series.push_back({name, {}});
    }

    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw IoError("CSV row has wrong cell count: " + csv_path);
        const double x = std::stod(cells[x_col]);
        for (std::size_t s = 0; s < idx.size(); ++s) {
            const std::string& cell = cells[idx[s]];
            if (cell.empty()) continue; // undefined that round
            series[s].points.emplace_back(x, std::stod(cell));
        }
    }
    return series;
}

} // namespace fedsim::report

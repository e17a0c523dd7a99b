#include "phaseparse/svg.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

namespace phaseparse {

namespace {

constexpr int kWidth = 900;
constexpr int kHeight = 300;
constexpr int kMargin = 40;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

}  // namespace

void write_svg_plot(const std::filesystem::path& path, const std::vector<double>& values,
                    const std::string& title, long marker_index) {
    std::ofstream out(path, std::ios::trunc);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << kMargin << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">"
        << title << "</text>\n";
    if (values.size() >= 2) {
        double lo = values[0], hi = values[0];
        for (double v : values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (hi - lo < 1e-12) hi = lo + 1.0;
        const double sx = static_cast<double>(kWidth - 2 * kMargin) / (values.size() - 1);
        const double sy = static_cast<double>(kHeight - 2 * kMargin) / (hi - lo);
        out << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
        for (size_t i = 0; i < values.size(); ++i) {
            const double x = kMargin + i * sx;
            const double y = kHeight - kMargin - (values[i] - lo) * sy;
            out << num(x) << ',' << num(y) << ' ';
        }
        out << "\"/>\n";
        if (marker_index >= 0 && marker_index < static_cast<long>(values.size())) {
            const double x = kMargin + marker_index * sx;
            out << "<line x1=\"" << num(x) << "\" y1=\"" << kMargin << "\" x2=\"" << num(x)
                << "\" y2=\"" << kHeight - kMargin
                << "\" stroke=\"crimson\" stroke-dasharray=\"4 3\"/>\n";
        }
    }
    out << "</svg>\n";
}

void write_svg_bars(const std::filesystem::path& path,
                    const std::vector<std::pair<std::string, double>>& bars,
                    const std::string& title) {
    std::ofstream out(path, std::ios::trunc);
    const int row_h = 28;
    const int height = 2 * kMargin + row_h * static_cast<int>(bars.size());
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << height
        << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << kMargin << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">"
        << title << "</text>\n";
    double hi = 1e-12;
    for (const auto& [_, v] : bars) hi = std::max(hi, v);
    const double sx = (kWidth - 2 * kMargin - 180) / hi;
    int y = kMargin;
    for (const auto& [label, v] : bars) {
        out << "<text x=\"" << kMargin << "\" y=\"" << y + 16
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << label << "</text>\n";
        out << "<rect x=\"" << kMargin + 160 << "\" y=\"" << y << "\" width=\"" << num(v * sx)
            << "\" height=\"18\" fill=\"steelblue\"/>\n";
        out << "<text x=\"" << kMargin + 166 + v * sx << "\" y=\"" << y + 14
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << num(v) << "</text>\n";
        y += row_h;
    }
    out << "</svg>\n";
}

}  // namespace phaseparse

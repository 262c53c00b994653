#include "dtsn/svg_chart.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dtsn/errors.hpp"
#include "dtsn/format.hpp"

namespace dtsn::io {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 610.0;
constexpr double kTop = 50.0;
constexpr double kBottom = 350.0;

const char* kPalette[] = {"#2060c0", "#c03020", "#208040", "#806020"};

std::string fmt(double v) {
    // Clip sub-pixel noise so coordinates stay short.
    double r = std::round(v * 100.0) / 100.0;
    if (r == 0.0) r = 0.0; // normalize -0
    return format_double(r);
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&') out += "&amp;";
        else if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else out += c;
    }
    return out;
}

} // namespace

std::string render_line_chart(const ChartSpec& spec) {
    if (spec.xs.empty() || spec.series.empty())
        throw ValidationError("chart needs at least one x value and one series");
    for (const Series& s : spec.series)
        if (s.ys.size() != spec.xs.size())
            throw ValidationError("series '" + s.label + "' has " +
                                  std::to_string(s.ys.size()) + " points for " +
                                  std::to_string(spec.xs.size()) + " x values");

    double x_min = *std::min_element(spec.xs.begin(), spec.xs.end());
    double x_max = *std::max_element(spec.xs.begin(), spec.xs.end());
    if (x_max == x_min) x_max = x_min + 1.0;

    double y_min = std::numeric_limits<double>::infinity();
    double y_max = -std::numeric_limits<double>::infinity();
    for (const Series& s : spec.series)
        for (double y : s.ys) {
            y_min = std::min(y_min, y);
            y_max = std::max(y_max, y);
        }
    bool log_y = y_min > 0.0 && y_max / y_min > 1e3;
    if (log_y) {
        y_min = std::log10(y_min);
        y_max = std::log10(y_max);
    }
    if (y_max == y_min) y_max = y_min + 1.0;

    auto px = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * (kRight - kLeft); };
    auto py = [&](double y) {
        if (log_y) y = std::log10(y);
        return kBottom - (y - y_min) / (y_max - y_min) * (kBottom - kTop);
    };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kWidth) +
           "\" height=\"" + fmt(kHeight) + "\" viewBox=\"0 0 " + fmt(kWidth) + " " +
           fmt(kHeight) + "\">\n";
    svg += "<rect width=\"" + fmt(kWidth) + "\" height=\"" + fmt(kHeight) +
           "\" fill=\"white\"/>\n";
    svg += "<text x=\"" + fmt(kWidth / 2) + "\" y=\"28\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"16\">" + escape(spec.title) + "</text>\n";

    svg += "<line x1=\"" + fmt(kLeft) + "\" y1=\"" + fmt(kBottom) + "\" x2=\"" + fmt(kRight) +
           "\" y2=\"" + fmt(kBottom) + "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + fmt(kLeft) + "\" y1=\"" + fmt(kTop) + "\" x2=\"" + fmt(kLeft) +
           "\" y2=\"" + fmt(kBottom) + "\" stroke=\"black\"/>\n";

    for (int i = 0; i <= 4; ++i) {
        double fx = x_min + (x_max - x_min) * i / 4.0;
        double fy = y_min + (y_max - y_min) * i / 4.0;
        double tick_y = log_y ? std::pow(10.0, fy) : fy;
        svg += "<text x=\"" + fmt(px(fx)) + "\" y=\"" + fmt(kBottom + 18) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
               format_double(fx) + "</text>\n";
        svg += "<text x=\"" + fmt(kLeft - 6) + "\" y=\"" +
               fmt(kBottom - (kBottom - kTop) * i / 4.0 + 4) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
               format_double(tick_y) + "</text>\n";
    }
    svg += "<text x=\"" + fmt((kLeft + kRight) / 2) + "\" y=\"" + fmt(kHeight - 14) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
           escape(spec.x_label) + "</text>\n";
    svg += "<text x=\"16\" y=\"" + fmt((kTop + kBottom) / 2) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
           "transform=\"rotate(-90 16 " + fmt((kTop + kBottom) / 2) + ")\">" +
           escape(spec.y_label) + (log_y ? " (log scale)" : "") + "</text>\n";

    for (std::size_t si = 0; si < spec.series.size(); ++si) {
        const Series& s = spec.series[si];
        const char* color = kPalette[si % 4];
        std::string points;
        for (std::size_t i = 0; i < spec.xs.size(); ++i) {
            if (!points.empty()) points += ' ';
            points += fmt(px(spec.xs[i])) + "," + fmt(py(s.ys[i]));
        }
        svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
               "\" stroke-width=\"2\" points=\"" + points + "\"/>\n";
        double ly = kTop + 16.0 * static_cast<double>(si);
        svg += "<rect x=\"" + fmt(kRight - 140) + "\" y=\"" + fmt(ly - 9) +
               "\" width=\"10\" height=\"10\" fill=\"" + color + "\"/>\n";
        svg += "<text x=\"" + fmt(kRight - 126) + "\" y=\"" + fmt(ly) +
               "\" font-family=\"sans-serif\" font-size=\"11\">" + escape(s.label) +
               "</text>\n";
    }

    svg += "</svg>\n";
    return svg;
}

} // namespace dtsn::io

#pragma once

#include <string>
#include <vector>

namespace dtsn::io {

// Minimal deterministic line chart, enough to eyeball a sweep next to its
// CSV. Same input, same bytes.

struct Series {
    std::string label;
    std::vector<double> ys; // one per x
};

struct ChartSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<double> xs;
    std::vector<Series> series;
};

// Renders an SVG document. The y axis switches to log10 when the positive
// value range spans more than three decades. Throws ValidationError on an
// empty spec or a series whose length does not match xs.
std::string render_line_chart(const ChartSpec& spec);

} // namespace dtsn::io

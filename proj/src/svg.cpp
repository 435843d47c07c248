#include "fairfis/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace fairfis {
namespace {

std::string num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

std::string value_text(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.12f", v);
    return buf;
}

void bar(std::ostringstream& out, double x, double y, double w, double h, const char* fill,
         const std::string& label, double value) {
    out << "  <rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w)
        << "\" height=\"" << num(h) << "\" fill=\"" << fill << "\">"
        << "<title>" << label << " = " << value_text(value) << "</title></rect>\n";
}

}  // namespace

std::string importance_chart_svg(const std::vector<std::string>& feature_names,
                                 const std::vector<double>& fis, const std::vector<double>& fairfis) {
    const size_t p = feature_names.size();
    if (fis.size() != p || fairfis.size() != p)
        throw std::invalid_argument("chart inputs must have one value per feature");

    const double bar_w = 22.0, gap = 8.0, left = 60.0;
    const double panel_h = 150.0, pad = 40.0;
    const double width = left + p * (bar_w + gap) + 20.0;
    const double height = 2 * panel_h + 3 * pad + 20.0;

    double fis_max = 1e-12, fair_max = 1e-12;
    for (size_t j = 0; j < p; ++j) {
        fis_max = std::max(fis_max, std::abs(fis[j]));
        fair_max = std::max(fair_max, std::abs(fairfis[j]));
    }

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\""
        << num(height) << "\" font-family=\"sans-serif\" font-size=\"11\">\n";

    // panel 1: fis, bars up from the baseline
    const double base1 = pad + panel_h;
    out << "  <text x=\"" << num(left) << "\" y=\"" << num(pad - 12.0) << "\">fis</text>\n";
    out << "  <line x1=\"" << num(left - 6.0) << "\" y1=\"" << num(base1) << "\" x2=\""
        << num(width - 14.0) << "\" y2=\"" << num(base1) << "\" stroke=\"#444\"/>\n";
    for (size_t j = 0; j < p; ++j) {
        const double h = panel_h * (fis[j] / fis_max);
        bar(out, left + j * (bar_w + gap), base1 - h, bar_w, h, "#4878a8", feature_names[j], fis[j]);
    }

    // panel 2: fairfis, centered axis, negative bars hang below in their own fill
    const double mid2 = base1 + 2 * pad + panel_h / 2.0;
    out << "  <text x=\"" << num(left) << "\" y=\"" << num(base1 + 2 * pad - 12.0)
        << "\">fairfis</text>\n";
    out << "  <line x1=\"" << num(left - 6.0) << "\" y1=\"" << num(mid2) << "\" x2=\""
        << num(width - 14.0) << "\" y2=\"" << num(mid2) << "\" stroke=\"#444\"/>\n";
    for (size_t j = 0; j < p; ++j) {
        const double h = (panel_h / 2.0) * (std::abs(fairfis[j]) / fair_max);
        const double x = left + j * (bar_w + gap);
        if (fairfis[j] >= 0)
            bar(out, x, mid2 - h, bar_w, h, "#48a878", feature_names[j], fairfis[j]);
        else
            bar(out, x, mid2, bar_w, h, "#c05050", feature_names[j], fairfis[j]);
        out << "  <text x=\"" << num(x + bar_w / 2.0) << "\" y=\"" << num(height - 8.0)
            << "\" text-anchor=\"middle\">" << (p > 24 ? std::to_string(j + 1) : feature_names[j])
            << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace fairfis

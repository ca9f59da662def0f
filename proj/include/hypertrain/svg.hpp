#ifndef HYPERTRAIN_SVG_HPP
#define HYPERTRAIN_SVG_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "hypertrain/linalg.hpp"

namespace hypertrain {

// Deliberately minimal plots: polylines plus axes. Anything richer is left to
// external tools working from the CSVs.

struct SvgSeries {
    std::string label;
    std::string color = "#1f77b4";
    DenseVector y;
};

namespace detail {

inline std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

} // namespace detail

inline void write_line_plot(std::ostream& os, const std::vector<SvgSeries>& series, const std::string& x_label,
                            const std::string& y_label) {
    const double W = 640, H = 400, mL = 60, mR = 16, mT = 16, mB = 44;
    double ymin = 0.0, ymax = 1.0;
    std::size_t n = 0;
    bool first = true;
    for (const auto& s : series)
        for (double v : s.y) {
            if (!std::isfinite(v)) continue;
            if (first) { ymin = ymax = v; first = false; }
            ymin = std::min(ymin, v);
            ymax = std::max(ymax, v);
        }
    for (const auto& s : series) n = std::max(n, s.y.size());
    if (ymax <= ymin) ymax = ymin + 1.0;
    const double xspan = n > 1 ? double(n - 1) : 1.0;
    auto X = [&](double i) { return mL + (W - mL - mR) * i / xspan; };
    auto Y = [&](double v) { return H - mB - (H - mT - mB) * (v - ymin) / (ymax - ymin); };

    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<line x1=\"" << mL << "\" y1=\"" << H - mB << "\" x2=\"" << W - mR << "\" y2=\"" << H - mB
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << mL << "\" y1=\"" << mT << "\" x2=\"" << mL << "\" y2=\"" << H - mB
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << (mL + W - mR) / 2 << "\" y=\"" << H - 8 << "\" text-anchor=\"middle\" font-size=\"12\">"
       << x_label << "</text>\n";
    os << "<text x=\"14\" y=\"" << (mT + H - mB) / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 "
       << (mT + H - mB) / 2 << ")\">" << y_label << "</text>\n";
    os << "<text x=\"" << mL - 6 << "\" y=\"" << Y(ymin) + 4 << "\" text-anchor=\"end\" font-size=\"10\">"
       << detail::fmt(ymin) << "</text>\n";
    os << "<text x=\"" << mL - 6 << "\" y=\"" << Y(ymax) + 4 << "\" text-anchor=\"end\" font-size=\"10\">"
       << detail::fmt(ymax) << "</text>\n";

    double ly = mT + 12;
    for (const auto& s : series) {
        os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.y.size(); ++i) {
            if (!std::isfinite(s.y[i])) continue;
            os << detail::fmt(X(double(i))) << ',' << detail::fmt(Y(s.y[i])) << ' ';
        }
        os << "\"/>\n";
        os << "<text x=\"" << W - mR - 4 << "\" y=\"" << ly << "\" text-anchor=\"end\" font-size=\"11\" fill=\""
           << s.color << "\">" << s.label << "</text>\n";
        ly += 14;
    }
    os << "</svg>\n";
}

inline void write_histogram(std::ostream& os, const DenseVector& values, std::size_t bins, const std::string& x_label) {
    const double W = 640, H = 400, mL = 60, mR = 16, mT = 16, mB = 44;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<line x1=\"" << mL << "\" y1=\"" << H - mB << "\" x2=\"" << W - mR << "\" y2=\"" << H - mB
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << mL << "\" y1=\"" << mT << "\" x2=\"" << mL << "\" y2=\"" << H - mB
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << (mL + W - mR) / 2 << "\" y=\"" << H - 8 << "\" text-anchor=\"middle\" font-size=\"12\">"
       << x_label << "</text>\n";
    if (!values.empty() && bins > 0) {
        double lo = values[0], hi = values[0];
        for (double v : values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (hi <= lo) hi = lo + 1e-12;
        std::vector<std::size_t> count(bins, 0);
        for (double v : values) {
            auto b = std::size_t((v - lo) / (hi - lo) * double(bins));
            if (b >= bins) b = bins - 1;
            ++count[b];
        }
        const std::size_t peak = *std::max_element(count.begin(), count.end());
        const double bw = (W - mL - mR) / double(bins);
        for (std::size_t b = 0; b < bins; ++b) {
            const double h = (H - mT - mB) * double(count[b]) / double(peak ? peak : 1);
            os << "<rect x=\"" << detail::fmt(mL + bw * double(b)) << "\" y=\"" << detail::fmt(H - mB - h)
               << "\" width=\"" << detail::fmt(bw) << "\" height=\"" << detail::fmt(h)
               << "\" fill=\"#1f77b4\" stroke=\"white\" stroke-width=\"0.5\"/>\n";
        }
        os << "<text x=\"" << mL << "\" y=\"" << H - mB + 14 << "\" text-anchor=\"middle\" font-size=\"10\">"
           << detail::fmt(lo) << "</text>\n";
        os << "<text x=\"" << W - mR << "\" y=\"" << H - mB + 14 << "\" text-anchor=\"middle\" font-size=\"10\">"
           << detail::fmt(hi) << "</text>\n";
    }
    os << "</svg>\n";
}

} // namespace hypertrain

#endif

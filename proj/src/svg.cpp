#include "spfkit/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "spfkit/errors.hpp"

namespace spfkit {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

}  // namespace

std::string scatter_svg(const ValidationReport& report) {
    constexpr double kSize = 480.0;
    constexpr double kMargin = 50.0;
    const double span = kSize - 2 * kMargin;

    double vmax = 1.0;
    for (const auto& p : report.pairs) vmax = std::max({vmax, p.observed, p.predicted});
    vmax *= 1.05;

    auto sx = [&](double v) { return kMargin + span * v / vmax; };
    auto sy = [&](double v) { return kSize - kMargin - span * v / vmax; };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kSize) + "\" height=\"" +
           num(kSize) + "\" viewBox=\"0 0 " + num(kSize) + " " + num(kSize) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + num(kSize / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" +
           report.model_label + "</text>\n";
    // axes
    svg += "<line x1=\"" + num(kMargin) + "\" y1=\"" + num(kSize - kMargin) + "\" x2=\"" +
           num(kSize - kMargin) + "\" y2=\"" + num(kSize - kMargin) +
           "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + num(kMargin) + "\" y1=\"" + num(kMargin) + "\" x2=\"" + num(kMargin) +
           "\" y2=\"" + num(kSize - kMargin) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + num(kSize / 2) + "\" y=\"" + num(kSize - 12) +
           "\" text-anchor=\"middle\" font-size=\"12\">Observed crashes</text>\n";
    svg += "<text x=\"14\" y=\"" + num(kSize / 2) + "\" text-anchor=\"middle\" font-size=\"12\"" +
           " transform=\"rotate(-90 14 " + num(kSize / 2) + ")\">Predicted crashes</text>\n";
    svg += "<text x=\"" + num(kMargin) + "\" y=\"" + num(kSize - kMargin + 16) +
           "\" text-anchor=\"middle\" font-size=\"10\">0</text>\n";
    svg += "<text x=\"" + num(kSize - kMargin) + "\" y=\"" + num(kSize - kMargin + 16) +
           "\" text-anchor=\"middle\" font-size=\"10\">" + num(vmax) + "</text>\n";
    svg += "<text x=\"" + num(kMargin - 6) + "\" y=\"" + num(kMargin + 4) +
           "\" text-anchor=\"end\" font-size=\"10\">" + num(vmax) + "</text>\n";
    // mean-equivalence reference line
    svg += "<line x1=\"" + num(sx(0)) + "\" y1=\"" + num(sy(0)) + "\" x2=\"" + num(sx(vmax)) +
           "\" y2=\"" + num(sy(vmax)) + "\" stroke=\"red\" stroke-width=\"1.5\"/>\n";
    for (const auto& p : report.pairs) {
        svg += "<circle cx=\"" + num(sx(p.observed)) + "\" cy=\"" + num(sy(p.predicted)) +
               "\" r=\"3\" fill=\"steelblue\" fill-opacity=\"0.6\"/>\n";
    }
    svg += "</svg>\n";
    return svg;
}

void write_scatter_svg(const std::string& path, const ValidationReport& report) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ComputationError("svg: cannot write " + path);
    out << scatter_svg(report);
}

}  // namespace spfkit

#include "hyperlap/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hyperlap/errors.hpp"

namespace hyperlap {

namespace {

constexpr double kWidth = 640.0, kHeight = 440.0;
constexpr double kLeft = 80.0, kRight = 150.0, kTop = 40.0, kBottom = 60.0;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string loglog_svg(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                       const std::vector<PlotSeries>& series) {
    double xlo = HUGE_VAL, xhi = -HUGE_VAL, ylo = HUGE_VAL, yhi = -HUGE_VAL;
    for (const auto& s : series)
        for (std::size_t i = 0; i < std::min(s.xs.size(), s.ys.size()); ++i) {
            if (!(s.xs[i] > 0.0) || !(s.ys[i] > 0.0)) continue;
            xlo = std::min(xlo, std::log10(s.xs[i]));
            xhi = std::max(xhi, std::log10(s.xs[i]));
            ylo = std::min(ylo, std::log10(s.ys[i]));
            yhi = std::max(yhi, std::log10(s.ys[i]));
        }
    if (!(xlo <= xhi)) xlo = 0.0, xhi = 1.0, ylo = 0.0, yhi = 1.0;
    if (xhi - xlo < 0.2) xlo -= 0.1, xhi += 0.1;
    if (yhi - ylo < 0.2) ylo -= 0.1, yhi += 0.1;
    const double px = (xhi - xlo) * 0.05, py = (yhi - ylo) * 0.05;
    xlo -= px, xhi += px, ylo -= py, yhi += py;

    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    auto X = [&](double lx) { return kLeft + (lx - xlo) / (xhi - xlo) * pw; };
    auto Y = [&](double ly) { return kTop + (yhi - ly) / (yhi - ylo) * ph; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<defs><clipPath id=\"plot\"><rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(pw)
      << "\" height=\"" << num(ph) << "\"/></clipPath></defs>\n";
    o << "<text x=\"" << num(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
      << "</text>\n";
    o << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int d = int(std::ceil(xlo)); d <= int(std::floor(xhi)); ++d)
        o << "<line x1=\"" << num(X(d)) << "\" y1=\"" << num(kTop + ph) << "\" x2=\"" << num(X(d)) << "\" y2=\""
          << num(kTop + ph + 5) << "\" stroke=\"black\"/><text x=\"" << num(X(d)) << "\" y=\"" << num(kTop + ph + 18)
          << "\" text-anchor=\"middle\">1e" << d << "</text>\n";
    for (int d = int(std::ceil(ylo)); d <= int(std::floor(yhi)); ++d)
        o << "<line x1=\"" << num(kLeft - 5) << "\" y1=\"" << num(Y(d)) << "\" x2=\"" << num(kLeft) << "\" y2=\""
          << num(Y(d)) << "\" stroke=\"black\"/><text x=\"" << num(kLeft - 8) << "\" y=\"" << num(Y(d) + 4)
          << "\" text-anchor=\"end\">1e" << d << "</text>\n";
    o << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(kHeight - 15) << "\" text-anchor=\"middle\">"
      << escape(xlabel) << "</text>\n";
    o << "<text transform=\"translate(20," << num(kTop + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(ylabel) << "</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = kColors[k % (sizeof kColors / sizeof kColors[0])];
        for (std::size_t i = 0; i < std::min(s.xs.size(), s.ys.size()); ++i) {
            if (!(s.xs[i] > 0.0) || !(s.ys[i] > 0.0)) continue;
            o << "<circle cx=\"" << num(X(std::log10(s.xs[i]))) << "\" cy=\"" << num(Y(std::log10(s.ys[i])))
              << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        }
        if (s.exponent) {
            // y = e^c x^p, so log10 y = (c + p ln x) / ln 10
            auto fit = [&](double lx) { return (s.intercept + *s.exponent * lx * std::log(10.0)) / std::log(10.0); };
            o << "<line x1=\"" << num(X(xlo)) << "\" y1=\"" << num(Y(fit(xlo))) << "\" x2=\"" << num(X(xhi))
              << "\" y2=\"" << num(Y(fit(xhi))) << "\" stroke=\"" << color << "\" stroke-dasharray=\"5,3\" clip-path=\"url(#plot)\"/>\n";
        }
        const double ly = kTop + 14.0 + 18.0 * double(k);
        std::string label = s.label;
        if (s.exponent) {
            char buf[48];
            std::snprintf(buf, sizeof buf, " (slope %.3f)", *s.exponent);
            label += buf;
        }
        o << "<circle cx=\"" << num(kLeft + pw + 12) << "\" cy=\"" << num(ly - 4) << "\" r=\"3\" fill=\"" << color
          << "\"/><text x=\"" << num(kLeft + pw + 20) << "\" y=\"" << num(ly) << "\" font-size=\"10\">"
          << escape(label) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ResourceError("cannot write " + path);
    out << text;
    if (!out) throw ResourceError("write failed for " + path);
}

}  // namespace hyperlap

#pragma once

#include <optional>
#include <string>
#include <vector>

namespace hyperlap {

/** @brief One point series on a log-log plot, optionally with the fitted line y = e^intercept x^exponent. */
struct PlotSeries {
    std::string label;
    std::vector<double> xs;
    std::vector<double> ys;
    std::optional<double> exponent;
    double intercept = 0.0;
};

/**
 * @brief Static log-log plot with axes, decade ticks, points and fitted lines.
 *
 * Non-positive values are skipped. Output depends only on the arguments.
 */
std::string loglog_svg(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                       const std::vector<PlotSeries>& series);

void write_text_file(const std::string& path, const std::string& text);

}  // namespace hyperlap

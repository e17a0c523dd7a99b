#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace phaseparse {

/// Standalone SVG line plot of one series, with an optional vertical marker
/// (e.g. the detected boundary). Good enough for eyeballing signals.
void write_svg_plot(const std::filesystem::path& path, const std::vector<double>& values,
                    const std::string& title, long marker_index = -1);

/// Labeled horizontal bar chart (method comparison plots).
void write_svg_bars(const std::filesystem::path& path,
                    const std::vector<std::pair<std::string, double>>& bars,
                    const std::string& title);

}  // namespace phaseparse

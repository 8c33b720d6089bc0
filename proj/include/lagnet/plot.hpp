#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace lagnet {

struct PlotSpec {
    std::vector<double> actual;
    std::vector<std::vector<double>> predicted;
    std::string actual_label = "actual";
    std::vector<std::string> predicted_labels;
    int width = 900;
    int height = 400;
    std::string title;

    void validate() const;
};

// Standalone SVG line chart: one polyline per series, 5% padded linear axes
// and a legend. Output bytes depend only on the spec.
std::string render_svg(const PlotSpec& spec);

// Validates, then writes render_svg(spec) to path.
void emit_plot(const PlotSpec& spec, const std::filesystem::path& path);

}  // namespace lagnet

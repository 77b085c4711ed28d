#pragma once

#include <string>
#include <vector>

namespace silab::svg {

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#1f6fb4";
    bool dashed = false;
};

struct Band {
    double x0 = 0.0;
    double x1 = 0.0;
    std::string color = "#dddddd";
    std::string label;
};

struct Panel {
    std::string title;
    std::string xlabel = "step";
    std::string ylabel;
    std::vector<Series> series;
    std::vector<Band> bands;
    bool logy = false;
    bool logx = false;
};

/// Self-contained SVG: data-faithful polylines, 1-2-5 ticks, optional log
/// axes and shaded bands. Panels are laid out in two columns.
std::string render(const std::vector<Panel>& panels, int panel_width = 480,
                   int panel_height = 320);

} // namespace silab::svg

#pragma once

// Minimal hand-emitted SVG line and stem charts, one panel per row.

#include <optional>
#include <string>
#include <vector>

namespace scatex::svg {

struct Polyline {
    std::vector<double> x;
    std::vector<double> y;
    std::string css_class; // emitted as class="..."
    std::string color = "#1f77b4";
    bool dashed = false;
};

/// Vertical lines from zero to y[i] at x[i], each capped by a circle.
struct Stems {
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#d62728";
};

struct Panel {
    std::string title;
    std::vector<Polyline> lines;
    std::optional<Stems> stems;
    double x_min = 0.0;
    double x_max = 1.0;
};

struct Figure {
    std::string title;
    std::vector<Panel> panels;
    double width = 720.0;
    double panel_height = 180.0;
};

std::string render(const Figure& figure);
void write(const std::string& path, const Figure& figure);

} // namespace scatex::svg

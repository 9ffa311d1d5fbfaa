#include "scatex/svg.hpp"

#include "scatex/csv.hpp"
#include "scatex/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace scatex::svg {

namespace {

constexpr double margin_left = 60.0;
constexpr double margin_right = 20.0;
constexpr double title_height = 30.0;
constexpr double panel_pad = 24.0;

std::string escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string num(double v)
{
    // Two decimals keep files small; pixel coordinates need no more.
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(2);
    os << v;
    return os.str();
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void add(double v)
    {
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
};

} // namespace

std::string render(const Figure& fig)
{
    const double plot_w = fig.width - margin_left - margin_right;
    const double total_h = title_height + fig.panels.size() * (fig.panel_height + panel_pad) + panel_pad;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(fig.width) << "\" height=\"" << num(total_h)
       << "\" viewBox=\"0 0 " << num(fig.width) << ' ' << num(total_h) << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << num(fig.width / 2) << "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       << "font-size=\"15\">" << escape(fig.title) << "</text>\n";

    for (std::size_t pi = 0; pi < fig.panels.size(); ++pi) {
        const Panel& p = fig.panels[pi];
        const double top = title_height + pi * (fig.panel_height + panel_pad) + panel_pad;
        const double plot_h = fig.panel_height - 10.0;

        Range yr;
        yr.add(0.0);
        for (const auto& l : p.lines)
            for (double v : l.y)
                yr.add(v);
        if (p.stems)
            for (double v : p.stems->y)
                yr.add(v);
        if (!(yr.hi > yr.lo)) {
            yr.lo -= 1.0;
            yr.hi += 1.0;
        }
        const double pad = 0.05 * (yr.hi - yr.lo);
        const double y_lo = yr.lo - pad;
        const double y_hi = yr.hi + pad;
        const double x_span = p.x_max > p.x_min ? p.x_max - p.x_min : 1.0;
        auto sx = [&](double x) { return margin_left + (x - p.x_min) / x_span * plot_w; };
        auto sy = [&](double y) { return top + (y_hi - y) / (y_hi - y_lo) * plot_h; };

        os << "<g class=\"panel\">\n";
        os << "<text x=\"" << num(margin_left) << "\" y=\"" << num(top - 6) << "\" font-family=\"sans-serif\" "
           << "font-size=\"12\">" << escape(p.title) << "</text>\n";
        os << "<rect x=\"" << num(margin_left) << "\" y=\"" << num(top) << "\" width=\"" << num(plot_w)
           << "\" height=\"" << num(plot_h) << "\" fill=\"none\" stroke=\"#888\"/>\n";
        os << "<line class=\"zero\" x1=\"" << num(margin_left) << "\" y1=\"" << num(sy(0.0)) << "\" x2=\""
           << num(margin_left + plot_w) << "\" y2=\"" << num(sy(0.0)) << "\" stroke=\"#ccc\"/>\n";
        for (double v : {yr.lo, yr.hi})
            os << "<text x=\"" << num(margin_left - 4) << "\" y=\"" << num(sy(v) + 4) << "\" text-anchor=\"end\" "
               << "font-family=\"sans-serif\" font-size=\"10\">" << escape(csv::format_double(std::round(v * 1000) / 1000))
               << "</text>\n";

        for (const auto& l : p.lines) {
            if (l.x.size() != l.y.size())
                throw InputError("svg: polyline x and y lengths differ");
            os << "<polyline class=\"" << escape(l.css_class) << "\" fill=\"none\" stroke=\"" << l.color
               << "\" stroke-width=\"1.2\"";
            if (l.dashed)
                os << " stroke-dasharray=\"4 3\"";
            os << " points=\"";
            for (std::size_t i = 0; i < l.x.size(); ++i)
                os << (i ? " " : "") << num(sx(l.x[i])) << ',' << num(sy(l.y[i]));
            os << "\"/>\n";
        }
        if (p.stems) {
            const Stems& s = *p.stems;
            if (s.x.size() != s.y.size())
                throw InputError("svg: stem x and y lengths differ");
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                os << "<line class=\"stem\" x1=\"" << num(sx(s.x[i])) << "\" y1=\"" << num(sy(0.0)) << "\" x2=\""
                   << num(sx(s.x[i])) << "\" y2=\"" << num(sy(s.y[i])) << "\" stroke=\"" << s.color << "\"/>\n";
                os << "<circle class=\"marker\" cx=\"" << num(sx(s.x[i])) << "\" cy=\"" << num(sy(s.y[i]))
                   << "\" r=\"2.5\" fill=\"" << s.color << "\"/>\n";
            }
        }
        os << "</g>\n";
    }
    os << "</svg>\n";
    return os.str();
}

void write(const std::string& path, const Figure& figure)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open '" + path + "' for writing");
    out << render(figure);
    if (!out)
        throw IoError("write to '" + path + "' failed");
}

} // namespace scatex::svg

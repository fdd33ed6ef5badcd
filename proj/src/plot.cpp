#include "dnpg/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "dnpg/eval.hpp"

namespace dnpg {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 60.0, kRight = 20.0, kTop = 40.0, kBottom = 50.0;
constexpr std::array<const char*, 6> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string escape(const std::string& s) {
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

struct Frame {
    double x0, x1, y0, y1;

    double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
    double py(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

std::string header(const std::string& title) {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
           "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\" font-family=\"sans-serif\" font-size=\"11\">\n"
           "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
           "<text x=\"" + num(kWidth / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + escape(title) +
           "</text>\n";
}

std::string axes(const Frame& f, bool x_ticks = true) {
    std::string s = "<g class=\"axes\" stroke=\"black\" stroke-width=\"1\">\n";
    s += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kHeight - kBottom) + "\" x2=\"" + num(kWidth - kRight) +
         "\" y2=\"" + num(kHeight - kBottom) + "\"/>\n";
    s += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) + "\" y2=\"" +
         num(kHeight - kBottom) + "\"/>\n</g>\n<g class=\"ticks\" fill=\"black\">\n";
    for (int i = 0; i <= 4; ++i) {
        const double x = f.x0 + (f.x1 - f.x0) * i / 4.0;
        if (x_ticks)
            s += "<text x=\"" + num(f.px(x)) + "\" y=\"" + num(kHeight - kBottom + 16) + "\" text-anchor=\"middle\">" +
                 num(x) + "</text>\n";
        const double y = f.y0 + (f.y1 - f.y0) * i / 4.0;
        s += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(f.py(y) + 4) + "\" text-anchor=\"end\">" + num(y) +
             "</text>\n";
    }
    return s + "</g>\n";
}

std::string no_samples_note() {
    return "<text class=\"annotation\" x=\"" + num(kWidth / 2) + "\" y=\"" + num(kHeight / 2) +
           "\" text-anchor=\"middle\" fill=\"#777\">no samples</text>\n";
}

std::string legend(const std::vector<std::pair<std::string, std::string>>& entries) {
    std::string s = "<g class=\"legend\">\n";
    double y = kTop + 4;
    for (const auto& [label, colour] : entries) {
        s += "<rect x=\"" + num(kWidth - kRight - 150) + "\" y=\"" + num(y - 8) +
             "\" width=\"10\" height=\"10\" fill=\"" + colour + "\"/>\n";
        s += "<text x=\"" + num(kWidth - kRight - 135) + "\" y=\"" + num(y + 1) + "\">" + escape(label) + "</text>\n";
        y += 16;
    }
    return s + "</g>\n";
}

} // namespace

std::string render_density_1d(const std::vector<Vec>& samples, const Grid& bins,
                              const std::vector<DensityCurve>& curves, const std::string& title) {
    if (bins.dim() != 1) throw std::invalid_argument("render_density_1d: histogram grid must be 1-D");
    for (const auto& c : curves)
        if (c.table.grid.dim() != 1) throw std::invalid_argument("render_density_1d: curves must be 1-D");
    for (const auto& z : samples)
        if (z.size() != 1) throw std::invalid_argument("render_density_1d: samples must be 1-D");

    const Axis& ax = bins.axis(0);
    const Histogram hist = make_histogram(bins, samples);
    std::vector<double> heights(bins.size(), 0.0);
    double ymax = 0.0;
    if (hist.total > 0)
        for (std::size_t i = 0; i < bins.size(); ++i) {
            const double width = ax.weight(static_cast<int>(i));
            heights[i] = hist.counts[i] / (static_cast<double>(hist.total) * width);
            ymax = std::max(ymax, heights[i]);
        }
    double x0 = ax.lo, x1 = ax.hi;
    for (const auto& c : curves) {
        x0 = std::min(x0, c.table.grid.axis(0).lo);
        x1 = std::max(x1, c.table.grid.axis(0).hi);
        for (double v : c.table.density) ymax = std::max(ymax, v);
    }
    if (!(ymax > 0.0)) ymax = 1.0;
    const Frame f{x0, x1, 0.0, 1.1 * ymax};

    std::string s = header(title) + axes(f);
    std::vector<std::pair<std::string, std::string>> entries;
    if (hist.total == 0) {
        s += no_samples_note();
    } else {
        s += "<g class=\"histogram\" fill=\"#9ecae1\" stroke=\"#6baed6\" stroke-width=\"0.5\">\n";
        const double h = ax.spacing();
        for (std::size_t i = 0; i < bins.size(); ++i) {
            if (heights[i] <= 0.0) continue;
            const double lo = std::max(ax.lo, ax.node(static_cast<int>(i)) - h / 2);
            const double hi = std::min(ax.hi, ax.node(static_cast<int>(i)) + h / 2);
            s += "<rect x=\"" + num(f.px(lo)) + "\" y=\"" + num(f.py(heights[i])) + "\" width=\"" +
                 num(f.px(hi) - f.px(lo)) + "\" height=\"" + num(f.py(0) - f.py(heights[i])) + "\"/>\n";
        }
        s += "</g>\n";
        entries.emplace_back("samples (" + std::to_string(hist.total) + ")", "#9ecae1");
    }
    for (std::size_t k = 0; k < curves.size(); ++k) {
        const auto& c = curves[k];
        const char* colour = kPalette[k % kPalette.size()];
        std::string d;
        for (std::size_t i = 0; i < c.table.density.size(); ++i) {
            const double x = c.table.grid.axis(0).node(static_cast<int>(i));
            d += (i == 0 ? "M" : " L") + num(f.px(x)) + " " + num(f.py(c.table.density[i]));
        }
        s += "<path class=\"density-curve\" data-label=\"" + escape(c.label) + "\" fill=\"none\" stroke=\"" + colour +
             "\" stroke-width=\"1.5\" d=\"" + d + "\"/>\n";
        entries.emplace_back(c.label, colour);
    }
    s += legend(entries);
    return s + "</svg>\n";
}

std::string render_scatter_2d(const std::vector<Vec>& samples, const std::optional<DensityTable>& underlay,
                              const std::string& title) {
    for (const auto& z : samples)
        if (z.size() != 2) throw std::invalid_argument("render_scatter_2d: samples must be 2-D");
    if (underlay && underlay->grid.dim() != 2) throw std::invalid_argument("render_scatter_2d: underlay must be 2-D");

    double x0 = -1, x1 = 1, y0 = -1, y1 = 1;
    if (underlay) {
        x0 = underlay->grid.axis(0).lo;
        x1 = underlay->grid.axis(0).hi;
        y0 = underlay->grid.axis(1).lo;
        y1 = underlay->grid.axis(1).hi;
    } else if (!samples.empty()) {
        x0 = x1 = samples[0][0];
        y0 = y1 = samples[0][1];
        for (const auto& z : samples) {
            x0 = std::min(x0, z[0]), x1 = std::max(x1, z[0]);
            y0 = std::min(y0, z[1]), y1 = std::max(y1, z[1]);
        }
        const double px = std::max(0.05 * (x1 - x0), 1e-3), py = std::max(0.05 * (y1 - y0), 1e-3);
        x0 -= px, x1 += px, y0 -= py, y1 += py;
    }
    const Frame f{x0, x1, y0, y1};
    std::string s = header(title) + axes(f);

    if (underlay) {
        // Marching squares at fixed fractions of the peak density.
        const auto& g = underlay->grid;
        const int nx = g.axis(0).points, ny = g.axis(1).points;
        auto val = [&](int i, int j) { return underlay->density[static_cast<std::size_t>(i) * ny + j]; };
        const double peak = *std::max_element(underlay->density.begin(), underlay->density.end());
        s += "<g class=\"contours\" fill=\"none\" stroke=\"#888\" stroke-width=\"0.8\">\n";
        for (double frac : {0.1, 0.3, 0.5, 0.7, 0.9}) {
            const double level = frac * peak;
            std::string d;
            for (int i = 0; i + 1 < nx; ++i)
                for (int j = 0; j + 1 < ny; ++j) {
                    const std::array<double, 4> v{val(i, j), val(i + 1, j), val(i + 1, j + 1), val(i, j + 1)};
                    const std::array<std::pair<double, double>, 4> p{
                        std::pair{g.axis(0).node(i), g.axis(1).node(j)},
                        std::pair{g.axis(0).node(i + 1), g.axis(1).node(j)},
                        std::pair{g.axis(0).node(i + 1), g.axis(1).node(j + 1)},
                        std::pair{g.axis(0).node(i), g.axis(1).node(j + 1)}};
                    std::vector<std::pair<double, double>> hits;
                    for (int e = 0; e < 4; ++e) {
                        const int a = e, b = (e + 1) % 4;
                        if ((v[a] < level) != (v[b] < level)) {
                            const double w = (level - v[a]) / (v[b] - v[a]);
                            hits.emplace_back(p[a].first + w * (p[b].first - p[a].first),
                                              p[a].second + w * (p[b].second - p[a].second));
                        }
                    }
                    for (std::size_t h = 0; h + 1 < hits.size(); h += 2)
                        d += "M" + num(f.px(hits[h].first)) + " " + num(f.py(hits[h].second)) + " L" +
                             num(f.px(hits[h + 1].first)) + " " + num(f.py(hits[h + 1].second)) + " ";
                }
            if (!d.empty()) d.pop_back();
            s += "<path class=\"contour\" d=\"" + d + "\"/>\n";
        }
        s += "</g>\n";
    }
    if (samples.empty()) {
        s += no_samples_note();
    } else {
        s += "<g class=\"sample\" fill=\"#1f77b4\" fill-opacity=\"0.5\">\n";
        for (const auto& z : samples) s += "<circle cx=\"" + num(f.px(z[0])) + "\" cy=\"" + num(f.py(z[1])) + "\" r=\"1.5\"/>\n";
        s += "</g>\n";
    }
    return s + "</svg>\n";
}

std::string render_bar_chart(const std::vector<Bar>& bars, const std::string& title) {
    const Frame f{0.0, static_cast<double>(std::max<std::size_t>(bars.size(), 1)), 0.0, 1.0};
    std::string s = header(title) + axes(Frame{0.0, 1.0, 0.0, 1.0}, false);
    if (bars.empty()) return s + no_samples_note() + "</svg>\n";
    const double slot = (kWidth - kLeft - kRight) / static_cast<double>(bars.size());
    for (std::size_t i = 0; i < bars.size(); ++i) {
        const double v = std::clamp(bars[i].value, 0.0, 1.0);
        const double x = kLeft + slot * (static_cast<double>(i) + 0.15);
        s += "<rect class=\"bar\" x=\"" + num(x) + "\" y=\"" + num(f.py(v)) + "\" width=\"" + num(0.7 * slot) +
             "\" height=\"" + num(f.py(0) - f.py(v)) + "\" fill=\"" + kPalette[i % kPalette.size()] + "\"/>\n";
        s += "<text x=\"" + num(x + 0.35 * slot) + "\" y=\"" + num(f.py(v) - 4) + "\" text-anchor=\"middle\">" +
             num(bars[i].value) + "</text>\n";
        s += "<text x=\"" + num(x + 0.35 * slot) + "\" y=\"" + num(kHeight - 8) + "\" text-anchor=\"middle\">" +
             escape(bars[i].label) + "</text>\n";
    }
    return s + "</svg>\n";
}

} // namespace dnpg

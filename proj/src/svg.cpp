#include "silab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace silab::svg {

namespace {

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void expand(double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    bool ok() const { return lo <= hi; }
};

std::string fmt(double v) {
    char buf[40];
    if (v == 0.0) return "0";
    const double a = std::abs(v);
    if (a >= 1e4 || a < 1e-3)
        std::snprintf(buf, sizeof buf, "%.2e", v);
    else
        std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// 1-2-5 tick positions covering [lo, hi].
std::vector<double> linear_ticks(double lo, double hi) {
    std::vector<double> ticks;
    if (!(hi > lo)) return {lo};
    const double span = hi - lo;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (raw <= m * mag) {
            step = m * mag;
            break;
        }
    }
    const double first = std::ceil(lo / step) * step;
    for (double t = first; t <= hi + 0.5 * step; t += step) ticks.push_back(t);
    return ticks;
}

std::vector<double> log_ticks(double lo, double hi) {
    std::vector<double> ticks;
    const int e0 = static_cast<int>(std::floor(std::log10(lo)));
    const int e1 = static_cast<int>(std::ceil(std::log10(hi)));
    for (int e = e0; e <= e1; ++e) {
        const double t = std::pow(10.0, e);
        if (t >= lo / 1.0001 && t <= hi * 1.0001) ticks.push_back(t);
    }
    if (ticks.empty()) ticks = {lo, hi};
    return ticks;
}

const char* kPalette[] = {"#1f6fb4", "#d1495b", "#2e8b57", "#8860b8", "#c47f1d", "#3a3a3a"};

} // namespace

std::string render(const std::vector<Panel>& panels, int panel_width, int panel_height) {
    const int cols = panels.size() > 1 ? 2 : 1;
    const int rows = static_cast<int>((panels.size() + cols - 1) / cols);
    const int width = cols * panel_width;
    const int height = rows * panel_height;
    const double ml = 64, mr = 14, mt = 30, mb = 40;  // in-panel margins

    std::string out;
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
                  "viewBox=\"0 0 %d %d\" font-family=\"sans-serif\" font-size=\"11\">\n",
                  width, height, width, height);
    out += buf;
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    for (std::size_t pi = 0; pi < panels.size(); ++pi) {
        const auto& panel = panels[pi];
        const double ox = static_cast<double>(pi % cols) * panel_width;
        const double oy = static_cast<double>(pi / cols) * panel_height;
        const double plot_w = panel_width - ml - mr;
        const double plot_h = panel_height - mt - mb;

        Range rx, ry;
        for (const auto& s : panel.series) {
            for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
                const double y = s.y[i];
                const double x = s.x[i];
                if (!std::isfinite(x) || !std::isfinite(y)) continue;
                if (panel.logy && !(y > 0.0)) continue;
                if (panel.logx && !(x > 0.0)) continue;
                rx.expand(x);
                ry.expand(y);
            }
        }
        if (!rx.ok() || !ry.ok()) {
            rx = {0, 1};
            ry = {0, 1};
        }
        if (rx.lo == rx.hi) {
            rx.lo -= 0.5;
            rx.hi += 0.5;
        }
        if (ry.lo == ry.hi) {
            const double pad = ry.lo == 0.0 ? 1.0 : std::abs(ry.lo) * 0.1;
            ry.lo -= pad;
            ry.hi += pad;
        }
        if (!panel.logy) {
            const double pad = (ry.hi - ry.lo) * 0.05;
            ry.lo -= pad;
            ry.hi += pad;
        }

        auto tx = [&](double v) {
            const double u = panel.logx ? (std::log10(v) - std::log10(rx.lo)) /
                                              (std::log10(rx.hi) - std::log10(rx.lo))
                                        : (v - rx.lo) / (rx.hi - rx.lo);
            return ox + ml + u * plot_w;
        };
        auto ty = [&](double v) {
            const double u = panel.logy ? (std::log10(v) - std::log10(ry.lo)) /
                                              (std::log10(ry.hi) - std::log10(ry.lo))
                                        : (v - ry.lo) / (ry.hi - ry.lo);
            return oy + mt + (1.0 - u) * plot_h;
        };

        // Shaded bands first.
        for (const auto& b : panel.bands) {
            const double x0 = std::max(rx.lo, std::min(b.x0, rx.hi));
            const double x1 = std::max(rx.lo, std::min(b.x1, rx.hi));
            if (!(x1 > x0)) continue;
            std::snprintf(buf, sizeof buf,
                          "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" "
                          "fill=\"%s\" fill-opacity=\"0.45\"/>\n",
                          tx(x0), oy + mt, tx(x1) - tx(x0), plot_h, b.color.c_str());
            out += buf;
            if (!b.label.empty()) {
                std::snprintf(buf, sizeof buf,
                              "<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"middle\" "
                              "fill=\"#555\">%s</text>\n",
                              0.5 * (tx(x0) + tx(x1)), oy + mt + 14, b.label.c_str());
                out += buf;
            }
        }

        // Frame and ticks.
        std::snprintf(buf, sizeof buf,
                      "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" fill=\"none\" "
                      "stroke=\"#888\"/>\n",
                      ox + ml, oy + mt, plot_w, plot_h);
        out += buf;
        const auto xticks = panel.logx ? log_ticks(rx.lo, rx.hi) : linear_ticks(rx.lo, rx.hi);
        for (double t : xticks) {
            const double px = tx(t);
            std::snprintf(buf, sizeof buf,
                          "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
                          "stroke=\"#ccc\"/>\n",
                          px, oy + mt, px, oy + mt + plot_h);
            out += buf;
            std::snprintf(buf, sizeof buf,
                          "<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"middle\">%s</text>\n", px,
                          oy + mt + plot_h + 14, fmt(t).c_str());
            out += buf;
        }
        const auto yticks = panel.logy ? log_ticks(ry.lo, ry.hi) : linear_ticks(ry.lo, ry.hi);
        for (double t : yticks) {
            const double py = ty(t);
            std::snprintf(buf, sizeof buf,
                          "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
                          "stroke=\"#ccc\"/>\n",
                          ox + ml, py, ox + ml + plot_w, py);
            out += buf;
            std::snprintf(buf, sizeof buf,
                          "<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"end\">%s</text>\n",
                          ox + ml - 4, py + 4, fmt(t).c_str());
            out += buf;
        }

        // Series polylines (split at non-plottable points).
        for (std::size_t si = 0; si < panel.series.size(); ++si) {
            const auto& s = panel.series[si];
            const std::string color =
                s.color.empty() ? kPalette[si % 6] : s.color;
            std::string points;
            auto flush = [&] {
                if (points.empty()) return;
                out += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.1\"";
                if (s.dashed) out += " stroke-dasharray=\"5,4\"";
                out += " points=\"" + points + "\"/>\n";
                points.clear();
            };
            for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
                const double x = s.x[i], y = s.y[i];
                const bool drop = !std::isfinite(x) || !std::isfinite(y) ||
                                  (panel.logy && !(y > 0.0)) || (panel.logx && !(x > 0.0));
                if (drop) {
                    flush();
                    continue;
                }
                std::snprintf(buf, sizeof buf, "%.2f,%.2f ", tx(x), ty(y));
                points += buf;
            }
            flush();
            // Legend entry.
            if (!s.name.empty()) {
                const double lx = ox + ml + 8;
                const double lyy = oy + mt + 16 + 14.0 * static_cast<double>(si);
                std::snprintf(buf, sizeof buf,
                              "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
                              "stroke=\"%s\" stroke-width=\"2\"%s/>\n",
                              lx, lyy - 4, lx + 18, lyy - 4, color.c_str(),
                              s.dashed ? " stroke-dasharray=\"5,4\"" : "");
                out += buf;
                std::snprintf(buf, sizeof buf, "<text x=\"%.2f\" y=\"%.2f\">%s</text>\n", lx + 22,
                              lyy, s.name.c_str());
                out += buf;
            }
        }

        // Labels.
        std::snprintf(buf, sizeof buf,
                      "<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"middle\" font-size=\"13\">%s"
                      "</text>\n",
                      ox + ml + plot_w / 2, oy + 18, panel.title.c_str());
        out += buf;
        std::snprintf(buf, sizeof buf,
                      "<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"middle\">%s</text>\n",
                      ox + ml + plot_w / 2, oy + mt + plot_h + 30, panel.xlabel.c_str());
        out += buf;
        std::snprintf(buf, sizeof buf,
                      "<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"middle\" "
                      "transform=\"rotate(-90 %.2f %.2f)\">%s</text>\n",
                      ox + 14, oy + mt + plot_h / 2, ox + 14, oy + mt + plot_h / 2,
                      panel.ylabel.c_str());
        out += buf;
    }
    out += "</svg>\n";
    return out;
}

} // namespace silab::svg

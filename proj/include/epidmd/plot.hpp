#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "epidmd/dmd.hpp"
#include "epidmd/errors.hpp"
#include "epidmd/snapshot.hpp"

namespace epidmd {

// Deterministic SVG emission: no timestamps, fixed float formatting, node
// order as given. Byte-identical output for identical inputs.
namespace svg {

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

inline const char* palette(std::size_t i) {
    static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                   "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    return colors[i % 10];
}

struct Canvas {
    std::ostringstream out;
    double width, height;

    Canvas(double w, double h) : width(w), height(h) {
        out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(w) << "\" height=\""
            << num(h) << "\" viewBox=\"0 0 " << num(w) << " " << num(h) << "\">\n";
        out << "<rect width=\"" << num(w) << "\" height=\"" << num(h) << "\" fill=\"white\"/>\n";
    }

    void line(double x1, double y1, double x2, double y2, const std::string& stroke,
              double width_px = 1.0) {
        out << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2)
            << "\" y2=\"" << num(y2) << "\" stroke=\"" << stroke << "\" stroke-width=\""
            << num(width_px) << "\"/>\n";
    }

    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke) {
        out << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1.2\" points=\"";
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (i) out << " ";
            out << num(pts[i].first) << "," << num(pts[i].second);
        }
        out << "\"/>\n";
    }

    void circle(double cx, double cy, double r, const std::string& stroke,
                const std::string& fill = "none") {
        out << "<circle cx=\"" << num(cx) << "\" cy=\"" << num(cy) << "\" r=\"" << num(r)
            << "\" stroke=\"" << stroke << "\" fill=\"" << fill << "\"/>\n";
    }

    void rect(double x, double y, double w, double h, const std::string& fill) {
        out << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w)
            << "\" height=\"" << num(h) << "\" fill=\"" << fill << "\"/>\n";
    }

    void text(double x, double y, const std::string& s, double size = 11.0) {
        out << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-family=\"sans-serif\" "
            << "font-size=\"" << num(size) << "\" fill=\"#333\">" << s << "</text>\n";
    }

    std::string finish() {
        out << "</svg>\n";
        return out.str();
    }
};

} // namespace svg

inline std::string plot_series_svg(const SnapshotSeries& series) {
    const double w = 800, h = 460, ml = 60, mr = 20, mt = 30, mb = 40;
    svg::Canvas canvas(w, h);
    const long t = series.values.rows(), d = series.values.cols();
    double lo = series.values.minCoeff(), hi = series.values.maxCoeff();
    if (hi == lo) hi = lo + 1.0;
    auto sx = [&](double i) { return ml + (w - ml - mr) * (t > 1 ? i / double(t - 1) : 0.5); };
    auto sy = [&](double v) { return h - mb - (h - mt - mb) * (v - lo) / (hi - lo); };
    canvas.line(ml, h - mb, w - mr, h - mb, "#333");
    canvas.line(ml, mt, ml, h - mb, "#333");
    canvas.text(ml, mt - 10, "per-node series");
    canvas.text(w - mr - 60, h - 8, "time step");
    canvas.text(8, mt + 4, svg::num(hi));
    canvas.text(8, h - mb, svg::num(lo));
    for (long c = 0; c < d; ++c) {
        std::vector<std::pair<double, double>> pts;
        pts.reserve(t);
        for (long i = 0; i < t; ++i) pts.emplace_back(sx(double(i)), sy(series.values(i, c)));
        canvas.polyline(pts, svg::palette(c));
    }
    return canvas.finish();
}

// Eigenvalues in the complex plane with the unit circle for reference.
inline std::string plot_spectrum_svg(const DmdModel& model) {
    const double w = 460, h = 460, cx = w / 2, cy = h / 2;
    double extent = 1.0;
    for (int i = 0; i < model.rank; ++i) extent = std::max(extent, std::abs(model.eigenvalues(i)));
    const double scale = (w / 2 - 40) / extent;
    svg::Canvas canvas(w, h);
    canvas.line(20, cy, w - 20, cy, "#ccc");
    canvas.line(cx, 20, cx, h - 20, "#ccc");
    canvas.circle(cx, cy, scale, "#999");
    canvas.text(20, 16, "eigenvalue spectrum (unit circle shown)");
    for (int i = 0; i < model.rank; ++i) {
        const double x = cx + model.eigenvalues(i).real() * scale;
        const double y = cy - model.eigenvalues(i).imag() * scale;
        canvas.circle(x, y, 4, svg::palette(i), svg::palette(i));
    }
    return canvas.finish();
}

// Magnitude bars per node for the leading modes, one panel per mode.
inline std::string plot_modes_svg(const DmdModel& model, int max_modes = 6) {
    const int n_panels = std::min(max_modes, model.rank);
    const double panel_h = 120, w = 800, h = n_panels * panel_h + 20;
    const double ml = 60, mr = 20;
    svg::Canvas canvas(w, h);
    const long d = model.modes.rows();
    for (int p = 0; p < n_panels; ++p) {
        const double top = 20 + p * panel_h, bottom = top + panel_h - 30;
        Eigen::VectorXd mag = model.modes.col(p).cwiseAbs();
        double peak = mag.maxCoeff();
        if (peak == 0.0) peak = 1.0;
        canvas.text(ml, top + 10,
                    "mode " + std::to_string(p) + "  |lambda|=" +
                        svg::num(std::abs(model.eigenvalues(p))));
        canvas.line(ml, bottom, w - mr, bottom, "#333");
        const double bw = (w - ml - mr) / double(d);
        for (long c = 0; c < d; ++c) {
            const double bh = (bottom - top - 16) * mag(c) / peak;
            canvas.rect(ml + c * bw + bw * 0.1, bottom - bh, bw * 0.8, bh, svg::palette(p));
        }
    }
    return canvas.finish();
}

inline void write_text_file(const std::string& content, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open " + path.string() + " for writing");
    out << content;
}

} // namespace epidmd

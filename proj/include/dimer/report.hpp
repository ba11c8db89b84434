#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dimer/errors.hpp"

namespace dimer {

// All numbers in CSV/SVG output go through this: 12 significant digits,
// shortest form. Re-parsing the text recovers the value to ~1e-11 relative.
inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

// Output files are written to a temporary sibling and renamed into place so a
// crash mid-write never leaves a truncated artifact behind.
inline void write_text_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            fail("IoFailure", "cannot open '" + tmp + "' for writing");
        out << content;
        out.flush();
        if (!out)
            fail("IoFailure", "write to '" + tmp + "' failed");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        fail("IoFailure", "cannot rename '" + tmp + "' to '" + path + "'");
    }
}

struct ProfileRow {
    long long site = 0;
    double mass = 0.0;
    double temperature = 0.0;
    std::optional<double> stderr_temp; // empty for deterministic engines
};

struct CurrentRow {
    long long bond = 0;
    double current = 0.0;
    std::optional<double> stderr_current;
};

struct SweepRow {
    double param = 0.0;
    double temp_odd = 0.0;
    double temp_even = 0.0;
    double current = 0.0;
    std::optional<double> acoustic_current; // empty when the engine has no branch split
    std::optional<double> optical_current;
};

inline std::string render_profile_csv(const std::vector<ProfileRow>& rows) {
    std::string out = "site,mass,temperature,stderr\n";
    for (const auto& r : rows) {
        out += std::to_string(r.site);
        out += ',';
        out += format_number(r.mass);
        out += ',';
        out += format_number(r.temperature);
        out += ',';
        if (r.stderr_temp) out += format_number(*r.stderr_temp);
        out += '\n';
    }
    return out;
}

inline std::string render_current_csv(const std::vector<CurrentRow>& rows) {
    std::string out = "bond,current,stderr\n";
    for (const auto& r : rows) {
        out += std::to_string(r.bond);
        out += ',';
        out += format_number(r.current);
        out += ',';
        if (r.stderr_current) out += format_number(*r.stderr_current);
        out += '\n';
    }
    return out;
}

inline std::string render_sweep_csv(const std::vector<SweepRow>& rows) {
    std::string out = "param,T_odd,T_even,J,acoustic_J,optical_J\n";
    for (const auto& r : rows) {
        out += format_number(r.param);
        out += ',';
        out += format_number(r.temp_odd);
        out += ',';
        out += format_number(r.temp_even);
        out += ',';
        out += format_number(r.current);
        out += ',';
        if (r.acoustic_current) out += format_number(*r.acoustic_current);
        out += ',';
        if (r.optical_current) out += format_number(*r.optical_current);
        out += '\n';
    }
    return out;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows; // raw cells; empty string = missing
};

// Minimal reader for our own output (no quoting: fields are numbers or names).
inline CsvTable parse_csv(const std::string& text) {
    CsvTable table;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() && in.eof()) break;
        std::vector<std::string> cells;
        size_t start = 0;
        while (true) {
            size_t comma = line.find(',', start);
            if (comma == std::string::npos) {
                cells.push_back(line.substr(start));
                break;
            }
            cells.push_back(line.substr(start, comma - start));
            start = comma + 1;
        }
        if (first) {
            table.header = std::move(cells);
            first = false;
        } else {
            table.rows.push_back(std::move(cells));
        }
    }
    return table;
}

// ---------------------------------------------------------------------------
// Self-contained SVG line plots. No external process, no stylesheet: a single
// file with axes, ticks, grid, legend, and one polyline per series.

struct PlotSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

struct PlotLayout {
    int width = 860;
    int height = 540;
    double margin_left = 72;
    double margin_right = 22;
    double margin_top = 46;
    double margin_bottom = 58;
    bool draw_points = true;
};

namespace plot_detail {

inline std::string fmt_coord(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

inline std::string fmt_tick(double v) {
    if (std::abs(v) < 1e-300) v = 0.0;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// Round the raw interval to 1/2/5 times a power of ten.
inline double nice_step(double span, int target_ticks) {
    if (!(span > 0.0)) return 1.0;
    const double raw = span / std::max(1, target_ticks);
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double frac = raw / mag;
    double step;
    if (frac <= 1.0) step = 1.0;
    else if (frac <= 2.0) step = 2.0;
    else if (frac <= 5.0) step = 5.0;
    else step = 10.0;
    return step * mag;
}

inline std::vector<double> ticks(double lo, double hi, int target) {
    const double step = nice_step(hi - lo, target);
    std::vector<double> out;
    double t = std::ceil(lo / step - 1e-9) * step;
    for (; t <= hi + 1e-9 * std::max(1.0, std::abs(hi)); t += step)
        out.push_back(t);
    return out;
}

inline std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

} // namespace plot_detail

inline std::string render_svg_plot(const std::string& title,
                                   const std::string& xlabel,
                                   const std::string& ylabel,
                                   const std::vector<PlotSeries>& series,
                                   PlotLayout layout = {}) {
    using plot_detail::escape_xml;
    using plot_detail::fmt_coord;
    using plot_detail::fmt_tick;

    static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
    constexpr int kNumColors = 8;

    double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
    bool have = false;
    size_t total_points = 0;
    for (const auto& s : series) {
        for (size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            if (!have) {
                xmin = xmax = s.x[i];
                ymin = ymax = s.y[i];
                have = true;
            } else {
                xmin = std::min(xmin, s.x[i]);
                xmax = std::max(xmax, s.x[i]);
                ymin = std::min(ymin, s.y[i]);
                ymax = std::max(ymax, s.y[i]);
            }
            ++total_points;
        }
    }
    if (!have) { xmin = ymin = 0.0; xmax = ymax = 1.0; }
    if (xmax - xmin < 1e-12 * std::max(1.0, std::abs(xmin))) { xmin -= 0.5; xmax += 0.5; }
    if (ymax - ymin < 1e-12 * std::max(1.0, std::abs(ymin))) { ymin -= 0.5; ymax += 0.5; }
    const double xpad = 0.04 * (xmax - xmin);
    const double ypad = 0.06 * (ymax - ymin);
    xmin -= xpad; xmax += xpad;
    ymin -= ypad; ymax += ypad;

    const double px0 = layout.margin_left;
    const double px1 = layout.width - layout.margin_right;
    const double py0 = layout.height - layout.margin_bottom;
    const double py1 = layout.margin_top;
    auto sx = [&](double x) { return px0 + (x - xmin) / (xmax - xmin) * (px1 - px0); };
    auto sy = [&](double y) { return py0 + (y - ymin) / (ymax - ymin) * (py1 - py0); };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(layout.width) +
           "\" height=\"" + std::to_string(layout.height) + "\" viewBox=\"0 0 " +
           std::to_string(layout.width) + " " + std::to_string(layout.height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    // Grid and ticks.
    const auto xticks = plot_detail::ticks(xmin, xmax, 6);
    const auto yticks = plot_detail::ticks(ymin, ymax, 6);
    svg += "<g stroke=\"#dddddd\" stroke-width=\"1\">\n";
    for (double t : xticks)
        svg += "<line x1=\"" + fmt_coord(sx(t)) + "\" y1=\"" + fmt_coord(py0) +
               "\" x2=\"" + fmt_coord(sx(t)) + "\" y2=\"" + fmt_coord(py1) + "\"/>\n";
    for (double t : yticks)
        svg += "<line x1=\"" + fmt_coord(px0) + "\" y1=\"" + fmt_coord(sy(t)) +
               "\" x2=\"" + fmt_coord(px1) + "\" y2=\"" + fmt_coord(sy(t)) + "\"/>\n";
    svg += "</g>\n";

    // Axes.
    svg += "<g stroke=\"#333333\" stroke-width=\"1.5\" fill=\"none\">\n";
    svg += "<line x1=\"" + fmt_coord(px0) + "\" y1=\"" + fmt_coord(py0) + "\" x2=\"" +
           fmt_coord(px1) + "\" y2=\"" + fmt_coord(py0) + "\"/>\n";
    svg += "<line x1=\"" + fmt_coord(px0) + "\" y1=\"" + fmt_coord(py0) + "\" x2=\"" +
           fmt_coord(px0) + "\" y2=\"" + fmt_coord(py1) + "\"/>\n";
    svg += "</g>\n";

    svg += "<g font-family=\"sans-serif\" font-size=\"12\" fill=\"#333333\">\n";
    for (double t : xticks)
        svg += "<text x=\"" + fmt_coord(sx(t)) + "\" y=\"" + fmt_coord(py0 + 18) +
               "\" text-anchor=\"middle\">" + fmt_tick(t) + "</text>\n";
    for (double t : yticks)
        svg += "<text x=\"" + fmt_coord(px0 - 8) + "\" y=\"" + fmt_coord(sy(t) + 4) +
               "\" text-anchor=\"end\">" + fmt_tick(t) + "</text>\n";
    svg += "</g>\n";

    // Labels and title.
    svg += "<text x=\"" + fmt_coord(0.5 * (px0 + px1)) + "\" y=\"" +
           fmt_coord(layout.height - 14) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" +
           escape_xml(xlabel) + "</text>\n";
    svg += "<text x=\"20\" y=\"" + fmt_coord(0.5 * (py0 + py1)) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\" transform=\"rotate(-90 20 " +
           fmt_coord(0.5 * (py0 + py1)) + ")\">" + escape_xml(ylabel) + "</text>\n";
    svg += "<text x=\"" + fmt_coord(0.5 * (px0 + px1)) + "\" y=\"26\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"16\">" + escape_xml(title) + "</text>\n";

    // Series.
    const bool points = layout.draw_points && total_points <= 400;
    for (size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* color = kColors[si % kNumColors];
        std::string pts;
        for (size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            pts += fmt_coord(sx(s.x[i]));
            pts += ',';
            pts += fmt_coord(sy(s.y[i]));
            pts += ' ';
        }
        svg += "<polyline fill=\"none\" stroke=\"";
        svg += color;
        svg += "\" stroke-width=\"1.8\" points=\"" + pts + "\"/>\n";
        if (points) {
            svg += "<g fill=\"";
            svg += color;
            svg += "\">\n";
            for (size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
                if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
                svg += "<circle cx=\"" + fmt_coord(sx(s.x[i])) + "\" cy=\"" +
                       fmt_coord(sy(s.y[i])) + "\" r=\"2.6\"/>\n";
            }
            svg += "</g>\n";
        }
    }

    // Legend, top right inside the plot area.
    double ly = py1 + 14;
    for (size_t si = 0; si < series.size(); ++si) {
        const char* color = kColors[si % kNumColors];
        const double lx = px1 - 150;
        svg += "<line x1=\"" + fmt_coord(lx) + "\" y1=\"" + fmt_coord(ly - 4) + "\" x2=\"" +
               fmt_coord(lx + 26) + "\" y2=\"" + fmt_coord(ly - 4) + "\" stroke=\"";
        svg += color;
        svg += "\" stroke-width=\"2.2\"/>\n";
        svg += "<text x=\"" + fmt_coord(lx + 32) + "\" y=\"" + fmt_coord(ly) +
               "\" font-family=\"sans-serif\" font-size=\"13\">" + escape_xml(series[si].name) +
               "</text>\n";
        ly += 18;
    }

    svg += "</svg>\n";
    return svg;
}

} // namespace dimer

#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dps/grid.hpp"
#include "dps/spectrum.hpp"

namespace dps {

// Shortest round-trip decimal form; infinities use the "inf" sentinel.
inline std::string fmt_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

// JSON value for a double: plain number, or the string sentinel for non-finite.
inline nlohmann::json num_json(double x) {
    if (std::isfinite(x)) return x;
    return fmt_double(x);
}

inline double num_from_json(const nlohmann::json& j) {
    if (j.is_string()) {
        const std::string& s = j.get_ref<const std::string&>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
        throw std::runtime_error("unrecognized numeric sentinel: " + s);
    }
    return j.get<double>();
}

// Write via a temp file in the same directory, then rename into place.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path dir = path.parent_path();
    if (!dir.empty()) std::filesystem::create_directories(dir);
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
    std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return s;
}

// CSV with node coordinates and nodal values: x[,y],value.
inline std::string field_csv(const Field& f) {
    std::string out = f.grid.dim == 1 ? "x,value\n" : "x,y,value\n";
    for (std::size_t k = 0; k < f.grid.node_count(); ++k) {
        auto pos = f.grid.node_pos(k);
        out += fmt_double(pos[0]);
        if (f.grid.dim == 2) {
            out += ',';
            out += fmt_double(pos[1]);
        }
        out += ',';
        out += fmt_double(f.v[k]);
        out += '\n';
    }
    return out;
}

inline std::string curve_csv(const CurveTrace& trace) {
    std::string out = "s,lambda_star,alpha,bracket_width,certificate,probes,failed\n";
    for (const CurvePoint& p : trace.points) {
        out += fmt_double(p.s);
        out += ',';
        out += fmt_double(p.lambda_star);
        out += ',';
        out += fmt_double(p.lambda_star + p.s);
        out += ',';
        out += fmt_double(p.bracket_width);
        out += ',';
        out += p.certificate;
        out += ',';
        out += std::to_string(p.probes);
        out += ',';
        out += p.failed ? "1" : "0";
        out += '\n';
    }
    return out;
}

inline std::string map_csv(const RegionMap& map) {
    std::string out = "alpha,beta,theory_verdict,theory_source,numeric_verdict,energy,boundary_band,compared,agree\n";
    for (const MapCell& c : map.cells) {
        const char* numeric = "skipped";
        if (c.numeric_found == 1) numeric = "exists";
        else if (c.numeric_found == 0) numeric = "not-found";
        else if (c.numeric_found == -1) numeric = "unknown";
        out += fmt_double(c.alpha);
        out += ',';
        out += fmt_double(c.beta);
        out += ',';
        out += to_string(c.theory.verdict);
        out += ',';
        out += c.theory.source;
        out += ',';
        out += numeric;
        out += ',';
        out += c.numeric_found == 1 ? fmt_double(c.energy) : "";
        out += ',';
        out += c.boundary_band ? "1" : "0";
        out += ',';
        out += c.compared ? "1" : "0";
        out += ',';
        out += c.agree ? "1" : "0";
        out += '\n';
    }
    return out;
}

namespace detail {

struct SvgFrame {
    double x0, x1, y0, y1; // world window
    double w = 720.0, h = 560.0, margin = 60.0;

    double sx(double x) const { return margin + (x - x0) / (x1 - x0) * (w - 2 * margin); }
    double sy(double y) const { return h - margin - (y - y0) / (y1 - y0) * (h - 2 * margin); }
};

inline void svg_line(std::string& s, const SvgFrame& f, double xa, double ya, double xb, double yb,
                     const char* style) {
    s += "<line x1=\"" + fmt_double(f.sx(xa)) + "\" y1=\"" + fmt_double(f.sy(ya)) + "\" x2=\"" +
         fmt_double(f.sx(xb)) + "\" y2=\"" + fmt_double(f.sy(yb)) + "\" " + style + "/>\n";
}

inline void svg_text(std::string& s, double px, double py, const std::string& text, const char* extra = "") {
    s += "<text x=\"" + fmt_double(px) + "\" y=\"" + fmt_double(py) + "\" font-size=\"12\" font-family=\"monospace\" " +
         extra + ">" + text + "</text>\n";
}

// Clip an alpha - beta = s diagonal against the frame window and draw it.
inline void svg_diagonal(std::string& s, const SvgFrame& f, double shift, const char* style) {
    double xa = std::max(f.x0, f.y0 + shift);
    double xb = std::min(f.x1, f.y1 + shift);
    if (xa >= xb) return;
    svg_line(s, f, xa, xa - shift, xb, xb - shift, style);
}

} // namespace detail

// Curve in the (alpha, beta) plane with the threshold reference lines.
inline std::string curve_svg(const CurveTrace& trace, const SpectrumConstants& c) {
    double lp = c.lambda1_ap, lq = c.lambda1_q;
    double xmin = lp, xmax = lp, ymin = lq, ymax = lq;
    for (const CurvePoint& p : trace.points) {
        if (p.failed) continue;
        xmin = std::min(xmin, p.lambda_star + p.s);
        xmax = std::max(xmax, p.lambda_star + p.s);
        ymin = std::min(ymin, p.lambda_star);
        ymax = std::max(ymax, p.lambda_star);
    }
    if (std::isfinite(c.s_tilde_plus)) xmax = std::max(xmax, c.s_tilde_plus);
    double padx = 0.1 * (xmax - xmin + 1.0), pady = 0.1 * (ymax - ymin + 1.0);
    detail::SvgFrame f{xmin - padx, xmax + padx, ymin - pady, ymax + pady};

    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt_double(f.w) + "\" height=\"" +
                    fmt_double(f.h) + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    detail::svg_line(s, f, f.x0, lq, f.x1, lq, "stroke=\"#888\" stroke-dasharray=\"6 3\"");
    detail::svg_line(s, f, lp, f.y0, lp, f.y1, "stroke=\"#888\" stroke-dasharray=\"6 3\"");
    if (std::isfinite(c.s_tilde_plus))
        detail::svg_line(s, f, c.s_tilde_plus, f.y0, c.s_tilde_plus, f.y1, "stroke=\"#bbb\" stroke-dasharray=\"2 4\"");
    if (std::isfinite(c.s_star_minus)) detail::svg_diagonal(s, f, c.s_star_minus, "stroke=\"#ccc\" stroke-dasharray=\"1 4\"");
    detail::svg_diagonal(s, f, c.s_star, "stroke=\"#ccc\" stroke-dasharray=\"1 4\"");
    if (std::isfinite(c.s_star_plus)) detail::svg_diagonal(s, f, c.s_star_plus, "stroke=\"#ccc\" stroke-dasharray=\"1 4\"");

    std::string poly = "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" points=\"";
    for (const CurvePoint& p : trace.points) {
        if (p.failed) continue;
        poly += fmt_double(f.sx(p.lambda_star + p.s)) + "," + fmt_double(f.sy(p.lambda_star)) + " ";
    }
    poly += "\"/>\n";
    s += poly;
    detail::svg_text(s, f.sx(lp) + 4, f.h - 18, "alpha = first weighted p-eigenvalue");
    detail::svg_text(s, 8, f.sy(lq) - 4, "beta = first q-eigenvalue");
    detail::svg_text(s, f.w - f.margin - 200, f.margin - 32, "critical curve (alpha, beta) = (l*(s)+s, l*(s))");
    s += "</svg>\n";
    return s;
}

// Region map: existence cells white, non-existence dotted, open cells gray.
inline std::string map_svg(const RegionMap& map) {
    if (map.alpha_values.empty() || map.beta_values.empty()) return "<svg xmlns=\"http://www.w3.org/2000/svg\"/>\n";
    double da = map.alpha_values.size() > 1 ? map.alpha_values[1] - map.alpha_values[0] : 1.0;
    double db = map.beta_values.size() > 1 ? map.beta_values[1] - map.beta_values[0] : 1.0;
    detail::SvgFrame f{map.alpha_values.front() - da, map.alpha_values.back() + da, map.beta_values.front() - db,
                       map.beta_values.back() + db};
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt_double(f.w) + "\" height=\"" +
                    fmt_double(f.h) + "\">\n";
    s += "<defs><pattern id=\"dots\" width=\"6\" height=\"6\" patternUnits=\"userSpaceOnUse\">"
         "<rect width=\"6\" height=\"6\" fill=\"white\"/><circle cx=\"3\" cy=\"3\" r=\"1\" fill=\"#333\"/>"
         "</pattern></defs>\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    for (const MapCell& c : map.cells) {
        const char* fill = "url(#dots)"; // non-existence
        if (verdict_claims_existence(c.theory.verdict)) fill = "white";
        else if (c.theory.verdict == RegionVerdict::UnknownTheory) fill = "#e0e0e0";
        double px = f.sx(c.alpha - 0.5 * da), py = f.sy(c.beta + 0.5 * db);
        double pw = f.sx(c.alpha + 0.5 * da) - px, ph = f.sy(c.beta - 0.5 * db) - py;
        const char* stroke = c.compared && !c.agree ? "#cc0000" : "#aaaaaa";
        s += "<rect x=\"" + fmt_double(px) + "\" y=\"" + fmt_double(py) + "\" width=\"" + fmt_double(pw) +
             "\" height=\"" + fmt_double(ph) + "\" fill=\"" + fill + "\" stroke=\"" + stroke +
             "\" stroke-width=\"0.6\"/>\n";
        if (c.numeric_found == 1) {
            s += "<circle cx=\"" + fmt_double(f.sx(c.alpha)) + "\" cy=\"" + fmt_double(f.sy(c.beta)) +
                 "\" r=\"2\" fill=\"" + (c.energy < 0 ? std::string("#1f77b4") : std::string("#2ca02c")) + "\"/>\n";
        }
    }
    detail::svg_line(s, f, map.consts.lambda1_ap, f.y0, map.consts.lambda1_ap, f.y1,
                     "stroke=\"#555\" stroke-dasharray=\"6 3\"");
    detail::svg_line(s, f, f.x0, map.consts.lambda1_q, f.x1, map.consts.lambda1_q,
                     "stroke=\"#555\" stroke-dasharray=\"6 3\"");
    double ly = 16;
    detail::svg_text(s, 8, ly, "white: existence proven; dotted: non-existence proven; gray: open");
    detail::svg_text(s, 8, ly + 14, "dot marks numeric solution (blue: negative energy, green: positive)");
    s += "</svg>\n";
    return s;
}

} // namespace dps

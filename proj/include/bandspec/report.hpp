#pragma once

/// @file
/// CSV tables, the two SVG figures (residual decay, enclosure band), config
/// hashing and the on-disk results cache.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "bandspec/asymptotics.hpp"
#include "bandspec/enclosure.hpp"
#include "bandspec/errors.hpp"

namespace bandspec {

/// Decimal with 17 significant digits (round-trips binary64).
inline std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string format_number(Index x) { return std::to_string(x); }
inline std::string format_flag(bool b) { return b ? "yes" : "no"; }

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> row) {
        if (row.size() != columns.size()) {
            throw PreconditionError("CsvTable::add_row: " + std::to_string(row.size()) +
                                    " cells for " + std::to_string(columns.size()) + " columns");
        }
        rows.push_back(std::move(row));
    }
};

inline std::string to_csv(const CsvTable& table) {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += cells[i];
        }
        out += '\n';
    };
    line(table.columns);
    for (const auto& row : table.rows) line(row);
    return out;
}

/// Writes `content` to `path` through a temporary file and a rename.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
        out << content;
        if (!out.flush()) throw Error("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, path, ec);
    if (ec) throw Error("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read '" + path.string() + "'");
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

inline void emit_csv(const CsvTable& table, const std::filesystem::path& path) {
    write_file_atomic(path, to_csv(table));
}

inline std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
        throw Error("sha256: EVP_Digest failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < length; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

/// Files produced by one command, keyed by file name.
using ArtifactFiles = std::map<std::string, std::string>;

/// Results cache under <out>/.cache/<hash>/. A hit returns the stored files;
/// stores are skipped silently when the directory cannot be written.
class ResultCache {
public:
    explicit ResultCache(std::filesystem::path root) : root_(std::move(root)) {}

    std::optional<ArtifactFiles> load(const std::string& key) const {
        namespace fs = std::filesystem;
        const fs::path dir = root_ / key;
        const fs::path manifest = dir / "MANIFEST";
        std::error_code ec;
        if (!fs::exists(manifest, ec)) return std::nullopt;
        ArtifactFiles files;
        std::istringstream names(read_file(manifest));
        std::string name;
        while (std::getline(names, name)) {
            if (name.empty()) continue;
            if (!fs::exists(dir / name, ec)) return std::nullopt;
            files[name] = read_file(dir / name);
        }
        return files;
    }

    void store(const std::string& key, const ArtifactFiles& files) const {
        const auto dir = root_ / key;
        std::string manifest;
        try {
            for (const auto& [name, content] : files) {
                write_file_atomic(dir / name, content);
                manifest += name + "\n";
            }
            // The manifest goes last so a partial store never reads as a hit.
            write_file_atomic(dir / "MANIFEST", manifest);
        } catch (const Error&) {
        }
    }

private:
    std::filesystem::path root_;
};

namespace svg {

struct Frame {
    double x0, x1, y0, y1;
    static constexpr double width = 640, height = 420, left = 70, right = 20, top = 40, bottom = 50;

    double px(double x) const { return left + (x - x0) / (x1 - x0) * (width - left - right); }
    double py(double y) const { return height - bottom - (y - y0) / (y1 - y0) * (height - top - bottom); }
};

inline std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", x);
    return buf;
}

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::pair<double, double> padded(double lo, double hi) {
    if (hi <= lo) return {lo - 1.0, hi + 1.0};
    const double pad = 0.05 * (hi - lo);
    return {lo - pad, hi + pad};
}

inline std::string open(const Frame& f, const std::string& title, const std::string& xlabel,
                        const std::string& ylabel) {
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(Frame::width) +
                    "\" height=\"" + num(Frame::height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<text x=\"" + num(Frame::width / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" +
         escape(title) + "</text>\n";
    const double xa = f.py(f.y0), ya = f.px(f.x0);
    s += "<line x1=\"" + num(f.px(f.x0)) + "\" y1=\"" + num(xa) + "\" x2=\"" + num(f.px(f.x1)) +
         "\" y2=\"" + num(xa) + "\" stroke=\"black\"/>\n";
    s += "<line x1=\"" + num(ya) + "\" y1=\"" + num(f.py(f.y0)) + "\" x2=\"" + num(ya) + "\" y2=\"" +
         num(f.py(f.y1)) + "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double x = f.x0 + (f.x1 - f.x0) * i / 4.0, y = f.y0 + (f.y1 - f.y0) * i / 4.0;
        char bx[32], by[32];
        std::snprintf(bx, sizeof bx, "%.3g", x);
        std::snprintf(by, sizeof by, "%.3g", y);
        s += "<text x=\"" + num(f.px(x)) + "\" y=\"" + num(xa + 16) + "\" text-anchor=\"middle\">" +
             bx + "</text>\n";
        s += "<text x=\"" + num(ya - 6) + "\" y=\"" + num(f.py(y) + 4) + "\" text-anchor=\"end\">" +
             by + "</text>\n";
    }
    s += "<text x=\"" + num(Frame::width / 2) + "\" y=\"" + num(Frame::height - 10) +
         "\" text-anchor=\"middle\">" + escape(xlabel) + "</text>\n";
    s += "<text x=\"16\" y=\"" + num(Frame::height / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         num(Frame::height / 2) + ")\">" + escape(ylabel) + "</text>\n";
    return s;
}

inline std::string polyline(const Frame& f, const std::vector<std::pair<double, double>>& pts,
                            const std::string& colour, const std::string& extra = "") {
    std::string s = "<polyline fill=\"none\" stroke=\"" + colour + "\"" + extra + " points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i) s += ' ';
        s += num(f.px(pts[i].first)) + "," + num(f.py(pts[i].second));
    }
    return s + "\"/>\n";
}

inline std::string legend(int row, const std::string& colour, const std::string& text) {
    const double y = Frame::top + 8 + 16 * row;
    return "<rect x=\"" + num(Frame::width - 230) + "\" y=\"" + num(y - 8) + "\" width=\"10\" height=\"10\" fill=\"" +
           colour + "\"/>\n<text x=\"" + num(Frame::width - 215) + "\" y=\"" + num(y + 1) + "\">" +
           escape(text) + "</text>\n";
}

}  // namespace svg

/// Log-log scatter of |lambda_n - d(n)| (or the relative residual) with the
/// fitted line and a reference line of the predicted slope.
inline std::string residual_plot_svg(const ResidualSeries& series, Magnitude magnitude,
                                     const std::optional<RateFit>& fit,
                                     std::optional<double> predicted_slope,
                                     const std::string& title) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& e : series.entries) {
        const double v = fit_value(e, magnitude);
        if (e.stable && v > 0.0 && e.n >= 1) pts.emplace_back(std::log(static_cast<double>(e.n)), std::log(v));
    }
    if (pts.size() < 2) {
        throw PreconditionError("emit_plot: need at least two plottable points, got " +
                                std::to_string(pts.size()));
    }
    double xl = pts.front().first, xh = xl, yl = pts.front().second, yh = yl;
    for (const auto& [x, y] : pts) {
        xl = std::min(xl, x), xh = std::max(xh, x), yl = std::min(yl, y), yh = std::max(yh, y);
    }
    auto line_at = [&](double slope, double intercept, double lnlog) {
        return std::vector<std::pair<double, double>>{
            {xl, intercept + slope * xl + lnlog * std::log(std::max(xl, 1e-300))},
            {xh, intercept + slope * xh + lnlog * std::log(std::max(xh, 1e-300))}};
    };
    std::vector<std::pair<double, double>> fitted, reference;
    if (fit) {
        // Sampled so the ln ln n term of a power-with-log fit shows its curvature.
        for (int i = 0; i <= 32; ++i) {
            const double x = std::max(xl + (xh - xl) * i / 32.0, std::log(2.0));
            fitted.emplace_back(x, fit->log_constant + fit->exponent * x + fit->log_exponent * std::log(x));
        }
    }
    if (predicted_slope) {
        const double xm = 0.5 * (xl + xh);
        double ym = 0.0;
        if (fit) {
            ym = fit->log_constant + fit->exponent * xm + fit->log_exponent * std::log(std::max(xm, 1e-300));
        } else {
            for (const auto& p : pts) ym += p.second;
            ym /= static_cast<double>(pts.size());
        }
        reference = line_at(*predicted_slope, ym - *predicted_slope * xm, 0.0);
    }
    for (const auto* line : {&fitted, &reference}) {
        for (const auto& [x, y] : *line) yl = std::min(yl, y), yh = std::max(yh, y);
    }
    const auto [x0, x1] = svg::padded(xl, xh);
    const auto [y0, y1] = svg::padded(yl, yh);
    const svg::Frame f{x0, x1, y0, y1};
    const std::string ylabel = magnitude == Magnitude::absolute ? "ln |lambda_n - d(n)|"
                                                                : "ln |lambda_n / d(n) - 1|";
    std::string s = svg::open(f, title, "ln n", ylabel);
    for (const auto& [x, y] : pts) {
        s += "<circle cx=\"" + svg::num(f.px(x)) + "\" cy=\"" + svg::num(f.py(y)) + "\" r=\"2\" fill=\"#1f77b4\"/>\n";
    }
    int row = 0;
    s += svg::legend(row++, "#1f77b4", "residuals of " + series.model_label);
    if (fit) {
        s += svg::polyline(f, fitted, "#d62728", " stroke-width=\"1.5\"");
        char buf[96];
        std::snprintf(buf, sizeof buf, "fit: slope %.4g", fit->exponent);
        s += svg::legend(row++, "#d62728", buf);
    }
    if (predicted_slope) {
        s += svg::polyline(f, reference, "#2ca02c", " stroke-dasharray=\"6,4\"");
        char buf[96];
        std::snprintf(buf, sizeof buf, "predicted slope %.4g", *predicted_slope);
        s += svg::legend(row++, "#2ca02c", buf);
    }
    return s + "</svg>\n";
}

/// Enclosure band around d(n): d_n^- - d(n), d_n^+ - d(n) and lambda_n - d(n).
inline std::string enclosure_plot_svg(const std::vector<EnclosureResult>& rows,
                                      const std::vector<double>& d_n,
                                      const std::vector<double>& lambda_n, const std::string& title) {
    if (rows.size() < 2 || d_n.size() != rows.size() || lambda_n.size() != rows.size()) {
        throw PreconditionError("emit_plot: enclosure plot needs at least two aligned rows");
    }
    std::vector<std::pair<double, double>> lo, hi, mid;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double n = static_cast<double>(rows[i].n);
        lo.emplace_back(n, rows[i].lower - d_n[i]);
        hi.emplace_back(n, rows[i].upper - d_n[i]);
        mid.emplace_back(n, lambda_n[i] - d_n[i]);
    }
    double yl = lo.front().second, yh = yl;
    for (const auto* v : {&lo, &hi, &mid}) {
        for (const auto& p : *v) yl = std::min(yl, p.second), yh = std::max(yh, p.second);
    }
    const auto [x0, x1] = svg::padded(lo.front().first, lo.back().first);
    const auto [y0, y1] = svg::padded(yl, yh);
    const svg::Frame f{x0, x1, y0, y1};
    std::string s = svg::open(f, title, "n", "offset from d(n)");
    s += svg::polyline(f, lo, "#1f77b4");
    s += svg::polyline(f, hi, "#ff7f0e");
    s += svg::polyline(f, mid, "#2ca02c", " stroke-width=\"1.5\"");
    s += svg::legend(0, "#1f77b4", "lower enclosure - d(n)");
    s += svg::legend(1, "#ff7f0e", "upper enclosure - d(n)");
    s += svg::legend(2, "#2ca02c", "lambda_n - d(n)");
    return s + "</svg>\n";
}

inline void emit_plot(const std::string& svg_text, const std::filesystem::path& path) {
    write_file_atomic(path, svg_text);
}

}  // namespace bandspec

#include "portopt/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "portopt/errors.hpp"
#include "portopt/text.hpp"

namespace portopt {
namespace {

constexpr double kWidth = 860.0;
constexpr double kHeight = 520.0;
constexpr double kTop = 44.0;
constexpr double kBottom = 56.0;
constexpr double kLeft = 76.0;
constexpr double kLinThresh = 1e-4;

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

std::string fmt2(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

/// Short human form for axis ticks; data fidelity lives in the CSV.
std::string fmt_tick(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

/// Linear map from data interval to pixel interval (possibly reversed).
struct Scale {
    double d0 = 0.0, d1 = 1.0, p0 = 0.0, p1 = 1.0;
    double operator()(double v) const { return p0 + (v - d0) / (d1 - d0) * (p1 - p0); }
};

/// Widens degenerate ranges so scales stay invertible.
void pad_range(double& lo, double& hi) {
    if (hi > lo) {
        const double pad = 0.05 * (hi - lo);
        lo -= pad;
        hi += pad;
        return;
    }
    const double pad = std::abs(lo) > 0.0 ? 0.1 * std::abs(lo) : 1.0;
    lo -= pad;
    hi += pad;
}

std::vector<double> linear_ticks(double lo, double hi, int target = 6) {
    const double raw = (hi - lo) / double(target);
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double norm = raw / mag;
    const double step = (norm < 1.5 ? 1.0 : norm < 3.5 ? 2.0 : norm < 7.5 ? 5.0 : 10.0) * mag;
    std::vector<double> ticks;
    for (double t = std::ceil(lo / step) * step; t <= hi + step * 1e-9; t += step) {
        ticks.push_back(std::abs(t) < step * 1e-9 ? 0.0 : t);
    }
    return ticks;
}

struct Svg {
    std::string body;

    void open(const std::string& title) {
        body = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
        body += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt_tick(kWidth) +
                "\" height=\"" + fmt_tick(kHeight) + "\" viewBox=\"0 0 " + fmt_tick(kWidth) +
                " " + fmt_tick(kHeight) + "\" font-family=\"sans-serif\">\n";
        body += "<title>" + xml_escape(title) + "</title>\n";
        body += "<rect width=\"" + fmt_tick(kWidth) + "\" height=\"" + fmt_tick(kHeight) +
                "\" fill=\"white\"/>\n";
        text(kWidth / 2.0, 24.0, title, 16, "middle", "#000000", true);
    }

    std::string close() && {
        body += "</svg>\n";
        return std::move(body);
    }

    void line(double x1, double y1, double x2, double y2, const std::string& stroke,
              double width = 1.0, const std::string& dash = "") {
        body += "<line x1=\"" + fmt2(x1) + "\" y1=\"" + fmt2(y1) + "\" x2=\"" + fmt2(x2) +
                "\" y2=\"" + fmt2(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" +
                fmt2(width) + "\"";
        if (!dash.empty()) body += " stroke-dasharray=\"" + dash + "\"";
        body += "/>\n";
    }

    void rect(double x, double y, double w, double h, const std::string& fill,
              const std::string& stroke = "none") {
        body += "<rect x=\"" + fmt2(x) + "\" y=\"" + fmt2(y) + "\" width=\"" + fmt2(w) +
                "\" height=\"" + fmt2(h) + "\" fill=\"" + fill + "\" stroke=\"" + stroke +
                "\"/>\n";
    }

    void circle(double cx, double cy, double r, const std::string& fill) {
        body += "<circle cx=\"" + fmt2(cx) + "\" cy=\"" + fmt2(cy) + "\" r=\"" + fmt2(r) +
                "\" fill=\"" + fill + "\"/>\n";
    }

    void text(double x, double y, const std::string& content, int size,
              const std::string& anchor, const std::string& fill = "#000000",
              bool bold = false) {
        body += "<text x=\"" + fmt2(x) + "\" y=\"" + fmt2(y) + "\" font-size=\"" +
                std::to_string(size) + "\" text-anchor=\"" + anchor + "\" fill=\"" + fill +
                "\"";
        if (bold) body += " font-weight=\"bold\"";
        body += ">" + xml_escape(content) + "</text>\n";
    }

    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke,
                  double width = 1.5, const std::string& dash = "") {
        body += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" +
                fmt2(width) + "\"";
        if (!dash.empty()) body += " stroke-dasharray=\"" + dash + "\"";
        body += " points=\"";
        for (const auto& [x, y] : pts) {
            body += fmt2(x) + "," + fmt2(y) + " ";
        }
        body += "\"/>\n";
    }

    void y_axis(const Scale& sy, const std::vector<double>& ticks, double x_left,
                double x_right, const std::vector<std::string>& labels = {}) {
        line(x_left, sy.p1, x_left, sy.p0, "#000000");
        for (std::size_t i = 0; i < ticks.size(); ++i) {
            const double y = sy(ticks[i]);
            line(x_left - 4.0, y, x_left, y, "#000000");
            line(x_left, y, x_right, y, "#dddddd", 0.5);
            const std::string label = labels.empty() ? fmt_tick(ticks[i]) : labels[i];
            text(x_left - 8.0, y + 4.0, label, 11, "end");
        }
    }

    void x_axis_line(double x_left, double x_right, double y) {
        line(x_left, y, x_right, y, "#000000");
    }
};

void check(bool ok, const std::string& message) {
    if (!ok) throw DataError("figure: " + message);
}

const std::string& color(std::size_t index) {
    static const std::vector<std::string> palette(kPalette, kPalette + kPaletteSize);
    return palette[index % kPaletteSize];
}

void legend(Svg& svg, const std::vector<std::string>& labels, double x, double y) {
    for (std::size_t k = 0; k < labels.size(); ++k) {
        const double row = y + double(k) * 18.0;
        svg.line(x, row - 4.0, x + 22.0, row - 4.0, color(k), 2.5);
        svg.text(x + 28.0, row, labels[k], 12, "start");
    }
}

} // namespace

double symlog(double value, double linthresh) {
    return value >= 0.0 ? std::log10(1.0 + value / linthresh)
                        : -std::log10(1.0 - value / linthresh);
}

BoxStats box_stats(std::vector<double> values) {
    check(!values.empty(), "box statistics of an empty sample");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    const auto rank = [&](double p) {
        const auto r = std::size_t(std::ceil(p * double(n)));
        return values[std::max<std::size_t>(r, 1) - 1];
    };
    BoxStats stats;
    stats.min = values.front();
    stats.q1 = rank(0.25);
    stats.median = rank(0.50);
    stats.q3 = rank(0.75);
    stats.max = values.back();
    return stats;
}

FigureArtifact emit_figure(const FigureSpec& spec, const SeriesData& data) {
    check(spec.kind == FigureKind::cumulative_returns, "spec kind does not match series data");
    check(!data.series.empty() && !data.dates.empty(), "empty series data");
    check(data.series.size() == spec.labels.size(), "labels do not match series count");
    for (const auto& series : data.series) {
        check(series.size() == data.dates.size(), "series length does not match dates");
    }

    const std::size_t n = data.dates.size();
    double lo = data.series[0][0], hi = lo;
    for (const auto& series : data.series) {
        for (double v : series) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    pad_range(lo, hi);

    const double right = kWidth - 170.0; // room for the legend
    const Scale sx{0.0, double(n - 1 == 0 ? 1 : n - 1), kLeft, right};
    const Scale sy{lo, hi, kHeight - kBottom, kTop};

    Svg svg;
    svg.open(spec.title);
    svg.y_axis(sy, linear_ticks(lo, hi), kLeft, right);
    svg.x_axis_line(kLeft, right, kHeight - kBottom);
    const std::size_t tick_step = std::max<std::size_t>(1, (n - 1) / 6 + 1);
    for (std::size_t t = 0; t < n; t += tick_step) {
        const double x = sx(double(t));
        svg.line(x, kHeight - kBottom, x, kHeight - kBottom + 4.0, "#000000");
        svg.text(x, kHeight - kBottom + 18.0, data.dates[t].to_string(), 10, "middle");
    }
    for (std::size_t k = 0; k < data.series.size(); ++k) {
        std::vector<std::pair<double, double>> pts;
        pts.reserve(n);
        for (std::size_t t = 0; t < n; ++t) {
            pts.emplace_back(sx(double(t)), sy(data.series[k][t]));
        }
        svg.polyline(pts, color(k));
    }
    legend(svg, spec.labels, right + 14.0, kTop + 12.0);

    std::string csv = "date";
    for (const auto& label : spec.labels) csv += "," + label;
    csv += '\n';
    for (std::size_t t = 0; t < n; ++t) {
        csv += data.dates[t].to_string();
        for (const auto& series : data.series) csv += "," + fmt_double(series[t]);
        csv += '\n';
    }
    return {std::move(svg).close(), std::move(csv)};
}

FigureArtifact emit_figure(const FigureSpec& spec, const DistributionData& data) {
    check(spec.kind == FigureKind::return_distribution,
          "spec kind does not match distribution data");
    check(!data.samples.empty(), "empty distribution data");
    check(data.samples.size() == spec.labels.size(), "labels do not match sample count");

    std::vector<BoxStats> boxes;
    boxes.reserve(data.samples.size());
    for (const auto& sample : data.samples) boxes.push_back(box_stats(sample));

    double lo = boxes[0].min, hi = boxes[0].max;
    for (const auto& b : boxes) {
        lo = std::min(lo, b.min);
        hi = std::max(hi, b.max);
    }
    // The value axis is symlog so the ticks are powers of ten (and zero),
    // placed in transformed space.
    double tlo = symlog(lo, kLinThresh), thi = symlog(hi, kLinThresh);
    pad_range(tlo, thi);
    std::vector<double> tick_values{0.0};
    for (double decade = kLinThresh; decade <= std::max(std::abs(lo), std::abs(hi)) * 10.0;
         decade *= 10.0) {
        tick_values.push_back(decade);
        tick_values.push_back(-decade);
    }
    std::sort(tick_values.begin(), tick_values.end());
    std::vector<double> ticks;
    std::vector<std::string> tick_labels;
    for (double v : tick_values) {
        const double t = symlog(v, kLinThresh);
        if (t < tlo || t > thi) continue;
        ticks.push_back(t);
        tick_labels.push_back(fmt_tick(v));
    }

    const double right = kWidth - 40.0;
    const Scale sy{tlo, thi, kHeight - kBottom, kTop};
    const std::size_t k = boxes.size();
    const double span = (right - kLeft) / double(k);
    const double half = std::min(34.0, span * 0.3);

    Svg svg;
    svg.open(spec.title);
    svg.y_axis(sy, ticks, kLeft, right, tick_labels);
    svg.x_axis_line(kLeft, right, kHeight - kBottom);
    for (std::size_t i = 0; i < k; ++i) {
        const double cx = kLeft + span * (double(i) + 0.5);
        const auto& b = boxes[i];
        const double y_min = sy(symlog(b.min, kLinThresh));
        const double y_q1 = sy(symlog(b.q1, kLinThresh));
        const double y_med = sy(symlog(b.median, kLinThresh));
        const double y_q3 = sy(symlog(b.q3, kLinThresh));
        const double y_max = sy(symlog(b.max, kLinThresh));
        svg.line(cx, y_min, cx, y_q1, "#555555");
        svg.line(cx, y_q3, cx, y_max, "#555555");
        svg.line(cx - half * 0.6, y_min, cx + half * 0.6, y_min, "#555555");
        svg.line(cx - half * 0.6, y_max, cx + half * 0.6, y_max, "#555555");
        svg.rect(cx - half, y_q3, 2.0 * half, y_q1 - y_q3, "#aec7e8", "#1f77b4");
        svg.line(cx - half, y_med, cx + half, y_med, "#d62728", 2.0);
        svg.text(cx, kHeight - kBottom + 18.0, spec.labels[i], 11, "middle");
    }

    std::string csv = "label,min,q1,median,q3,max\n";
    for (std::size_t i = 0; i < k; ++i) {
        const auto& b = boxes[i];
        csv += spec.labels[i] + "," + fmt_double(b.min) + "," + fmt_double(b.q1) + "," +
               fmt_double(b.median) + "," + fmt_double(b.q3) + "," + fmt_double(b.max) + '\n';
    }
    return {std::move(svg).close(), std::move(csv)};
}

FigureArtifact emit_figure(const FigureSpec& spec, const HeatmapData& data) {
    check(spec.kind == FigureKind::correlation_heatmap, "spec kind does not match heatmap data");
    const Eigen::Index n = data.matrix.rows();
    check(n >= 1 && data.matrix.cols() == n, "heatmap matrix must be square and nonempty");
    check(spec.labels.size() == std::size_t(n), "labels do not match matrix size");

    const double right = kWidth - 40.0;
    const double cell = std::min((right - kLeft) / double(n), (kHeight - kTop - kBottom) / double(n));
    const double x0 = kLeft, y0 = kTop + 12.0;

    const auto fill = [](double v) {
        const double c = std::clamp(v, -1.0, 1.0);
        int r, g, b;
        if (c >= 0.0) { // white -> red
            r = int(255 + c * (178 - 255));
            g = int(255 + c * (24 - 255));
            b = int(255 + c * (43 - 255));
        } else { // white -> blue
            r = int(255 - c * (33 - 255));
            g = int(255 - c * (102 - 255));
            b = int(255 - c * (172 - 255));
        }
        char buf[16];
        std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
        return std::string(buf);
    };

    Svg svg;
    svg.open(spec.title);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double x = x0 + double(j) * cell;
            const double y = y0 + double(i) * cell;
            const double v = data.matrix(i, j);
            svg.rect(x, y, cell, cell, fill(v), "#ffffff");
            svg.text(x + cell / 2.0, y + cell / 2.0 + 4.0, fmt2(v), 11, "middle",
                     std::abs(v) > 0.6 ? "#ffffff" : "#000000");
        }
        svg.text(x0 - 8.0, y0 + double(i) * cell + cell / 2.0 + 4.0, spec.labels[std::size_t(i)],
                 11, "end");
        svg.text(x0 + double(i) * cell + cell / 2.0, y0 + double(n) * cell + 16.0,
                 spec.labels[std::size_t(i)], 11, "middle");
    }

    std::string csv;
    for (const auto& label : spec.labels) csv += "," + label;
    csv += '\n';
    for (Eigen::Index i = 0; i < n; ++i) {
        csv += spec.labels[std::size_t(i)];
        for (Eigen::Index j = 0; j < n; ++j) csv += "," + fmt_double(data.matrix(i, j));
        csv += '\n';
    }
    return {std::move(svg).close(), std::move(csv)};
}

FigureArtifact emit_figure(const FigureSpec& spec, const ScatterData& data) {
    check(spec.kind == FigureKind::frontier_scatter, "spec kind does not match scatter data");
    check(data.frontier_volatility.size() == data.frontier_return.size(),
          "frontier series lengths differ");
    check(!data.frontier_volatility.empty() || !data.points.empty(), "empty scatter data");

    double xlo = 0.0, xhi = 0.0, ylo = 0.0, yhi = 0.0;
    bool first = true;
    const auto grow = [&](double x, double y) {
        if (first) {
            xlo = xhi = x;
            ylo = yhi = y;
            first = false;
            return;
        }
        xlo = std::min(xlo, x);
        xhi = std::max(xhi, x);
        ylo = std::min(ylo, y);
        yhi = std::max(yhi, y);
    };
    for (std::size_t i = 0; i < data.frontier_volatility.size(); ++i) {
        grow(data.frontier_volatility[i], data.frontier_return[i]);
    }
    for (const auto& p : data.points) grow(p.volatility, p.expected_return);
    pad_range(xlo, xhi);
    pad_range(ylo, yhi);

    const double right = kWidth - 40.0;
    const Scale sx{xlo, xhi, kLeft, right};
    const Scale sy{ylo, yhi, kHeight - kBottom, kTop};

    Svg svg;
    svg.open(spec.title);
    svg.y_axis(sy, linear_ticks(ylo, yhi), kLeft, right);
    svg.x_axis_line(kLeft, right, kHeight - kBottom);
    for (double t : linear_ticks(xlo, xhi)) {
        const double x = sx(t);
        svg.line(x, kHeight - kBottom, x, kHeight - kBottom + 4.0, "#000000");
        svg.text(x, kHeight - kBottom + 18.0, fmt_tick(t), 10, "middle");
    }
    svg.text((kLeft + right) / 2.0, kHeight - 14.0, "volatility (per period)", 12, "middle");
    svg.text(18.0, (kTop + kHeight - kBottom) / 2.0, "expected return", 12, "middle");

    if (!data.frontier_volatility.empty()) {
        std::vector<std::pair<double, double>> pts;
        pts.reserve(data.frontier_volatility.size());
        for (std::size_t i = 0; i < data.frontier_volatility.size(); ++i) {
            pts.emplace_back(sx(data.frontier_volatility[i]), sy(data.frontier_return[i]));
        }
        svg.polyline(pts, "#000000", 1.5, "6,4");
    }
    for (const auto& p : data.points) {
        const double x = sx(p.volatility), y = sy(p.expected_return);
        if (p.group == "portfolio") {
            svg.rect(x - 4.5, y - 4.5, 9.0, 9.0, "#ff7f0e");
        } else {
            svg.circle(x, y, 4.5, "#1f77b4");
        }
        svg.text(x + 7.0, y - 6.0, p.label, 10, "start");
    }

    std::string csv = "series,label,volatility,expected_return\n";
    for (std::size_t i = 0; i < data.frontier_volatility.size(); ++i) {
        csv += "frontier,," + fmt_double(data.frontier_volatility[i]) + "," +
               fmt_double(data.frontier_return[i]) + '\n';
    }
    for (const auto& p : data.points) {
        csv += p.group + "," + p.label + "," + fmt_double(p.volatility) + "," +
               fmt_double(p.expected_return) + '\n';
    }
    return {std::move(svg).close(), std::move(csv)};
}

} // namespace portopt

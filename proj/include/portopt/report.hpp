#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "portopt/dates.hpp"

namespace portopt {

enum class FigureKind {
    cumulative_returns,
    return_distribution,
    correlation_heatmap,
    frontier_scatter,
};

struct FigureSpec {
    FigureKind kind = FigureKind::cumulative_returns;
    std::string title;
    std::vector<std::string> labels; // series / asset / axis labels per kind
};

/// Line chart input: series[k][t] plotted against dates[t], one polyline per
/// label.
struct SeriesData {
    std::vector<Date> dates;
    std::vector<std::vector<double>> series;
};

/// Box-plot input: one sample vector per label. The value axis uses a
/// symmetric-log scale with linear threshold 1e-4 so near-zero daily returns
/// stay readable next to outliers.
struct DistributionData {
    std::vector<std::vector<double>> samples;
};

/// Heatmap input: square matrix annotated per cell, labels on both axes.
struct HeatmapData {
    Eigen::MatrixXd matrix;
};

struct ScatterPoint {
    double volatility = 0.0;
    double expected_return = 0.0;
    std::string label;
    std::string group; // "asset" or "portfolio", selects the marker style
};

/// Frontier figure input: the frontier polyline plus labelled point markers.
struct ScatterData {
    std::vector<double> frontier_volatility;
    std::vector<double> frontier_return;
    std::vector<ScatterPoint> points;
};

/// A rendered figure: self-contained SVG (no external resources) plus a
/// companion CSV holding exactly the plotted values, formatted so re-parsing
/// reproduces them bit for bit.
struct FigureArtifact {
    std::string svg;
    std::string csv;
};

FigureArtifact emit_figure(const FigureSpec& spec, const SeriesData& data);
FigureArtifact emit_figure(const FigureSpec& spec, const DistributionData& data);
FigureArtifact emit_figure(const FigureSpec& spec, const HeatmapData& data);
FigureArtifact emit_figure(const FigureSpec& spec, const ScatterData& data);

/// Five-number summary under the nearest-rank quartile convention:
/// Q_p = sorted[ceil(p*n)] (1-based), so every statistic is an observed value.
struct BoxStats {
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
};

BoxStats box_stats(std::vector<double> values);

/// sign(v) * log10(1 + |v|/linthresh): linear near zero, logarithmic in the
/// tails, both signs.
double symlog(double value, double linthresh);

} // namespace portopt

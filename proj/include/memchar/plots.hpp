#pragma once

#include <optional>
#include <string>
#include <vector>

#include "memchar/model.hpp"
#include "memchar/results.hpp"

namespace memchar {

enum class PlotKind { heatmap, grouped_bars };
std::string_view to_string(PlotKind k);
PlotKind parse_plot_kind(std::string_view s);

struct Heatmap {
  std::string title;
  std::string row_axis, col_axis;
  std::string unit;
  std::vector<std::string> rows, cols;
  std::vector<std::vector<std::optional<double>>> values;  // [row][col]
  bool annotate = true;
};

struct Bar {
  double value = 0;
  double min = 0;  // error bar
  double max = 0;
};

struct BarChart {
  std::string title;
  std::string unit;
  std::vector<std::string> groups;  // x axis clusters
  std::vector<std::string> series;  // one bar per series inside each group
  std::vector<std::vector<std::optional<Bar>>> bars;  // [group][series]
};

// Rows are requesters, columns owners. All records must share state, level and backend.
Heatmap heatmap_from_latency(const std::vector<MeasurementRecord>& recs);
Heatmap heatmap_from_matrix(const LatencyMatrix& m);
// Groups are levels; series are source label plus state pair (M/E, O/S, F, I).
// Value is the minimum in each bin, error bars span min..max.
BarChart bars_from_observations(const std::vector<Observation>& obs);
// Value is latency_cycles, error bars the min/max statistics.
BarChart bars_from_latency(const std::vector<MeasurementRecord>& recs);
// Value is bytes_per_cycle, error bars the min/max over repeats.
BarChart bars_from_bandwidth(const std::vector<BandwidthRecord>& recs);

std::string heatmap_svg(const Heatmap& h);
std::string heatmap_data(const Heatmap& h);
std::string bars_svg(const BarChart& b);
std::string bars_data(const BarChart& b);

struct PlotFiles {
  std::string svg;
  std::string data;
};

// Throws ConfigError on mixed units (latency and bandwidth together) or records
// that do not share axes. Returns the file contents without writing anything.
PlotFiles render_plot(const ResultSet& rs, PlotKind kind, const std::string& title = "");
// Writes <stem>.svg and <stem>.data.txt; returns the two paths.
std::vector<std::string> emit_plot(const ResultSet& rs, PlotKind kind, const std::string& stem,
                                   const std::string& title = "");

}  // namespace memchar

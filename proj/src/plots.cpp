#include "memchar/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "memchar/text.hpp"

namespace memchar {

std::string_view to_string(PlotKind k) { return k == PlotKind::heatmap ? "heatmap" : "grouped_bars"; }

PlotKind parse_plot_kind(std::string_view s) {
  if (s == "heatmap") return PlotKind::heatmap;
  if (s == "grouped_bars" || s == "bars") return PlotKind::grouped_bars;
  throw ConfigError("unknown plot kind '" + std::string(s) + "' (heatmap, grouped_bars)");
}

namespace {

std::string xml_escape(std::string_view s) {
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

// Data-file fields are tab separated, so labels must not contain tabs or newlines.
std::string field(std::string_view s) {
  if (s.find_first_of("\t\n\r") != std::string_view::npos) throw ConfigError("plot label contains a tab or newline");
  return std::string(s);
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// White to dark red.
std::string shade(double t) {
  t = std::clamp(t, 0.0, 1.0);
  int r = static_cast<int>(std::lround(255 - 75 * t));
  int gb = static_cast<int>(std::lround(245 - 215 * t));
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, gb, gb);
  return buf;
}

const char* const kPalette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                                "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"};

std::string state_pair(CoherenceState s) {
  switch (s) {
    case CoherenceState::M:
    case CoherenceState::E: return "M/E";
    case CoherenceState::O:
    case CoherenceState::S: return "O/S";
    case CoherenceState::F: return "F";
    case CoherenceState::I: return "I";
  }
  return "?";
}

std::string strip_ram(const std::string& label) {
  const std::string tail = " RAM";
  if (label.size() > tail.size() && label.compare(label.size() - tail.size(), tail.size(), tail) == 0)
    return label.substr(0, label.size() - tail.size());
  return label;
}

// Stable insertion-ordered index.
struct Index {
  std::vector<std::string> names;
  std::map<std::string, std::size_t> at;
  std::size_t operator()(const std::string& n) {
    auto [it, fresh] = at.emplace(n, names.size());
    if (fresh) names.push_back(n);
    return it->second;
  }
};

struct Bin {
  double value, min, max;
};

BarChart make_chart(std::string unit, const std::vector<std::tuple<CacheLevel, std::string, Bin>>& items) {
  BarChart c;
  c.unit = std::move(unit);
  std::set<CacheLevel> levels;
  Index series;
  for (const auto& [l, s, b] : items) {
    levels.insert(l);
    series(s);
  }
  std::map<CacheLevel, std::size_t> gi;
  for (auto l : levels) {
    gi[l] = c.groups.size();
    c.groups.emplace_back(to_string(l));
  }
  c.series = series.names;
  c.bars.assign(c.groups.size(), std::vector<std::optional<Bar>>(c.series.size()));
  for (const auto& [l, s, b] : items) {
    auto& slot = c.bars[gi[l]][series.at[s]];
    if (!slot) {
      slot = Bar{b.value, b.min, b.max};
    } else {
      slot->value = std::min(slot->value, b.value);
      slot->min = std::min(slot->min, b.min);
      slot->max = std::max(slot->max, b.max);
    }
  }
  return c;
}

}  // namespace

Heatmap heatmap_from_latency(const std::vector<MeasurementRecord>& recs) {
  if (recs.empty()) throw ConfigError("heat map needs at least one record");
  const auto& first = recs.front();
  std::set<int> rows, cols;
  for (const auto& r : recs) {
    if (r.state != first.state || r.level != first.level)
      throw ConfigError("mismatched axes: records mix states or levels (" + std::string(to_string(first.state)) + "/" +
                        std::string(to_string(first.level)) + " vs " + std::string(to_string(r.state)) + "/" +
                        std::string(to_string(r.level)) + ")");
    if (r.backend != first.backend) throw ConfigError("mismatched axes: records mix backends");
    rows.insert(r.requester);
    cols.insert(r.owner);
  }
  Heatmap h;
  h.title = std::string(to_string(first.state)) + " " + std::string(to_string(first.level)) + " latency";
  h.row_axis = "requester";
  h.col_axis = "owner";
  h.unit = "cycles";
  std::map<int, std::size_t> ri, ci;
  for (int r : rows) ri[r] = h.rows.size(), h.rows.push_back(std::to_string(r));
  for (int c : cols) ci[c] = h.cols.size(), h.cols.push_back(std::to_string(c));
  h.values.assign(h.rows.size(), std::vector<std::optional<double>>(h.cols.size()));
  for (const auto& r : recs) {
    auto& cell = h.values[ri[r.requester]][ci[r.owner]];
    if (cell)
      throw ConfigError("mismatched axes: two records for requester " + std::to_string(r.requester) + ", owner " +
                        std::to_string(r.owner));
    cell = r.latency_cycles;
  }
  return h;
}

Heatmap heatmap_from_matrix(const LatencyMatrix& m) {
  if (m.cycles.size() != m.rows.size()) throw ConfigError("mismatched axes: matrix row count");
  Heatmap h;
  h.title = std::string(to_string(m.state)) + " " + std::string(to_string(m.level)) + " latency";
  h.row_axis = m.row_axis;
  h.col_axis = m.col_axis;
  h.unit = "cycles";
  for (int r : m.rows) h.rows.push_back(std::to_string(r));
  for (int c : m.cols) h.cols.push_back(std::to_string(c));
  for (const auto& row : m.cycles)
    if (row.size() != m.cols.size()) throw ConfigError("mismatched axes: matrix column count");
  h.values = m.cycles;
  return h;
}

BarChart bars_from_observations(const std::vector<Observation>& obs) {
  if (obs.empty()) throw ConfigError("bar chart needs at least one observation");
  std::vector<std::tuple<CacheLevel, std::string, Bin>> items;
  for (const auto& o : obs) {
    std::string src = o.label.empty() ? "unlabelled" : strip_ram(o.label);
    items.emplace_back(o.query.level, src + " " + state_pair(o.query.state), Bin{o.cycles, o.cycles, o.cycles});
  }
  auto c = make_chart("cycles", items);
  c.title = "latency by level, source and state";
  return c;
}

BarChart bars_from_latency(const std::vector<MeasurementRecord>& recs) {
  if (recs.empty()) throw ConfigError("bar chart needs at least one record");
  std::vector<std::tuple<CacheLevel, std::string, Bin>> items;
  for (const auto& r : recs) {
    if (r.backend != recs.front().backend) throw ConfigError("mismatched axes: records mix backends");
    std::string src = r.owner == r.requester ? "local" : "owner " + std::to_string(r.owner);
    items.emplace_back(r.level, "core " + std::to_string(r.requester) + " " + src + " " + state_pair(r.state),
                       Bin{r.latency_cycles, r.stats.min, r.stats.max});
  }
  auto c = make_chart("cycles", items);
  c.title = "latency by level";
  return c;
}

BarChart bars_from_bandwidth(const std::vector<BandwidthRecord>& recs) {
  if (recs.empty()) throw ConfigError("bar chart needs at least one record");
  std::vector<std::tuple<CacheLevel, std::string, Bin>> items;
  for (const auto& r : recs) {
    double lo = r.bytes_per_cycle, hi = r.bytes_per_cycle;
    for (double s : r.samples_bpc) lo = std::min(lo, s), hi = std::max(hi, s);
    items.emplace_back(r.level, r.kernel_used + " x" + std::to_string(r.core_set.size()),
                       Bin{r.bytes_per_cycle, lo, hi});
  }
  auto c = make_chart("B/cycle", items);
  c.title = "bandwidth by level";
  // Bandwidth bins keep the best rate rather than the lowest.
  std::map<std::pair<std::size_t, std::size_t>, double> best;
  for (const auto& [l, s, b] : items) {
    std::size_t gi = std::find(c.groups.begin(), c.groups.end(), std::string(to_string(l))) - c.groups.begin();
    std::size_t si = std::find(c.series.begin(), c.series.end(), s) - c.series.begin();
    auto [it, fresh] = best.emplace(std::make_pair(gi, si), b.value);
    if (!fresh) it->second = std::max(it->second, b.value);
  }
  for (const auto& [k, v] : best) c.bars[k.first][k.second]->value = v;
  return c;
}

std::string heatmap_data(const Heatmap& h) {
  std::ostringstream out;
  out << "# memchar-plot heatmap\n";
  out << "title\t" << field(h.title) << "\n";
  out << "unit\t" << field(h.unit) << "\n";
  out << "rows\t" << field(h.row_axis);
  for (const auto& r : h.rows) out << '\t' << field(r);
  out << "\ncols\t" << field(h.col_axis);
  for (const auto& c : h.cols) out << '\t' << field(c);
  out << "\n";
  for (std::size_t i = 0; i < h.rows.size(); ++i)
    for (std::size_t j = 0; j < h.cols.size(); ++j)
      if (h.values[i][j]) out << "cell\t" << h.rows[i] << '\t' << h.cols[j] << '\t' << format_number(*h.values[i][j]) << "\n";
  return out.str();
}

std::string bars_data(const BarChart& b) {
  std::ostringstream out;
  out << "# memchar-plot grouped_bars\n";
  out << "title\t" << field(b.title) << "\n";
  out << "unit\t" << field(b.unit) << "\n";
  out << "columns\tgroup\tseries\tvalue\tmin\tmax\n";
  for (std::size_t g = 0; g < b.groups.size(); ++g)
    for (std::size_t s = 0; s < b.series.size(); ++s)
      if (const auto& bar = b.bars[g][s])
        out << "bar\t" << field(b.groups[g]) << '\t' << field(b.series[s]) << '\t' << format_number(bar->value) << '\t'
            << format_number(bar->min) << '\t' << format_number(bar->max) << "\n";
  return out.str();
}

std::string heatmap_svg(const Heatmap& h) {
  const int cell = 48, left = 90, top = 70;
  int w = left + cell * static_cast<int>(h.cols.size()) + 20;
  int ht = top + cell * static_cast<int>(h.rows.size()) + 40;
  double lo = 0, hi = 0;
  bool any = false;
  for (const auto& row : h.values)
    for (const auto& v : row)
      if (v) {
        lo = any ? std::min(lo, *v) : *v;
        hi = any ? std::max(hi, *v) : *v;
        any = true;
      }
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << ht
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(h.title) << " ("
    << xml_escape(h.unit) << ")</text>\n";
  o << "<text x=\"" << left + cell * static_cast<int>(h.cols.size()) / 2 << "\" y=\"42\" text-anchor=\"middle\">"
    << xml_escape(h.col_axis) << "</text>\n";
  o << "<text x=\"16\" y=\"" << top + cell * static_cast<int>(h.rows.size()) / 2
    << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << top + cell * static_cast<int>(h.rows.size()) / 2
    << ")\">" << xml_escape(h.row_axis) << "</text>\n";
  for (std::size_t j = 0; j < h.cols.size(); ++j)
    o << "<text x=\"" << left + cell * static_cast<int>(j) + cell / 2 << "\" y=\"" << top - 6
      << "\" text-anchor=\"middle\">" << xml_escape(h.cols[j]) << "</text>\n";
  for (std::size_t i = 0; i < h.rows.size(); ++i) {
    int y = top + cell * static_cast<int>(i);
    o << "<text x=\"" << left - 8 << "\" y=\"" << y + cell / 2 + 4 << "\" text-anchor=\"end\">" << xml_escape(h.rows[i])
      << "</text>\n";
    for (std::size_t j = 0; j < h.cols.size(); ++j) {
      int x = left + cell * static_cast<int>(j);
      const auto& v = h.values[i][j];
      double t = v && hi > lo ? (*v - lo) / (hi - lo) : 0.5;
      o << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\""
        << (v ? shade(t) : std::string("#dddddd")) << "\" stroke=\"white\"/>\n";
      if (v && h.annotate)
        o << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4 << "\" text-anchor=\"middle\" fill=\""
          << (t > 0.6 ? "white" : "black") << "\">" << fixed(*v, std::abs(*v - std::round(*v)) < 1e-9 ? 0 : 1)
          << "</text>\n";
    }
  }
  o << "</svg>\n";
  return o.str();
}

std::string bars_svg(const BarChart& b) {
  const int bw = 14, gap = 24, left = 70, top = 40, plot_h = 300;
  int per_group = bw * static_cast<int>(b.series.size()) + gap;
  int plot_w = per_group * static_cast<int>(b.groups.size());
  int legend_h = 16 * static_cast<int>(b.series.size());
  int w = left + plot_w + 20;
  int ht = top + plot_h + 40 + legend_h;
  double hi = 0;
  for (const auto& g : b.bars)
    for (const auto& bar : g)
      if (bar) hi = std::max({hi, bar->value, bar->max});
  if (hi <= 0) hi = 1;
  auto ypos = [&](double v) { return top + plot_h - plot_h * v / hi; };
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << ht
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << w / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(b.title)
    << "</text>\n";
  o << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + plot_h
    << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w << "\" y2=\"" << top + plot_h
    << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    double v = hi * k / 4;
    o << "<text x=\"" << left - 6 << "\" y=\"" << fixed(ypos(v) + 4, 1) << "\" text-anchor=\"end\">" << fixed(v, 0)
      << "</text>\n";
  }
  o << "<text x=\"14\" y=\"" << top + plot_h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
    << top + plot_h / 2 << ")\">" << xml_escape(b.unit) << "</text>\n";
  for (std::size_t g = 0; g < b.groups.size(); ++g) {
    int gx = left + gap / 2 + per_group * static_cast<int>(g);
    o << "<text x=\"" << gx + bw * static_cast<int>(b.series.size()) / 2 << "\" y=\"" << top + plot_h + 16
      << "\" text-anchor=\"middle\">" << xml_escape(b.groups[g]) << "</text>\n";
    for (std::size_t s = 0; s < b.series.size(); ++s) {
      const auto& bar = b.bars[g][s];
      if (!bar) continue;
      int x = gx + bw * static_cast<int>(s);
      double y = ypos(bar->value);
      o << "<rect x=\"" << x << "\" y=\"" << fixed(y, 2) << "\" width=\"" << bw - 2 << "\" height=\""
        << fixed(top + plot_h - y, 2) << "\" fill=\"" << kPalette[s % 10] << "\"/>\n";
      if (bar->max > bar->min) {
        double cx = x + (bw - 2) / 2.0;
        o << "<line x1=\"" << fixed(cx, 1) << "\" y1=\"" << fixed(ypos(bar->min), 2) << "\" x2=\"" << fixed(cx, 1)
          << "\" y2=\"" << fixed(ypos(bar->max), 2) << "\" stroke=\"black\"/>\n";
        o << "<line x1=\"" << fixed(cx - 3, 1) << "\" y1=\"" << fixed(ypos(bar->max), 2) << "\" x2=\""
          << fixed(cx + 3, 1) << "\" y2=\"" << fixed(ypos(bar->max), 2) << "\" stroke=\"black\"/>\n";
      }
    }
  }
  for (std::size_t s = 0; s < b.series.size(); ++s) {
    int y = top + plot_h + 30 + 16 * static_cast<int>(s);
    o << "<rect x=\"" << left << "\" y=\"" << y << "\" width=\"10\" height=\"10\" fill=\"" << kPalette[s % 10]
      << "\"/>\n";
    o << "<text x=\"" << left + 16 << "\" y=\"" << y + 9 << "\">" << xml_escape(b.series[s]) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

PlotFiles render_plot(const ResultSet& rs, PlotKind kind, const std::string& title) {
  if (!rs.latency.empty() && !rs.bandwidth.empty())
    throw ConfigError("mixed units: latency (cycles) and bandwidth (B/cycle) records in one plot");
  if (rs.latency.empty() && rs.bandwidth.empty()) throw ConfigError("nothing to plot");
  if (kind == PlotKind::heatmap) {
    if (rs.latency.empty()) throw ConfigError("heat maps need latency records");
    auto h = heatmap_from_latency(rs.latency);
    if (!title.empty()) h.title = title;
    return {heatmap_svg(h), heatmap_data(h)};
  }
  auto b = rs.latency.empty() ? bars_from_bandwidth(rs.bandwidth) : bars_from_latency(rs.latency);
  if (!title.empty()) b.title = title;
  return {bars_svg(b), bars_data(b)};
}

std::vector<std::string> emit_plot(const ResultSet& rs, PlotKind kind, const std::string& stem,
                                   const std::string& title) {
  auto files = render_plot(rs, kind, title);
  std::vector<std::string> paths{stem + ".svg", stem + ".data.txt"};
  write_text_file(paths[0], files.svg);
  write_text_file(paths[1], files.data);
  return paths;
}

}  // namespace memchar

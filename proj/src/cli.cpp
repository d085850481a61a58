#include "memchar/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "memchar/bandwidth.hpp"
#include "memchar/harness.hpp"
#include "memchar/model.hpp"
#include "memchar/plots.hpp"
#include "memchar/results.hpp"
#include "memchar/text.hpp"

extern char** environ;

namespace memchar {

namespace {

namespace fs = std::filesystem;

struct Common {
  std::string topology;
  std::string backend = "sim";
  std::uint64_t seed = 1;
  std::string out;
};

struct LatencyOpts {
  std::string scope = "local";
  std::string states = "M";
  std::string levels = "L1";
  std::string cores;
  int anchor = 0;
  std::optional<std::size_t> alignment;
  std::string sizes;
  std::string reducer;
  std::string model;
};

struct BandwidthOpts {
  std::string kernel = "read256";
  std::string levels;
  std::string sizes;
  std::string cores = "0";
  int repeats = 10;
  bool cross_node = false;
  std::optional<double> freq;
  std::string ladder;
  int node = 0;
  bool nontemporal = false;
};

struct ModelOpts {
  std::string input;
  std::string model;
  std::string free_links;
  std::string free_bases;
  std::string nodes;
  std::string state = "I";
  std::string level = "RAM";
};

struct ReportOpts {
  std::string input;
  std::string kind;
  std::string title;
  std::string name = "plot";
  std::string state;
  std::string level;
};

// Files produced by a command, in write order; nothing touches disk until the command succeeds.
struct Staged {
  std::vector<std::pair<std::string, std::string>> files;
  void add(std::string name, std::string content) { files.emplace_back(std::move(name), std::move(content)); }
};

std::vector<std::string> list(const std::string& s) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  for (auto& p : split(s, ',')) out.emplace_back(trim(p));
  return out;
}

std::uint64_t parse_bytes(std::string_view s) {
  s = trim(s);
  std::uint64_t mult = 1;
  if (!s.empty()) {
    char c = s.back();
    if (c == 'k' || c == 'K') mult = 1ull << 10;
    if (c == 'm' || c == 'M') mult = 1ull << 20;
    if (c == 'g' || c == 'G') mult = 1ull << 30;
    if (mult != 1) s.remove_suffix(1);
  }
  auto v = parse_int(s, "size");
  if (v <= 0) throw ConfigError("sizes must be positive");
  return static_cast<std::uint64_t>(v) * mult;
}

std::vector<int> parse_cores(const std::string& s) {
  std::vector<int> out;
  for (const auto& part : list(s)) {
    auto dash = part.find('-');
    if (dash != std::string::npos && dash > 0) {
      auto lo = parse_int(part.substr(0, dash), "core range");
      auto hi = parse_int(part.substr(dash + 1), "core range");
      if (hi < lo) throw ConfigError("empty core range '" + part + "'");
      for (auto c = lo; c <= hi; ++c) out.push_back(static_cast<int>(c));
    } else {
      out.push_back(static_cast<int>(parse_int(part, "core")));
    }
  }
  return out;
}

std::vector<CacheLevel> parse_levels(const std::string& s) {
  std::vector<CacheLevel> out;
  for (const auto& p : list(s)) out.push_back(parse_level(p));
  return out;
}

TopologyGraph load_graph(const std::string& spec) {
  if (spec.empty()) throw ConfigError("--topology is required");
  if (spec == "host") return load_topology(host_topology_document());
  return load_topology_file(spec);
}

LatencyModel load_model(const TopologyGraph& g, const std::string& path) {
  if (path.empty()) return LatencyModel::from_topology(g);
  try {
    return model_from_json(nlohmann::json::parse(read_text_file(path)), g);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::map<std::string, std::string> memchar_env() {
  std::map<std::string, std::string> env;
  for (char** e = environ; e && *e; ++e) {
    std::string kv(*e);
    if (kv.rfind("MEMCHAR_", 0) != 0) continue;
    auto eq = kv.find('=');
    if (eq != std::string::npos) env[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  return env;
}

// File-valued flags are stored absolute so a manifest replays from any directory.
std::vector<std::string> absolute_args(const std::vector<std::string>& args) {
  static const std::set<std::string> file_flags{"--topology", "--input", "--model"};
  std::vector<std::string> out;
  auto abs = [](const std::string& v) { return v == "host" ? v : fs::absolute(v).lexically_normal().string(); };
  for (std::size_t i = 0; i < args.size(); ++i) {
    const auto& a = args[i];
    auto eq = a.find('=');
    if (eq != std::string::npos && file_flags.count(a.substr(0, eq))) {
      out.push_back(a.substr(0, eq + 1) + abs(a.substr(eq + 1)));
    } else if (file_flags.count(a) && i + 1 < args.size()) {
      out.push_back(a);
      out.push_back(abs(args[++i]));
    } else {
      out.push_back(a);
    }
  }
  return out;
}

std::string csv_text(const std::vector<MeasurementRecord>& recs) {
  std::ostringstream ss;
  write_latency_csv(ss, recs, kManifestJson);
  return ss.str();
}

std::string csv_text(const std::vector<BandwidthRecord>& recs) {
  std::ostringstream ss;
  write_bandwidth_csv(ss, recs, kManifestJson);
  return ss.str();
}

void cmd_topo(const Common& c, Staged& st, std::ostream& out) {
  auto g = load_graph(c.topology);
  out << "topology " << g.name << ": " << (g.kind == GraphKind::mesh_2d ? "mesh" : "chiplet") << ", "
      << g.socket_count << " socket(s), " << g.core_count() << " cores, " << g.numa_nodes.size() << " NUMA node(s), "
      << g.l3_domains.size() << " L3 domain(s), " << to_string(g.protocol) << "\n";
  out << "caches: L1 " << g.caches.l1_bytes << " B, L2 " << g.caches.l2_bytes << " B, L3 " << g.caches.l3_bytes << " B per domain\n";
  if (g.kind == GraphKind::mesh_2d)
    for (int s = 0; s < static_cast<int>(g.grids.size()); ++s)
      out << "socket " << s << " mesh diameter " << mesh_diameter(g, s) << " hops\n";
  st.add("topology.json", serialize_topology(g).dump(2) + "\n");
}

void cmd_latency(const Common& c, const LatencyOpts& o, Staged& st, std::ostream& out) {
  auto g = load_graph(c.topology);
  auto scope = parse_scope(o.scope);
  std::vector<CoherenceState> states;
  for (const auto& s : list(o.states)) {
    auto v = parse_state(s);
    if (!state_valid_for(v, g.protocol))
      throw ConfigError("state " + s + " does not exist under " + std::string(to_string(g.protocol)));
    states.push_back(v);
  }
  auto levels = parse_levels(o.levels);
  if (states.empty() || levels.empty()) throw ConfigError("need at least one state and one level");

  auto policy = MeasurementPolicy::from_environment();
  policy.seed = c.seed;
  if (o.alignment) policy.alignment = *o.alignment;
  std::vector<std::size_t> sizes;
  for (const auto& s : list(o.sizes)) sizes.push_back(parse_bytes(s));
  if (!sizes.empty()) policy.sizes_per_level = static_cast<int>(sizes.size());
  policy.validate();

  std::optional<std::set<int>> keep;
  if (!o.cores.empty()) {
    auto v = parse_cores(o.cores);
    keep = std::set<int>(v.begin(), v.end());
  }
  std::vector<LatencyPoint> points;
  for (const auto& p : enumerate_placements(g, scope, o.anchor)) {
    if (keep && !keep->count(p.requester)) continue;
    for (auto s : states)
      for (auto l : levels) points.push_back({p, s, l});
  }
  if (points.empty()) throw ConfigError("placement scope '" + o.scope + "' is empty for the selected cores");

  std::unique_ptr<LatencyBackend> backend;
  if (parse_backend(c.backend) == BackendKind::native)
    backend = std::make_unique<NativeBackend>(g);
  else
    backend = std::make_unique<SimulatedBackend>(g, load_model(g, o.model));
  double overhead = calibrate_overhead(*backend, 10);

  std::vector<MeasurementRecord> recs;
  for (const auto& pt : points) {
    auto pol = policy;
    pol.reducer = o.reducer.empty() ? default_reducer(pt.placement, pt.level) : parse_reducer(o.reducer);
    if (sizes.empty()) {
      recs.push_back(measure_point(g, pt, pol, *backend, overhead));
    } else {
      std::vector<ChainSpec> chains;
      for (auto b : sizes) chains.push_back({b, pol.alignment, pol.seed, pol.huge_pages, pt.placement.home});
      recs.push_back(measure_latency(g, chains, plan_for(g, pt), pt, pol, *backend, overhead));
    }
  }
  for (const auto& r : recs)
    out << r.requester << " -> " << r.owner << " (node " << r.home << ") " << to_string(r.state) << " "
        << to_string(r.level) << ": " << format_number(r.latency_cycles) << " cycles\n";
  st.add(kLatencyCsv, csv_text(recs));
}

BandwidthPolicy bw_policy(const Common& c, const BandwidthOpts& o) {
  BandwidthPolicy p;
  p.seed = c.seed;
  p.repeats = o.repeats;
  if (p.repeats < 1) throw ConfigError("--repeats must be at least 1");
  p.single_node = !o.cross_node;
  p.frequency_mhz = o.freq;
  return p;
}

std::unique_ptr<BandwidthBackend> bw_backend(const Common& c, const TopologyGraph& g) {
  if (parse_backend(c.backend) == BackendKind::native) return std::make_unique<NativeBandwidth>(g);
  return std::make_unique<SimulatedBandwidth>(g);
}

void print_bw(std::ostream& out, const BandwidthRecord& r) {
  out << r.kernel_used << (r.degraded ? " (degraded)" : "") << " " << r.dataset_bytes << " B x"
      << r.core_set.size() << " " << to_string(r.level) << ": " << format_number(r.bytes_per_cycle) << " B/cycle, "
      << format_number(r.bandwidth_gbps) << " GB/s\n";
}

void cmd_bandwidth(const Common& c, const BandwidthOpts& o, bool triad, Staged& st, std::ostream& out) {
  auto g = load_graph(c.topology);
  auto policy = bw_policy(c, o);
  auto backend = bw_backend(c, g);
  KernelChoice k;
  if (triad) {
    k.triad = true;
    k.nontemporal = o.nontemporal;
  } else {
    k = parse_kernel_name(o.kernel);
    if (k.triad) throw ConfigError("use the triad command for triad kernels");
  }

  std::vector<std::uint64_t> sizes;
  for (const auto& s : list(o.sizes)) sizes.push_back(parse_bytes(s));
  if (sizes.empty()) {
    auto levels = parse_levels(o.levels.empty() ? (triad ? "RAM" : "L1,L2,L3,RAM") : o.levels);
    for (auto l : levels)
      for (auto b : preset_sizes(g, l)) {
        auto v = triad ? std::max<std::uint64_t>(64, b / 3 / 64 * 64) : b;
        if (std::find(sizes.begin(), sizes.end(), v) == sizes.end()) sizes.push_back(v);
      }
  }
  if (sizes.empty()) throw ConfigError("no dataset sizes");

  std::vector<BandwidthRecord> recs;
  if (!o.ladder.empty()) {
    if (sizes.size() != 1) throw ConfigError("a scaling ladder takes exactly one --sizes value");
    auto ladder = o.ladder == "node"    ? node_ladder(g, o.node)
                  : o.ladder == "cores" ? core_ladder(g, o.node)
                                        : throw ConfigError("unknown ladder '" + o.ladder + "' (node, cores)");
    auto series = scaling_series(ladder, k, sizes[0], policy, *backend);
    for (std::size_t i = 0; i < series.records.size(); ++i) {
      out << series.rungs[i].label << ": ";
      print_bw(out, series.records[i]);
    }
    if (series.saturation > 0)
      out << "saturates at rung " << series.saturation << " (" << series.rungs[series.saturation - 1].label << ")\n";
    recs = series.records;
  } else {
    auto cores = parse_cores(o.cores);
    if (cores.empty()) throw ConfigError("--cores selects no cores");
    for (auto b : sizes) {
      recs.push_back(triad ? run_triad(b, cores, k.nontemporal, policy, *backend)
                           : run_throughput(ThroughputKernel::for_width(k.width), b, cores, policy, *backend));
      print_bw(out, recs.back());
    }
  }
  st.add(kBandwidthCsv, csv_text(recs));
}

void cmd_model_fit(const Common& c, const ModelOpts& o, Staged& st, std::ostream& out) {
  auto g = load_graph(c.topology);
  if (o.input.empty()) throw ConfigError("model-fit needs --input");
  auto obs = read_observations_file(o.input);
  FitOptions fo;
  for (const auto& l : list(o.free_links)) fo.free_links.push_back(parse_link_class(l));
  if (!o.free_bases.empty()) fo.free_bases = list(o.free_bases);
  FitReport r;
  try {
    r = fit(g, load_model(g, o.model), obs, fo);
  } catch (const FitError& e) {
    std::string msg = e.what();
    for (const auto& p : e.unidentifiable) msg += "\n  unidentifiable: " + p;
    throw ConfigError(msg);
  }
  auto report = format_fit_report(r);
  out << report;
  st.add("model.json", model_to_json(r.model).dump(2) + "\n");
  st.add("fit_report.txt", report);
  std::vector<Observation> residuals;
  for (const auto& row : r.residuals) {
    auto ob = row.obs;
    ob.cycles = row.predicted;
    residuals.push_back(ob);
  }
  std::ostringstream ss;
  write_observations(ss, residuals);
  st.add("predicted.csv", ss.str());
}

void cmd_model_predict(const Common& c, const ModelOpts& o, Staged& st, std::ostream& out) {
  auto g = load_graph(c.topology);
  auto model = load_model(g, o.model);
  if (!o.input.empty()) {
    auto obs = read_observations_file(o.input);
    auto rep = compare(g, model, obs);
    auto text = format_compare_report(rep);
    out << text;
    std::vector<Observation> pred;
    for (const auto& row : rep.rows) {
      auto ob = row.obs;
      ob.cycles = row.predicted;
      pred.push_back(ob);
    }
    std::ostringstream ss;
    write_observations(ss, pred);
    st.add("predicted.csv", ss.str());
    st.add("compare.txt", text);
    return;
  }
  std::vector<int> nodes;
  if (o.nodes.empty())
    for (const auto& n : g.numa_nodes) nodes.push_back(n.id);
  else
    nodes = parse_cores(o.nodes);
  auto m = predict_matrix(g, model, nodes, nodes, parse_state(o.state), parse_level(o.level));
  std::ostringstream ss;
  write_matrix(ss, m);
  out << ss.str();
  auto h = heatmap_from_matrix(m);
  st.add("matrix.csv", ss.str());
  st.add("matrix.svg", heatmap_svg(h));
  st.add("matrix.data.txt", heatmap_data(h));
}

void cmd_report(const ReportOpts& o, Staged& st, std::ostream& out) {
  if (o.input.empty()) throw ConfigError("report needs --input");
  std::optional<PlotKind> kind;
  if (!o.kind.empty()) kind = parse_plot_kind(o.kind);
  PlotFiles files;
  if (fs::is_directory(o.input)) {
    auto rs = read_result_set(o.input);
    auto keep = [&](const MeasurementRecord& r) {
      return (o.state.empty() || r.state == parse_state(o.state)) && (o.level.empty() || r.level == parse_level(o.level));
    };
    std::erase_if(rs.latency, [&](const auto& r) { return !keep(r); });
    files = render_plot(rs, kind.value_or(PlotKind::grouped_bars), o.title);
  } else {
    auto text = read_text_file(o.input);
    std::istringstream in(text);
    if (text.rfind("# memchar-observations", 0) == 0) {
      if (kind == PlotKind::heatmap) throw ConfigError("mismatched axes: observations plot as grouped bars");
      auto b = bars_from_observations(read_observations(in));
      if (!o.title.empty()) b.title = o.title;
      files = {bars_svg(b), bars_data(b)};
    } else if (text.rfind("# memchar-matrix", 0) == 0) {
      if (kind == PlotKind::grouped_bars) throw ConfigError("mismatched axes: a matrix plots as a heat map");
      auto h = heatmap_from_matrix(read_matrix(in));
      if (!o.title.empty()) h.title = o.title;
      files = {heatmap_svg(h), heatmap_data(h)};
    } else {
      auto rs = read_result_file(o.input);
      std::erase_if(rs.latency, [&](const MeasurementRecord& r) {
        return (!o.state.empty() && r.state != parse_state(o.state)) ||
               (!o.level.empty() && r.level != parse_level(o.level));
      });
      files = render_plot(rs, kind.value_or(PlotKind::grouped_bars), o.title);
    }
  }
  st.add(o.name + ".svg", files.svg);
  st.add(o.name + ".data.txt", files.data);
  out << files.data;
}

void write_outputs(const std::string& dir, const Staged& st, RunManifest m, std::ostream& out) {
  if (dir.empty()) throw ConfigError("--out is required");
  fs::create_directories(dir);
  for (const auto& [name, content] : st.files) {
    write_text_file((fs::path(dir) / name).string(), content);
    m.outputs.push_back(name);
    out << "wrote " << (fs::path(dir) / name).string() << "\n";
  }
  write_manifest((fs::path(dir) / kManifestJson).string(), m);
}

int exit_code_for(std::exception_ptr e, std::ostream& err) {
  try {
    std::rethrow_exception(e);
  } catch (const ConfigError& x) {
    err << "config error: " << x.what() << "\n";
    return kExitConfig;
  } catch (const PinningError& x) {
    err << "pinning error: " << x.what() << "\n";
    return kExitPinning;
  } catch (const BackendError& x) {
    err << "backend error: " << x.what() << "\n";
    return kExitBackend;
  } catch (const VerificationError& x) {
    err << "verification failed: " << x.what() << "\n";
    return kExitVerification;
  } catch (const std::bad_alloc&) {
    err << "backend error: out of memory\n";
    return kExitBackend;
  } catch (const fs::filesystem_error& x) {
    err << "config error: " << x.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& x) {
    err << "internal error: " << x.what() << "\n";
    return kExitInternal;
  }
}

// Applies the manifest's MEMCHAR_* environment for the duration of a replay.
class EnvScope {
 public:
  explicit EnvScope(const std::map<std::string, std::string>& env) : saved_(memchar_env()) { apply(env); }
  ~EnvScope() { apply(saved_); }

 private:
  static void apply(const std::map<std::string, std::string>& env) {
    for (const auto& [k, v] : memchar_env())
      if (!env.count(k)) unsetenv(k.c_str());
    for (const auto& [k, v] : env) setenv(k.c_str(), v.c_str(), 1);
  }
  std::map<std::string, std::string> saved_;
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Memory hierarchy characterization: latency, bandwidth, coherence-state placement and model fitting."};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  Common c;
  LatencyOpts lo;
  BandwidthOpts bo;
  ModelOpts mo;
  ReportOpts ro;
  std::string manifest_path;

  auto common = [&](CLI::App* s, bool backend) {
    s->add_option("--topology", c.topology, "topology JSON file, or 'host'");
    if (backend) s->add_option("--backend", c.backend, "native or sim")->capture_default_str();
    s->add_option("--seed", c.seed, "RNG seed")->capture_default_str();
    s->add_option("--out", c.out, "output directory")->required();
  };

  auto* topo = app.add_subcommand("topo", "load a topology and write its normalized form");
  common(topo, false);

  auto* lat = app.add_subcommand("latency", "pointer-chase latency for placement x state x level");
  common(lat, true);
  lat->add_option("--scope", lo.scope, "local, same_ccx, same_ccd, intra_socket, inter_socket, all_pairs")
      ->capture_default_str();
  lat->add_option("--state", lo.states, "comma list of M,O,E,S,F,I")->capture_default_str();
  lat->add_option("--level", lo.levels, "comma list of L1,L2,L3,RAM")->capture_default_str();
  lat->add_option("--cores", lo.cores, "requester cores to keep, e.g. 0-3,8");
  lat->add_option("--anchor", lo.anchor, "anchor core of the scope")->capture_default_str();
  lat->add_option("--alignment", lo.alignment, "chain element alignment in bytes");
  lat->add_option("--sizes", lo.sizes, "chain sizes, e.g. 16K,32K (default: per-level presets)");
  lat->add_option("--reducer", lo.reducer, "min, max or median (default depends on placement)");
  lat->add_option("--model", lo.model, "latency model JSON for the simulated backend");

  auto* bw = app.add_subcommand("bandwidth", "streaming read throughput");
  common(bw, true);
  bw->add_option("--kernel", bo.kernel, "read128, read256 or read512")->capture_default_str();
  bw->add_option("--level", bo.levels, "preset sizes for these levels (default L1,L2,L3,RAM)");
  bw->add_option("--sizes", bo.sizes, "per-core dataset sizes, e.g. 16K,1M");
  bw->add_option("--cores", bo.cores, "core set, e.g. 0-3")->capture_default_str();
  bw->add_option("--repeats", bo.repeats)->capture_default_str();
  bw->add_flag("--cross-node", bo.cross_node, "allow core sets spanning NUMA nodes");
  bw->add_option("--freq", bo.freq, "pinned core clock in MHz");
  bw->add_option("--ladder", bo.ladder, "scaling ladder: node or cores");
  bw->add_option("--node", bo.node, "NUMA node for --ladder")->capture_default_str();

  auto* tr = app.add_subcommand("triad", "a = b + s*c bandwidth");
  common(tr, true);
  tr->add_option("--level", bo.levels, "preset sizes for these levels (default RAM)");
  tr->add_option("--sizes", bo.sizes, "per-array sizes, e.g. 64M");
  tr->add_option("--cores", bo.cores, "core set, e.g. 0-3")->capture_default_str();
  tr->add_option("--repeats", bo.repeats)->capture_default_str();
  tr->add_flag("--nt", bo.nontemporal, "non-temporal stores");
  tr->add_flag("--cross-node", bo.cross_node, "allow core sets spanning NUMA nodes");
  tr->add_option("--freq", bo.freq, "pinned core clock in MHz");
  tr->add_option("--ladder", bo.ladder, "scaling ladder: node or cores");
  tr->add_option("--node", bo.node, "NUMA node for --ladder")->capture_default_str();

  auto* mf = app.add_subcommand("model-fit", "fit model parameters to observations");
  common(mf, false);
  mf->add_option("--input", mo.input, "observations CSV")->required();
  mf->add_option("--model", mo.model, "starting model JSON (default: the topology's)");
  mf->add_option("--free-links", mo.free_links, "link classes to fit, e.g. if_switch_hop");
  mf->add_option("--free-bases", mo.free_bases, "base keys to fit (default: all touched)");

  auto* mp = app.add_subcommand("model-predict", "predict observations or a node matrix");
  common(mp, false);
  mp->add_option("--input", mo.input, "observations CSV to compare against");
  mp->add_option("--model", mo.model, "model JSON (default: the topology's)");
  mp->add_option("--nodes", mo.nodes, "matrix nodes, e.g. 0-7 (default: all)");
  mp->add_option("--state", mo.state)->capture_default_str();
  mp->add_option("--level", mo.level)->capture_default_str();

  auto* rp = app.add_subcommand("report", "plot a result set, observations or matrix");
  rp->add_option("--input", ro.input, "result directory or file")->required();
  rp->add_option("--kind", ro.kind, "heatmap or grouped_bars");
  rp->add_option("--title", ro.title);
  rp->add_option("--name", ro.name, "output file stem")->capture_default_str();
  rp->add_option("--state", ro.state, "keep latency records in this state");
  rp->add_option("--level", ro.level, "keep latency records at this level");
  rp->add_option("--seed", c.seed);
  rp->add_option("--out", c.out, "output directory")->required();

  auto* rep = app.add_subcommand("replay", "rerun a manifest into a new directory");
  rep->add_option("--manifest", manifest_path)->required();
  rep->add_option("--out", c.out, "output directory")->required();

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    auto* sub = app.get_subcommands().front();
    std::string name = sub->get_name();
    if (name == "replay") {
      auto m = read_manifest(manifest_path);
      std::vector<std::string> again{m.command};
      for (std::size_t i = 0; i < m.args.size(); ++i) {
        if (m.args[i] == "--out" && i + 1 < m.args.size()) {
          ++i;
          continue;
        }
        if (m.args[i].rfind("--out=", 0) == 0) continue;
        again.push_back(m.args[i]);
      }
      again.push_back("--out");
      again.push_back(c.out);
      EnvScope env(m.env);
      return run_cli(again, out, err);
    }

    Staged st;
    if (name == "topo") cmd_topo(c, st, out);
    else if (name == "latency") cmd_latency(c, lo, st, out);
    else if (name == "bandwidth") cmd_bandwidth(c, bo, false, st, out);
    else if (name == "triad") cmd_bandwidth(c, bo, true, st, out);
    else if (name == "model-fit") cmd_model_fit(c, mo, st, out);
    else if (name == "model-predict") cmd_model_predict(c, mo, st, out);
    else if (name == "report") cmd_report(ro, st, out);

    RunManifest m;
    m.command = name;
    m.args = absolute_args(std::vector<std::string>(args.begin() + 1, args.end()));
    m.topology = c.topology.empty() || c.topology == "host" ? c.topology : fs::absolute(c.topology).string();
    m.backend = c.backend;
    m.seed = c.seed;
    m.out = c.out;
    m.env = memchar_env();
    write_outputs(c.out, st, m, out);
    return kExitOk;
  } catch (...) {
    return exit_code_for(std::current_exception(), err);
  }
}

}  // namespace memchar

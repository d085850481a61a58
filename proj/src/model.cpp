#include "memchar/model.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "memchar/text.hpp"

namespace memchar {

using json = nlohmann::json;
using CS = CoherenceState;

std::string_view to_string(Locality l) {
  switch (l) {
    case Locality::local: return "local";
    case Locality::same_l3: return "same_l3";
    case Locality::remote: return "remote";
    case Locality::forwarded: return "forwarded";
  }
  return "?";
}

LatencyModel LatencyModel::defaults(const TopologyGraph& g) {
  LatencyModel m;
  m.frequencies = g.frequencies;
  for (const auto& [cls, cost] : g.link_costs)
    if (cls != LinkClass::local) m.link_ns[cls] = g.link_cost_ns(cls);
  return m;
}

LatencyModel LatencyModel::from_topology(const TopologyGraph& g) {
  if (g.latency_model_section.is_null()) return defaults(g);
  return model_from_json(g.latency_model_section, g);
}

json model_to_json(const LatencyModel& m) {
  json j;
  j["base"] = json::object();
  for (const auto& [k, v] : m.base) j["base"][k] = v;
  j["link_ns"] = json::object();
  for (const auto& [c, v] : m.link_ns) j["link_ns"][std::string(to_string(c))] = v;
  return j;
}

LatencyModel model_from_json(const json& j, const TopologyGraph& g) {
  LatencyModel m = LatencyModel::defaults(g);
  if (!j.is_object()) throw ConfigError("latency_model must be an object");
  if (j.contains("base")) {
    const json base = j.at("base");
    for (auto it = base.begin(); it != base.end(); ++it) {
      if (!it.value().is_number()) throw ConfigError("latency_model.base." + it.key() + " must be a number");
      double v = it.value().get<double>();
      if (v < 0) throw ConfigError("latency_model.base." + it.key() + " is negative");
      m.base[it.key()] = v;
    }
  }
  if (j.contains("link_ns")) {
    const json links = j.at("link_ns");
    for (auto it = links.begin(); it != links.end(); ++it) {
      if (!it.value().is_number()) throw ConfigError("latency_model.link_ns." + it.key() + " must be a number");
      double v = it.value().get<double>();
      if (v < 0) throw ConfigError("latency_model.link_ns." + it.key() + " is negative");
      m.link_ns[parse_link_class(it.key())] = v;
    }
  }
  return m;
}

namespace {

DataSource core_src(int c, CacheLevel l) { return {SourceKind::core_cache, c, l, CS::I, 0}; }
DataSource l3_src(int d) { return {SourceKind::l3_domain, d, CacheLevel::L3, CS::I, 0}; }
DataSource mem_src() { return {SourceKind::memory, -1, CacheLevel::RAM, CS::I, 0}; }

void check_query(const TopologyGraph& g, const LatencyQuery& q) {
  int n = g.core_count();
  if (q.requester < 0 || q.requester >= n) throw ConfigError("requester core " + std::to_string(q.requester) + " out of range");
  if (q.home < 0 || q.home >= static_cast<int>(g.numa_nodes.size()))
    throw ConfigError("home node " + std::to_string(q.home) + " out of range");
  if (q.forwarder) {
    if (*q.forwarder < 0 || *q.forwarder >= n)
      throw ConfigError("forwarder core " + std::to_string(*q.forwarder) + " out of range");
    if (*q.forwarder == q.requester) throw ConfigError("forwarder given for a local access");
  }
  if (!state_valid_for(q.state, g.protocol))
    throw ConfigError("state " + std::string(to_string(q.state)) + " does not exist under " +
                      std::string(to_string(g.protocol)));
}

int source_numa(const TopologyGraph& g, const DataSource& s) {
  if (s.kind == SourceKind::core_cache) return g.core_numa[s.index];
  if (s.kind == SourceKind::l3_domain) return g.l3_domains[s.index].numa;
  return -1;
}

int source_node(const TopologyGraph& g, const DataSource& s) {
  if (s.kind == SourceKind::core_cache) return g.core_node[s.index];
  if (s.kind == SourceKind::l3_domain) {
    int n = g.l3_domains[s.index].node;
    if (n < 0) throw ConfigError("L3 domain " + std::to_string(s.index) + " has no fabric location");
    return n;
  }
  return -1;
}

void add_leg(const TopologyGraph& g, int a, int b, std::map<LinkClass, int>& acc) {
  if (a < 0 || b < 0 || a == b) return;
  for (const auto& [c, n] : count_traversals(route(g, a, b))) acc[c] += n;
}

}  // namespace

DataSource resolve_source(const TopologyGraph& g, const LatencyQuery& q) {
  check_query(g, q);
  if (q.state == CS::I || q.level == CacheLevel::RAM) return mem_src();
  const bool moesi = g.protocol == Protocol::MOESI;
  const int r = q.requester;
  const int owner = q.forwarder.value_or(r);
  const int dr = g.core_l3[r];
  const int dow = g.core_l3[owner];
  const bool at_l3 = q.level == CacheLevel::L3;

  std::optional<int> helper;
  if (needs_helper(q.state)) {
    auto m = ProtocolModel::from_topology(g);
    helper = choose_helper(m, r, owner);
    if (!helper) throw ConfigError("state " + std::string(to_string(q.state)) + " needs a helper core");
  }
  const int dh = helper ? g.core_l3[*helper] : -1;

  if (owner == r) return at_l3 ? l3_src(dr) : core_src(r, q.level);

  if (moesi) {
    // anything inside the requester's own CCX is handed over through its L3 domain
    if (dow == dr) return l3_src(dr);
    // no owner exists for S; only clean copies in the requester's domain can supply
    if (q.state == CS::S) return dh == dr ? l3_src(dr) : mem_src();
    return at_l3 ? l3_src(dow) : core_src(owner, q.level);
  }

  if (q.state == CS::M || q.state == CS::E) return at_l3 ? l3_src(dow) : core_src(owner, q.level);

  // MESIF S/F: the second reader of the plan installs a shared copy in its L3
  std::set<int> l3_holders;
  int f_domain;
  if (q.state == CS::F) {
    l3_holders.insert(dow);
    if (at_l3) l3_holders.insert(dh);
    f_domain = dow;
  } else {
    l3_holders.insert(dh);
    if (at_l3) l3_holders.insert(dow);
    f_domain = dh;
  }
  if (l3_holders.count(dr)) return l3_src(dr);
  return l3_src(f_domain);
}

PricedPath price_path(const TopologyGraph& g, const LatencyQuery& q, const DataSource& src) {
  check_query(g, q);
  PricedPath p;
  const int r = q.requester;
  const int rn = g.core_node[r];
  const int owner = q.forwarder.value_or(r);
  const int mc = g.numa_nodes[q.home].memory_controller;

  if (src.kind == SourceKind::memory) {
    p.base_key = "RAM";
    p.locality = q.home == g.core_numa[r] ? Locality::local : Locality::remote;
    add_leg(g, rn, mc, p.traversals);
    add_leg(g, mc, rn, p.traversals);
    return p;
  }
  if (src.kind == SourceKind::none) throw ConfigError("read has no data source");

  const int dr = g.core_l3[r];
  bool own = (src.kind == SourceKind::core_cache && src.index == r) ||
             (src.kind == SourceKind::l3_domain && src.index == dr && owner == r);
  bool in_domain = (src.kind == SourceKind::core_cache && g.core_l3[src.index] == dr) ||
                   (src.kind == SourceKind::l3_domain && src.index == dr);
  if (own)
    p.locality = Locality::local;
  else if (in_domain)
    p.locality = Locality::same_l3;
  else
    p.locality = source_numa(g, src) == q.home ? Locality::remote : Locality::forwarded;

  p.base_key = std::string(to_string(q.level)) + "." + std::string(state_class(g.protocol, q.state)) + "." +
               std::string(to_string(p.locality));

  if (p.locality == Locality::same_l3) {
    int s = source_node(g, src);
    add_leg(g, rn, s, p.traversals);
    add_leg(g, s, rn, p.traversals);
  } else if (p.locality != Locality::local) {
    int s = source_node(g, src);
    int h = mc >= 0 ? mc : s;
    add_leg(g, rn, h, p.traversals);
    add_leg(g, h, s, p.traversals);
    add_leg(g, s, rn, p.traversals);
    // exclusive lines need the home's ownership answer before the data arrives
    if (q.state == CS::M || q.state == CS::E) add_leg(g, rn, h, p.traversals);
  }
  return p;
}

double path_cycles(const LatencyModel& m, const PricedPath& p) {
  auto it = m.base.find(p.base_key);
  if (it == m.base.end()) throw ConfigError("latency model has no base for '" + p.base_key + "'");
  double cycles = it->second;
  for (const auto& [cls, n] : p.traversals) {
    auto lc = m.link_ns.find(cls);
    double ns = lc == m.link_ns.end() ? 0.0 : lc->second;
    cycles += n * ns * m.frequencies.core_mhz / 1000.0;
  }
  return cycles;
}

double predict(const TopologyGraph& g, const LatencyModel& m, const LatencyQuery& q) {
  return path_cycles(m, price_path(g, q, resolve_source(g, q)));
}

std::string base_param(const std::string& key) { return "base:" + key; }
std::string link_param(LinkClass c) { return "link:" + std::string(to_string(c)); }

FitReport fit(const TopologyGraph& g, const LatencyModel& start, const std::vector<Observation>& obs,
              const FitOptions& opts) {
  if (obs.empty()) throw ConfigError("fit needs at least one observation");
  std::vector<PricedPath> paths;
  paths.reserve(obs.size());
  for (const auto& o : obs) paths.push_back(price_path(g, o.query, resolve_source(g, o.query)));

  std::vector<std::string> bases;
  if (opts.free_bases) {
    bases = *opts.free_bases;
  } else {
    std::set<std::string> touched;
    for (const auto& p : paths) touched.insert(p.base_key);
    bases.assign(touched.begin(), touched.end());
  }
  std::map<std::string, int> base_col;
  std::map<LinkClass, int> link_col;
  std::vector<std::string> names;
  for (const auto& b : bases) {
    if (base_col.count(b)) throw ConfigError("free base '" + b + "' listed twice");
    base_col[b] = static_cast<int>(names.size());
    names.push_back(base_param(b));
  }
  for (auto c : opts.free_links) {
    if (link_col.count(c)) throw ConfigError("free link '" + std::string(to_string(c)) + "' listed twice");
    link_col[c] = static_cast<int>(names.size());
    names.push_back(link_param(c));
  }

  const double k = start.frequencies.core_mhz / 1000.0;
  const int n = static_cast<int>(obs.size());
  const int p = static_cast<int>(names.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, p);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    double fixed = 0;
    const auto& path = paths[i];
    if (auto it = base_col.find(path.base_key); it != base_col.end()) {
      A(i, it->second) = 1;
    } else {
      auto b = start.base.find(path.base_key);
      if (b == start.base.end())
        throw ConfigError("base '" + path.base_key + "' is neither free nor set in the starting model");
      fixed += b->second;
    }
    for (const auto& [cls, cnt] : path.traversals) {
      if (auto it = link_col.find(cls); it != link_col.end()) {
        A(i, it->second) += cnt * k;
      } else {
        auto lc = start.link_ns.find(cls);
        fixed += cnt * (lc == start.link_ns.end() ? 0.0 : lc->second) * k;
      }
    }
    y(i) = obs[i].cycles - fixed;
  }

  FitReport rep;
  rep.parameters = names;
  if (p > 0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    qr.setThreshold(1e-10);
    rep.rank = static_cast<int>(qr.rank());
    if (rep.rank < p) {
      Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
      lu.setThreshold(1e-10);
      Eigen::MatrixXd ker = lu.kernel();
      std::vector<std::string> bad;
      for (int j = 0; j < p; ++j)
        if (ker.row(j).cwiseAbs().maxCoeff() > 1e-9) bad.push_back(names[j]);
      throw FitError("design matrix has rank " + std::to_string(rep.rank) + " for " + std::to_string(p) +
                         " parameters; unidentifiable: " + join(bad, ", "),
                     bad);
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
    const auto& sv = svd.singularValues();
    double cond_a = sv(sv.size() - 1) > 0 ? sv(0) / sv(sv.size() - 1) : INFINITY;
    rep.condition = cond_a * cond_a;
    Eigen::MatrixXd N = A.transpose() * A;
    Eigen::VectorXd rhs = A.transpose() * y;
    if (rep.condition > 1e12) {
      rep.ridge_used = true;
      rep.ridge_lambda = 1e-9;
      N += rep.ridge_lambda * Eigen::MatrixXd::Identity(p, p);
    }
    Eigen::VectorXd x = N.ldlt().solve(rhs);
    rep.values.assign(x.data(), x.data() + p);
  }

  rep.model = start;
  for (const auto& [b, j] : base_col) {
    if (rep.values[j] < 0) throw ConfigError("fitted " + names[j] + " is negative (" + format_number(rep.values[j]) + ")");
    rep.model.base[b] = rep.values[j];
  }
  for (const auto& [c, j] : link_col) {
    if (rep.values[j] < 0) throw ConfigError("fitted " + names[j] + " is negative (" + format_number(rep.values[j]) + ")");
    rep.model.link_ns[c] = rep.values[j];
  }

  double sq = 0;
  for (int i = 0; i < n; ++i) {
    Residual r{obs[i], path_cycles(rep.model, paths[i]), 0};
    r.error = r.predicted - obs[i].cycles;
    rep.max_abs_error = std::max(rep.max_abs_error, std::abs(r.error));
    sq += r.error * r.error;
    rep.residuals.push_back(std::move(r));
  }
  rep.rms_error = std::sqrt(sq / n);
  for (auto d : {FreqDomain::core_clk, FreqDomain::fclk, FreqDomain::uncore_clk}) {
    double mhz = g.domain_mhz(d);
    if (mhz > 0) rep.conversion[d] = g.frequencies.core_mhz / mhz;
  }
  return rep;
}

namespace {

std::string describe_query(const LatencyQuery& q) {
  std::ostringstream os;
  os << "r=" << q.requester << " home=" << q.home << " fwd=" << (q.forwarder ? std::to_string(*q.forwarder) : "-")
     << " " << to_string(q.state) << " " << to_string(q.level);
  return os.str();
}

}  // namespace

std::string format_fit_report(const FitReport& r) {
  std::ostringstream os;
  os << "parameters " << r.parameters.size() << ", rank " << r.rank << "\n";
  for (std::size_t i = 0; i < r.parameters.size(); ++i)
    os << "  " << std::left << std::setw(28) << r.parameters[i] << " " << format_number(r.values[i]) << "\n";
  if (r.ridge_used)
    os << "ridge damping lambda=" << format_number(r.ridge_lambda) << " (normal matrix condition "
       << format_number(r.condition) << ")\n";
  else
    os << "ridge damping: none\n";
  os << "core cycles per domain cycle:";
  for (const auto& [d, f] : r.conversion) os << " " << to_string(d) << "=" << format_number(f);
  os << "\n";
  os << "max |error| " << format_number(r.max_abs_error) << " cycles, rms " << format_number(r.rms_error) << "\n";
  for (const auto& res : r.residuals)
    os << "  " << std::left << std::setw(40) << describe_query(res.obs.query) << " measured "
       << format_number(res.obs.cycles) << " predicted " << format_number(res.predicted) << " error "
       << format_number(res.error) << (res.obs.label.empty() ? "" : "  " + res.obs.label) << "\n";
  return os.str();
}

CompareReport compare(const TopologyGraph& g, const LatencyModel& m, const std::vector<Observation>& obs,
                      double class_tolerance) {
  CompareReport rep;
  std::map<std::string, ClassSummary> keys;
  double sum = 0;
  for (const auto& o : obs) {
    auto path = price_path(g, o.query, resolve_source(g, o.query));
    Residual r{o, path_cycles(m, path), 0};
    r.error = r.predicted - o.cycles;
    double a = std::abs(r.error);
    rep.max_abs = std::max(rep.max_abs, a);
    sum += a;
    auto& ks = keys[path.base_key];
    ks.key = path.base_key;
    ++ks.count;
    ks.max_abs = std::max(ks.max_abs, a);
    ks.mean_abs += a;
    rep.rows.push_back(std::move(r));
  }
  if (!obs.empty()) rep.mean_abs = sum / obs.size();
  for (auto& [k, s] : keys) {
    s.mean_abs /= s.count;
    rep.per_key.push_back(s);
  }
  std::vector<int> order(rep.rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return rep.rows[a].predicted < rep.rows[b].predicted; });
  std::vector<int> cls(rep.rows.size());
  for (int i : order) {
    if (rep.classes.empty() || rep.rows[i].predicted - rep.rows[rep.classes.back().front()].predicted > class_tolerance)
      rep.classes.emplace_back();
    rep.classes.back().push_back(i);
    cls[i] = static_cast<int>(rep.classes.size()) - 1;
  }
  for (std::size_t i = 0; i < rep.rows.size(); ++i)
    for (std::size_t j = 0; j < rep.rows.size(); ++j)
      if (cls[i] < cls[j] && rep.rows[i].obs.cycles > rep.rows[j].obs.cycles) ++rep.ordering_violations;
  return rep;
}

std::string format_compare_report(const CompareReport& r) {
  std::ostringstream os;
  os << "rows " << r.rows.size() << ", max |error| " << format_number(r.max_abs) << ", mean |error| "
     << format_number(r.mean_abs) << ", ordering violations " << r.ordering_violations << "\n";
  for (const auto& k : r.per_key)
    os << "  " << std::left << std::setw(22) << k.key << " n=" << k.count << " max " << format_number(k.max_abs)
       << " mean " << format_number(k.mean_abs) << "\n";
  for (std::size_t c = 0; c < r.classes.size(); ++c) {
    os << "class " << c << ":";
    for (int i : r.classes[c]) os << " [" << describe_query(r.rows[i].obs.query) << " " << format_number(r.rows[i].predicted) << "]";
    os << "\n";
  }
  return os.str();
}

namespace {

constexpr std::string_view kObsMagic = "# memchar-observations v1";
constexpr std::string_view kObsHeader = "requester,home,forwarder,state,level,cycles,label";
constexpr std::string_view kMatrixMagic = "# memchar-matrix v1";

}  // namespace

std::vector<Observation> read_observations(std::istream& in) {
  std::string line;
  int lineno = 0;
  if (!next_line(in, line, lineno) || line != kObsMagic)
    throw ConfigError("observation file must start with '" + std::string(kObsMagic) + "'");
  if (!next_line(in, line, lineno) || line != kObsHeader)
    throw ConfigError("observation header must be '" + std::string(kObsHeader) + "'");
  std::vector<Observation> out;
  while (next_line(in, line, lineno)) {
    if (line[0] == '#') continue;
    auto f = split(line, ',');
    std::string where = "line " + std::to_string(lineno);
    if (f.size() != 7) throw ConfigError(where + ": expected 7 fields, got " + std::to_string(f.size()));
    Observation o;
    o.query.requester = static_cast<int>(parse_int(f[0], where + " requester"));
    o.query.home = static_cast<int>(parse_int(f[1], where + " home"));
    if (!trim(f[2]).empty()) o.query.forwarder = static_cast<int>(parse_int(f[2], where + " forwarder"));
    o.query.state = parse_state(trim(f[3]));
    o.query.level = parse_level(trim(f[4]));
    o.cycles = parse_number(f[5], where + " cycles");
    if (o.cycles <= 0) throw ConfigError(where + ": cycles must be positive");
    o.label = std::string(trim(f[6]));
    out.push_back(std::move(o));
  }
  return out;
}

std::vector<Observation> read_observations_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open observation file '" + path + "'");
  try {
    return read_observations(in);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void write_observations(std::ostream& out, const std::vector<Observation>& obs) {
  out << kObsMagic << "\n" << kObsHeader << "\n";
  for (const auto& o : obs) {
    if (o.label.find(',') != std::string::npos) throw ConfigError("observation labels cannot contain commas");
    out << o.query.requester << "," << o.query.home << "," << (o.query.forwarder ? std::to_string(*o.query.forwarder) : "")
        << "," << to_string(o.query.state) << "," << to_string(o.query.level) << "," << format_number(o.cycles) << ","
        << o.label << "\n";
  }
}

void write_matrix(std::ostream& out, const LatencyMatrix& m) {
  out << kMatrixMagic << "\n";
  out << "# rows=" << m.row_axis << " cols=" << m.col_axis << " state=" << to_string(m.state)
      << " level=" << to_string(m.level) << " freq_mhz=" << format_number(m.freq_mhz) << "\n";
  out << m.row_axis << "\\" << m.col_axis;
  for (int c : m.cols) out << "," << c;
  out << "\n";
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    out << m.rows[i];
    for (std::size_t j = 0; j < m.cols.size(); ++j) {
      out << ",";
      if (m.cycles[i][j]) out << format_number(*m.cycles[i][j]);
    }
    out << "\n";
  }
}

LatencyMatrix read_matrix(std::istream& in) {
  std::string line;
  int lineno = 0;
  if (!next_line(in, line, lineno) || line != kMatrixMagic)
    throw ConfigError("matrix file must start with '" + std::string(kMatrixMagic) + "'");
  if (!next_line(in, line, lineno) || line.rfind("# ", 0) != 0) throw ConfigError("matrix metadata line missing");
  LatencyMatrix m;
  bool have_freq = false;
  for (const auto& kv : split(std::string_view(line).substr(2), ' ')) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("bad matrix metadata '" + kv + "'");
    std::string k = kv.substr(0, eq), v = kv.substr(eq + 1);
    if (k == "rows") m.row_axis = v;
    else if (k == "cols") m.col_axis = v;
    else if (k == "state") m.state = parse_state(v);
    else if (k == "level") m.level = parse_level(v);
    else if (k == "freq_mhz") {
      m.freq_mhz = parse_number(v, "freq_mhz");
      have_freq = true;
    } else
      throw ConfigError("unknown matrix metadata key '" + k + "'");
  }
  if (!have_freq || m.freq_mhz <= 0) throw ConfigError("matrix metadata needs a positive freq_mhz");
  if (!next_line(in, line, lineno)) throw ConfigError("matrix header row missing");
  auto head = split(line, ',');
  if (head[0] != m.row_axis + "\\" + m.col_axis) throw ConfigError("matrix header does not name the axes");
  for (std::size_t j = 1; j < head.size(); ++j) m.cols.push_back(static_cast<int>(parse_int(head[j], "column label")));
  while (next_line(in, line, lineno)) {
    auto f = split(line, ',');
    if (f.size() != head.size())
      throw ConfigError("matrix line " + std::to_string(lineno) + " has " + std::to_string(f.size()) + " fields, expected " +
                        std::to_string(head.size()));
    m.rows.push_back(static_cast<int>(parse_int(f[0], "row label")));
    std::vector<std::optional<double>> row;
    for (std::size_t j = 1; j < f.size(); ++j) {
      if (trim(f[j]).empty()) {
        row.push_back(std::nullopt);
        continue;
      }
      double v = parse_number(f[j], "matrix entry");
      if (v <= 0) throw ConfigError("matrix entries must be positive");
      row.push_back(v);
    }
    m.cycles.push_back(std::move(row));
  }
  return m;
}

std::vector<Observation> matrix_observations(const TopologyGraph& g, const LatencyMatrix& m) {
  std::vector<Observation> out;
  for (std::size_t i = 0; i < m.rows.size(); ++i)
    for (std::size_t j = 0; j < m.cols.size(); ++j) {
      if (!m.cycles[i][j]) continue;
      int rn = m.rows[i];
      if (rn < 0 || rn >= static_cast<int>(g.numa_nodes.size()) || g.numa_nodes[rn].cores.empty())
        throw ConfigError("matrix row node " + std::to_string(rn) + " has no cores");
      Observation o;
      o.query = {g.numa_nodes[rn].cores.front(), m.cols[j], std::nullopt, m.state, m.level};
      o.cycles = *m.cycles[i][j];
      o.label = "node " + std::to_string(rn) + " -> " + std::to_string(m.cols[j]);
      out.push_back(std::move(o));
    }
  return out;
}

LatencyMatrix predict_matrix(const TopologyGraph& g, const LatencyModel& model, const std::vector<int>& rows,
                             const std::vector<int>& cols, CoherenceState s, CacheLevel l) {
  LatencyMatrix m;
  m.rows = rows;
  m.cols = cols;
  m.state = s;
  m.level = l;
  m.freq_mhz = model.frequencies.core_mhz;
  for (int rn : rows) {
    if (rn < 0 || rn >= static_cast<int>(g.numa_nodes.size()) || g.numa_nodes[rn].cores.empty())
      throw ConfigError("node " + std::to_string(rn) + " has no cores");
    std::vector<std::optional<double>> row;
    for (int c : cols) row.push_back(predict(g, model, {g.numa_nodes[rn].cores.front(), c, std::nullopt, s, l}));
    m.cycles.push_back(std::move(row));
  }
  return m;
}

}  // namespace memchar

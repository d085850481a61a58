#include "memchar/results.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "memchar/text.hpp"

namespace memchar {

const char* const kLatencyCsv = "latency.csv";
const char* const kBandwidthCsv = "bandwidth.csv";
const char* const kManifestJson = "manifest.json";

namespace {

const std::string kLatencyMagic = "# memchar-latency v" + std::to_string(kResultSchemaVersion);
const std::string kBandwidthMagic = "# memchar-bandwidth v" + std::to_string(kResultSchemaVersion);
constexpr std::string_view kLatencyHeader =
    "backend,requester,owner,home,forwarder,state,level,bytes,samples,min_cycles,max_cycles,median_cycles,freq_mhz,"
    "reducer,latency_cycles,alignment,huge_pages,seed,overhead_cycles";
constexpr std::string_view kBandwidthHeader =
    "backend,kernel,kernel_used,degraded,dataset_bytes,cores,level,bytes_moved,elapsed_cycles,bytes_per_cycle,"
    "bandwidth_gbps,freq_mhz,samples_bpc";

template <class T, class F>
std::string join_list(const std::vector<T>& v, F fmt) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ';';
    s += fmt(v[i]);
  }
  return s;
}

std::vector<std::string> list_fields(std::string_view s) {
  if (trim(s).empty()) return {};
  return split(s, ';');
}

std::uint64_t parse_u64(std::string_view s, const std::string& what) {
  s = trim(s);
  std::uint64_t v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || s.empty())
    throw ConfigError(what + ": bad unsigned integer '" + std::string(s) + "'");
  return v;
}

bool parse_bool(std::string_view s, const std::string& what) {
  if (s == "1") return true;
  if (s == "0") return false;
  throw ConfigError(what + ": expected 0 or 1");
}

std::string read_magic(std::istream& in, const std::string& magic, std::string_view header, int& lineno,
                       std::string* manifest) {
  std::string line;
  if (!next_line(in, line, lineno) || line.rfind(magic, 0) != 0)
    throw ConfigError("result file must start with '" + magic + "'");
  std::string rest(trim(std::string_view(line).substr(magic.size())));
  std::string ref;
  if (!rest.empty()) {
    if (rest.rfind("manifest=", 0) != 0) throw ConfigError("unexpected text after the schema tag: '" + rest + "'");
    ref = rest.substr(9);
  }
  if (manifest) *manifest = ref;
  if (!next_line(in, line, lineno) || line != header) throw ConfigError("result header must be '" + std::string(header) + "'");
  return ref;
}

}  // namespace

void write_latency_csv(std::ostream& out, const std::vector<MeasurementRecord>& recs, const std::string& manifest) {
  out << kLatencyMagic;
  if (!manifest.empty()) out << " manifest=" << manifest;
  out << "\n" << kLatencyHeader << "\n";
  for (const auto& r : recs) {
    out << to_string(r.backend) << ',' << r.requester << ',' << r.owner << ',' << r.home << ','
        << (r.forwarder ? std::to_string(*r.forwarder) : "") << ',' << to_string(r.state) << ',' << to_string(r.level)
        << ',' << join_list(r.bytes, [](std::uint64_t b) { return std::to_string(b); }) << ','
        << join_list(r.samples, format_number) << ',' << format_number(r.stats.min) << ','
        << format_number(r.stats.max) << ',' << format_number(r.stats.median) << ',' << format_number(r.freq_mhz)
        << ',' << to_string(r.reducer) << ',' << format_number(r.latency_cycles) << ',' << r.alignment << ','
        << (r.huge_pages ? 1 : 0) << ',' << r.seed << ',' << format_number(r.overhead_cycles) << "\n";
  }
}

std::vector<MeasurementRecord> read_latency_csv(std::istream& in, std::string* manifest) {
  int lineno = 0;
  read_magic(in, kLatencyMagic, kLatencyHeader, lineno, manifest);
  std::vector<MeasurementRecord> out;
  std::string line;
  while (next_line(in, line, lineno)) {
    auto f = split(line, ',');
    std::string w = "line " + std::to_string(lineno);
    if (f.size() != 19) throw ConfigError(w + ": expected 19 fields, got " + std::to_string(f.size()));
    MeasurementRecord r;
    r.backend = parse_backend(f[0]);
    r.requester = static_cast<int>(parse_int(f[1], w + " requester"));
    r.owner = static_cast<int>(parse_int(f[2], w + " owner"));
    r.home = static_cast<int>(parse_int(f[3], w + " home"));
    if (!trim(f[4]).empty()) r.forwarder = static_cast<int>(parse_int(f[4], w + " forwarder"));
    r.state = parse_state(f[5]);
    r.level = parse_level(f[6]);
    for (const auto& b : list_fields(f[7])) r.bytes.push_back(parse_u64(b, w + " bytes"));
    for (const auto& s : list_fields(f[8])) r.samples.push_back(parse_number(s, w + " samples"));
    r.stats.min = parse_number(f[9], w + " min_cycles");
    r.stats.max = parse_number(f[10], w + " max_cycles");
    r.stats.median = parse_number(f[11], w + " median_cycles");
    r.freq_mhz = parse_number(f[12], w + " freq_mhz");
    r.reducer = parse_reducer(f[13]);
    r.latency_cycles = parse_number(f[14], w + " latency_cycles");
    r.alignment = static_cast<std::size_t>(parse_u64(f[15], w + " alignment"));
    r.huge_pages = parse_bool(f[16], w + " huge_pages");
    r.seed = parse_u64(f[17], w + " seed");
    r.overhead_cycles = parse_number(f[18], w + " overhead_cycles");
    out.push_back(std::move(r));
  }
  return out;
}

void write_bandwidth_csv(std::ostream& out, const std::vector<BandwidthRecord>& recs, const std::string& manifest) {
  out << kBandwidthMagic;
  if (!manifest.empty()) out << " manifest=" << manifest;
  out << "\n" << kBandwidthHeader << "\n";
  for (const auto& r : recs) {
    for (const auto* s : {&r.kernel, &r.kernel_used})
      if (s->find_first_of(",;") != std::string::npos) throw ConfigError("kernel names cannot contain ',' or ';'");
    out << to_string(r.backend) << ',' << r.kernel << ',' << r.kernel_used << ',' << (r.degraded ? 1 : 0) << ','
        << r.dataset_bytes << ',' << join_list(r.core_set, [](int c) { return std::to_string(c); }) << ','
        << to_string(r.level) << ',' << format_number(r.bytes_moved) << ',' << format_number(r.elapsed_cycles) << ','
        << format_number(r.bytes_per_cycle) << ',' << format_number(r.bandwidth_gbps) << ','
        << format_number(r.frequency_mhz) << ',' << join_list(r.samples_bpc, format_number) << "\n";
  }
}

std::vector<BandwidthRecord> read_bandwidth_csv(std::istream& in, std::string* manifest) {
  int lineno = 0;
  read_magic(in, kBandwidthMagic, kBandwidthHeader, lineno, manifest);
  std::vector<BandwidthRecord> out;
  std::string line;
  while (next_line(in, line, lineno)) {
    auto f = split(line, ',');
    std::string w = "line " + std::to_string(lineno);
    if (f.size() != 13) throw ConfigError(w + ": expected 13 fields, got " + std::to_string(f.size()));
    BandwidthRecord r;
    r.backend = parse_backend(f[0]);
    r.kernel = f[1];
    r.kernel_used = f[2];
    r.degraded = parse_bool(f[3], w + " degraded");
    r.dataset_bytes = parse_u64(f[4], w + " dataset_bytes");
    for (const auto& c : list_fields(f[5])) r.core_set.push_back(static_cast<int>(parse_int(c, w + " cores")));
    r.level = parse_level(f[6]);
    r.bytes_moved = parse_number(f[7], w + " bytes_moved");
    r.elapsed_cycles = parse_number(f[8], w + " elapsed_cycles");
    r.bytes_per_cycle = parse_number(f[9], w + " bytes_per_cycle");
    r.bandwidth_gbps = parse_number(f[10], w + " bandwidth_gbps");
    r.frequency_mhz = parse_number(f[11], w + " freq_mhz");
    for (const auto& s : list_fields(f[12])) r.samples_bpc.push_back(parse_number(s, w + " samples_bpc"));
    out.push_back(std::move(r));
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << content;
  if (!out) throw ConfigError("write to '" + path + "' failed");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> write_result_set(const std::string& dir, const ResultSet& rs) {
  namespace fs = std::filesystem;
  std::vector<std::string> paths;
  if (!rs.latency.empty()) {
    std::ostringstream ss;
    write_latency_csv(ss, rs.latency, rs.manifest);
    paths.push_back((fs::path(dir) / kLatencyCsv).string());
    write_text_file(paths.back(), ss.str());
  }
  if (!rs.bandwidth.empty()) {
    std::ostringstream ss;
    write_bandwidth_csv(ss, rs.bandwidth, rs.manifest);
    paths.push_back((fs::path(dir) / kBandwidthCsv).string());
    write_text_file(paths.back(), ss.str());
  }
  return paths;
}

ResultSet read_result_file(const std::string& path) {
  std::string text = read_text_file(path);
  std::istringstream in(text);
  ResultSet rs;
  try {
    if (text.rfind(kLatencyMagic, 0) == 0)
      rs.latency = read_latency_csv(in, &rs.manifest);
    else if (text.rfind(kBandwidthMagic, 0) == 0)
      rs.bandwidth = read_bandwidth_csv(in, &rs.manifest);
    else
      throw ConfigError("not a memchar result file (schema v" + std::to_string(kResultSchemaVersion) + ")");
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return rs;
}

ResultSet read_result_set(const std::string& dir) {
  namespace fs = std::filesystem;
  ResultSet rs;
  bool any = false;
  for (const char* name : {kLatencyCsv, kBandwidthCsv}) {
    auto p = fs::path(dir) / name;
    if (!fs::exists(p)) continue;
    auto part = read_result_file(p.string());
    if (any && part.manifest != rs.manifest) throw ConfigError(dir + ": result files name different manifests");
    rs.manifest = part.manifest;
    for (auto& r : part.latency) rs.latency.push_back(std::move(r));
    for (auto& r : part.bandwidth) rs.bandwidth.push_back(std::move(r));
    any = true;
  }
  if (!any) throw ConfigError(dir + ": no result files");
  return rs;
}

nlohmann::json manifest_to_json(const RunManifest& m) {
  return {{"schema", "memchar-manifest/1"}, {"command", m.command}, {"args", m.args},       {"topology", m.topology},
          {"backend", m.backend},           {"seed", m.seed},       {"out", m.out},         {"env", m.env},
          {"outputs", m.outputs}};
}

RunManifest manifest_from_json(const nlohmann::json& j) {
  try {
    if (j.value("schema", "") != "memchar-manifest/1") throw ConfigError("manifest schema must be memchar-manifest/1");
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.args = j.at("args").get<std::vector<std::string>>();
    m.topology = j.value("topology", "");
    m.backend = j.value("backend", "");
    m.seed = j.value("seed", std::uint64_t{1});
    m.out = j.value("out", "");
    m.env = j.value("env", std::map<std::string, std::string>{});
    m.outputs = j.value("outputs", std::vector<std::string>{});
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad manifest: ") + e.what());
  }
}

void write_manifest(const std::string& path, const RunManifest& m) {
  write_text_file(path, manifest_to_json(m).dump(2) + "\n");
}

RunManifest read_manifest(const std::string& path) {
  auto text = read_text_file(path);
  try {
    return manifest_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace memchar

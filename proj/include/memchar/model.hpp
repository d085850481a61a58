#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "memchar/coherence.hpp"
#include "memchar/topology.hpp"

namespace memchar {

enum class Locality { local, same_l3, remote, forwarded };
std::string_view to_string(Locality l);

// Per-level base latencies plus link costs. Base keys are "<level>.<class>.<locality>"
// (e.g. "L2.ME.remote") or "RAM" for anything served by memory.
struct LatencyModel {
  std::map<std::string, double> base;    // cycles
  std::map<LinkClass, double> link_ns;   // ns per traversal per direction
  Frequencies frequencies;

  // Link costs taken from the topology's link_costs table, no bases.
  static LatencyModel defaults(const TopologyGraph& g);
  // The topology's embedded latency_model section on top of defaults().
  static LatencyModel from_topology(const TopologyGraph& g);
  bool operator==(const LatencyModel&) const = default;
};

nlohmann::json model_to_json(const LatencyModel& m);
LatencyModel model_from_json(const nlohmann::json& j, const TopologyGraph& g);

struct LatencyQuery {
  int requester = 0;
  int home = 0;                    // NUMA node
  std::optional<int> forwarder;    // owner core; none means requester owns the line
  CoherenceState state = CoherenceState::I;
  CacheLevel level = CacheLevel::RAM;
};

struct Observation {
  LatencyQuery query;
  double cycles = 0;
  std::string label;
};

// Where the requester's read is served from, decided without running the simulator.
DataSource resolve_source(const TopologyGraph& g, const LatencyQuery& q);

struct PricedPath {
  std::string base_key;
  Locality locality = Locality::local;
  std::map<LinkClass, int> traversals;
};

// Base key and link traversals for a read served by `src`.
PricedPath price_path(const TopologyGraph& g, const LatencyQuery& q, const DataSource& src);

double path_cycles(const LatencyModel& m, const PricedPath& p);

// Throws ConfigError on illegal tuples or when the model lacks the needed base.
double predict(const TopologyGraph& g, const LatencyModel& m, const LatencyQuery& q);

std::string base_param(const std::string& key);  // "base:<key>"
std::string link_param(LinkClass c);             // "link:<class>"

struct FitOptions {
  // Unset: every base key the observations touch.
  std::optional<std::vector<std::string>> free_bases;
  std::vector<LinkClass> free_links;
};

struct Residual {
  Observation obs;
  double predicted = 0;
  double error = 0;  // predicted - measured
};

struct FitReport {
  LatencyModel model;
  std::vector<std::string> parameters;
  std::vector<double> values;
  std::vector<Residual> residuals;
  int rank = 0;
  bool ridge_used = false;
  double ridge_lambda = 0;
  double condition = 0;
  double max_abs_error = 0;
  double rms_error = 0;
  std::map<FreqDomain, double> conversion;  // core cycles per domain cycle
};

class FitError : public ConfigError {
 public:
  FitError(const std::string& msg, std::vector<std::string> unidentifiable)
      : ConfigError(msg), unidentifiable(std::move(unidentifiable)) {}
  std::vector<std::string> unidentifiable;
};

FitReport fit(const TopologyGraph& g, const LatencyModel& start, const std::vector<Observation>& obs,
              const FitOptions& opts = {});

std::string format_fit_report(const FitReport& r);

struct ClassSummary {
  std::string key;
  int count = 0;
  double max_abs = 0;
  double mean_abs = 0;
};

struct CompareReport {
  std::vector<Residual> rows;
  double max_abs = 0;
  double mean_abs = 0;
  std::vector<ClassSummary> per_key;
  // rows grouped by predicted value; classes[0] is the fastest
  std::vector<std::vector<int>> classes;
  int ordering_violations = 0;  // pairs ordered one way by prediction and the other by measurement
};

CompareReport compare(const TopologyGraph& g, const LatencyModel& m, const std::vector<Observation>& obs,
                      double class_tolerance = 3.0);

std::string format_compare_report(const CompareReport& r);

// "# memchar-observations v1" followed by requester,home,forwarder,state,level,cycles,label
std::vector<Observation> read_observations(std::istream& in);
std::vector<Observation> read_observations_file(const std::string& path);
void write_observations(std::ostream& out, const std::vector<Observation>& obs);

struct LatencyMatrix {
  std::string row_axis = "requester_node";
  std::string col_axis = "home_node";
  std::vector<int> rows;
  std::vector<int> cols;
  std::vector<std::vector<std::optional<double>>> cycles;  // [row][col]
  CoherenceState state = CoherenceState::I;
  CacheLevel level = CacheLevel::RAM;
  double freq_mhz = 0;
};

void write_matrix(std::ostream& out, const LatencyMatrix& m);
LatencyMatrix read_matrix(std::istream& in);
// Requester is the first core of each row node.
std::vector<Observation> matrix_observations(const TopologyGraph& g, const LatencyMatrix& m);
LatencyMatrix predict_matrix(const TopologyGraph& g, const LatencyModel& model, const std::vector<int>& rows,
                             const std::vector<int>& cols, CoherenceState s = CoherenceState::I,
                             CacheLevel l = CacheLevel::RAM);

}  // namespace memchar

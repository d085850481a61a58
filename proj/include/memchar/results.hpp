#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "memchar/bandwidth.hpp"
#include "memchar/harness.hpp"

namespace memchar {

// Bump on any column change.
inline constexpr int kResultSchemaVersion = 1;

struct ResultSet {
  int schema_version = kResultSchemaVersion;
  std::string manifest;  // file name of the manifest written next to the CSVs
  std::vector<MeasurementRecord> latency;
  std::vector<BandwidthRecord> bandwidth;
  bool operator==(const ResultSet&) const = default;
};

// "# memchar-latency v1 manifest=<ref>", then a fixed header row.
void write_latency_csv(std::ostream& out, const std::vector<MeasurementRecord>& recs, const std::string& manifest);
std::vector<MeasurementRecord> read_latency_csv(std::istream& in, std::string* manifest = nullptr);
void write_bandwidth_csv(std::ostream& out, const std::vector<BandwidthRecord>& recs, const std::string& manifest);
std::vector<BandwidthRecord> read_bandwidth_csv(std::istream& in, std::string* manifest = nullptr);

extern const char* const kLatencyCsv;    // "latency.csv"
extern const char* const kBandwidthCsv;  // "bandwidth.csv"
extern const char* const kManifestJson;  // "manifest.json"

// Writes latency.csv and/or bandwidth.csv (whichever has records); returns the paths.
std::vector<std::string> write_result_set(const std::string& dir, const ResultSet& rs);
// Reads whichever of the two CSVs exist in `dir`.
ResultSet read_result_set(const std::string& dir);
// A single CSV of either kind.
ResultSet read_result_file(const std::string& path);

struct RunManifest {
  std::string command;
  std::vector<std::string> args;  // command-line arguments after the command name
  std::string topology;
  std::string backend;
  std::uint64_t seed = 1;
  std::string out;
  std::map<std::string, std::string> env;  // MEMCHAR_* overrides in effect
  std::vector<std::string> outputs;
  bool operator==(const RunManifest&) const = default;
};

nlohmann::json manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);
void write_manifest(const std::string& path, const RunManifest& m);
RunManifest read_manifest(const std::string& path);

// Writes `content` to `path`, replacing any existing file.
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace memchar

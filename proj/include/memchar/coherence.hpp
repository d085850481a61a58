#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "memchar/types.hpp"

namespace memchar {

class TopologyGraph;

enum class L3Policy { victim_exclusive, non_inclusive };
enum class Action { read, write, flush, evict };
enum class Worker { requester_0, owner_N, helper_M };

std::string_view to_string(Action a);
std::string_view to_string(Worker w);

struct ProtocolModel {
  Protocol protocol = Protocol::MOESI;
  L3Policy l3_policy = L3Policy::victim_exclusive;
  std::vector<int> core_domain;  // L3 domain of each core
  int domain_count = 0;

  // MOESI pairs with a victim L3, MESIF with a non-inclusive one.
  static ProtocolModel make(Protocol p, std::vector<int> core_domain);
  static ProtocolModel from_topology(const TopologyGraph& g);
  int cores() const { return static_cast<int>(core_domain.size()); }
};

// Private copy of one core; L2 is inclusive of L1, so `level` is the
// innermost level holding the line.
struct CoreLine {
  CoherenceState state = CoherenceState::I;
  CacheLevel level = CacheLevel::L1;
  std::uint64_t version = 0;
  bool operator==(const CoreLine&) const = default;
};

struct L3Line {
  CoherenceState state = CoherenceState::I;
  std::uint64_t version = 0;
  bool operator==(const L3Line&) const = default;
};

// Every cache's view of a single line.
struct StateMap {
  std::vector<CoreLine> core;
  std::vector<L3Line> l3;
  std::uint64_t memory_version = 0;
  bool operator==(const StateMap&) const = default;
};

StateMap initial_state(const ProtocolModel& m);

enum class SourceKind { none, core_cache, l3_domain, memory };

struct DataSource {
  SourceKind kind = SourceKind::none;
  int index = -1;  // core id or L3 domain
  CacheLevel level = CacheLevel::RAM;
  CoherenceState state = CoherenceState::I;  // state at the source before the access
  std::uint64_t version = 0;
  bool operator==(const DataSource&) const = default;
};

std::string describe(const DataSource& s);

struct Event {
  int core = 0;
  Action action = Action::read;
  CacheLevel level = CacheLevel::L1;  // evict only: level being vacated
  std::uint64_t value = 0;            // write only: new data version
};

struct StepResult {
  StateMap map;
  DataSource source;  // filled for reads and writes
};

StepResult protocol_step(const ProtocolModel& m, const StateMap& s, const Event& e);

// At most one {M,E,O,F} holder; M/E holders are alone; O/F only under their protocol.
bool check_invariants(const ProtocolModel& m, const StateMap& s, std::string* why = nullptr);

struct ScriptStep {
  Worker worker = Worker::owner_N;
  Action action = Action::read;
  std::uint64_t line = 0;
  CacheLevel level = CacheLevel::L1;  // evict only
};

struct TargetCache {
  int core = 0;
  CacheLevel level = CacheLevel::L1;
};

struct CoherenceScript {
  std::vector<ScriptStep> steps;
  CoherenceState target_state = CoherenceState::I;
  TargetCache target;
  int requester = -1;  // -1: not bound yet
  int owner = 0;
  std::optional<int> helper;
  int core_of(Worker w) const;
};

bool needs_helper(CoherenceState s);

// States reported jointly: {M,E} and {O,S} under MOESI; {S,F} under MESIF.
std::string_view state_class(Protocol p, CoherenceState s);

// First core sharing the owner's L3 domain that is neither owner nor requester;
// falls back to the lowest other core.
std::optional<int> choose_helper(const ProtocolModel& m, int requester, int owner);

CoherenceScript plan_state(CoherenceState state, const ProtocolModel& m, int owner, std::optional<int> helper);
CoherenceScript plan_state(CoherenceState state, const ProtocolModel& m, int requester, int owner,
                           std::optional<int> helper, CacheLevel level);

struct TraceEntry {
  std::size_t step = 0;
  int core = 0;
  Action action = Action::read;
  std::uint64_t line = 0;
  DataSource source;
};

class Simulator {
 public:
  explicit Simulator(ProtocolModel m);
  DataSource apply(int core, Action a, std::uint64_t line = 0, CacheLevel level = CacheLevel::L1);
  const StateMap& line(std::uint64_t line) const;
  std::uint64_t latest_write(std::uint64_t line) const;
  const ProtocolModel& model() const { return m_; }
  const std::map<std::uint64_t, StateMap>& lines() const { return lines_; }

 private:
  StateMap& slot(std::uint64_t line);
  ProtocolModel m_;
  StateMap empty_;
  std::map<std::uint64_t, StateMap> lines_;
  std::map<std::uint64_t, std::uint64_t> latest_;
  std::uint64_t next_value_ = 1;
};

struct SimResult {
  std::map<std::uint64_t, StateMap> lines;
  std::vector<TraceEntry> trace;
  StateMap line(std::uint64_t l, const ProtocolModel& m) const;
};

SimResult simulate(const CoherenceScript& script, const ProtocolModel& m);

// Checks that the script's postcondition holds in `s`.
bool target_reached(const CoherenceScript& script, const ProtocolModel& m, const StateMap& s,
                    std::string* why = nullptr);

// Two-core transition table, one core per L3 domain, as aligned text.
std::string transition_table(Protocol p);

}  // namespace memchar

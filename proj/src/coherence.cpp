#include "memchar/coherence.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "memchar/topology.hpp"

namespace memchar {

using CS = CoherenceState;

std::string_view to_string(Action a) {
  switch (a) {
    case Action::read: return "read";
    case Action::write: return "write";
    case Action::flush: return "flush";
    case Action::evict: return "evict";
  }
  return "?";
}

std::string_view to_string(Worker w) {
  switch (w) {
    case Worker::requester_0: return "requester_0";
    case Worker::owner_N: return "owner_N";
    case Worker::helper_M: return "helper_M";
  }
  return "?";
}

ProtocolModel ProtocolModel::make(Protocol p, std::vector<int> core_domain) {
  ProtocolModel m;
  m.protocol = p;
  m.l3_policy = p == Protocol::MOESI ? L3Policy::victim_exclusive : L3Policy::non_inclusive;
  m.domain_count = core_domain.empty() ? 0 : *std::max_element(core_domain.begin(), core_domain.end()) + 1;
  m.core_domain = std::move(core_domain);
  return m;
}

ProtocolModel ProtocolModel::from_topology(const TopologyGraph& g) { return make(g.protocol, g.core_l3); }

StateMap initial_state(const ProtocolModel& m) {
  StateMap s;
  s.core.resize(m.cores());
  s.l3.resize(m.domain_count);
  return s;
}

std::string describe(const DataSource& s) {
  std::ostringstream os;
  switch (s.kind) {
    case SourceKind::none: os << "none"; break;
    case SourceKind::core_cache: os << "core" << s.index << "." << to_string(s.level); break;
    case SourceKind::l3_domain: os << "l3." << s.index; break;
    case SourceKind::memory: os << "memory"; break;
  }
  if (s.kind == SourceKind::core_cache || s.kind == SourceKind::l3_domain) os << "(" << to_string(s.state) << ")";
  return os.str();
}

namespace {

int rank(CS s) {
  switch (s) {
    case CS::M: return 5;
    case CS::O: return 4;
    case CS::E: return 3;
    case CS::F: return 2;
    case CS::S: return 1;
    case CS::I: return 0;
  }
  return 0;
}

bool owner_like(CS s) { return s == CS::M || s == CS::E || s == CS::O || s == CS::F; }
bool dirty(CS s) { return s == CS::M || s == CS::O; }

bool any_holder(const StateMap& s) {
  for (const auto& c : s.core)
    if (c.state != CS::I) return true;
  for (const auto& l : s.l3)
    if (l.state != CS::I) return true;
  return false;
}

DataSource from_core(const StateMap& s, int k) {
  return {SourceKind::core_cache, k, s.core[k].level, s.core[k].state, s.core[k].version};
}
DataSource from_l3(const StateMap& s, int d) { return {SourceKind::l3_domain, d, CacheLevel::L3, s.l3[d].state, s.l3[d].version}; }
DataSource from_memory(const StateMap& s) { return {SourceKind::memory, -1, CacheLevel::RAM, CS::I, s.memory_version}; }

void read_moesi(const ProtocolModel& m, StateMap& s, int c, DataSource& src) {
  int d = m.core_domain[c];
  int owner_core = -1, owner_l3 = -1;
  for (int k = 0; k < m.cores(); ++k)
    if (s.core[k].state == CS::M || s.core[k].state == CS::E || s.core[k].state == CS::O) owner_core = k;
  for (int e = 0; e < m.domain_count; ++e)
    if (s.l3[e].state == CS::M || s.l3[e].state == CS::E || s.l3[e].state == CS::O) owner_l3 = e;
  auto& me = s.core[c];
  auto downgrade = [](CS st) { return st == CS::M ? CS::O : st == CS::E ? CS::S : st; };

  if (owner_l3 == d) {
    // victim hit moves the line back into the core
    src = from_l3(s, d);
    me = {s.l3[d].state, CacheLevel::L1, s.l3[d].version};
    s.l3[d] = {};
    return;
  }
  // transfers inside one L3 domain are mediated by its shadow tags
  auto via_domain = [&](DataSource ds) {
    if (ds.kind == SourceKind::core_cache && m.core_domain[ds.index] == d) {
      ds.kind = SourceKind::l3_domain;
      ds.index = d;
      ds.level = CacheLevel::L3;
    }
    return ds;
  };
  if (owner_core >= 0) {
    src = via_domain(from_core(s, owner_core));
    s.core[owner_core].state = downgrade(s.core[owner_core].state);
    me = {CS::S, CacheLevel::L1, src.version};
    return;
  }
  if (owner_l3 >= 0) {
    src = from_l3(s, owner_l3);
    s.l3[owner_l3].state = downgrade(s.l3[owner_l3].state);
    me = {CS::S, CacheLevel::L1, src.version};
    return;
  }
  if (s.l3[d].state == CS::S) {
    src = from_l3(s, d);
    me = {CS::S, CacheLevel::L1, s.l3[d].version};
    s.l3[d] = {};
    return;
  }
  for (int k = 0; k < m.cores(); ++k)
    if (k != c && m.core_domain[k] == d && s.core[k].state == CS::S) {
      src = via_domain(from_core(s, k));
      me = {CS::S, CacheLevel::L1, src.version};
      return;
    }
  src = from_memory(s);
  me = {any_holder(s) ? CS::S : CS::E, CacheLevel::L1, s.memory_version};
}

void read_mesif(const ProtocolModel& m, StateMap& s, int c, DataSource& src) {
  int d = m.core_domain[c];
  auto& me = s.core[c];
  auto keep_copy = [&](std::uint64_t v) {
    if (s.l3[d].state == CS::I) s.l3[d] = {CS::S, v};
  };

  if (s.l3[d].state == CS::M || s.l3[d].state == CS::E) {
    src = from_l3(s, d);
    me = {s.l3[d].state, CacheLevel::L1, s.l3[d].version};
    s.l3[d] = {};
    return;
  }
  for (int k = 0; k < m.cores(); ++k)
    if (s.core[k].state == CS::M || s.core[k].state == CS::E) {
      src = from_core(s, k);
      if (s.core[k].state == CS::M) s.memory_version = s.core[k].version;
      s.core[k].state = CS::S;
      me = {CS::F, CacheLevel::L1, src.version};
      keep_copy(src.version);
      return;
    }
  for (int e = 0; e < m.domain_count; ++e)
    if (s.l3[e].state == CS::M || s.l3[e].state == CS::E) {
      src = from_l3(s, e);
      if (s.l3[e].state == CS::M) s.memory_version = s.l3[e].version;
      s.l3[e].state = CS::S;
      me = {CS::F, CacheLevel::L1, src.version};
      keep_copy(src.version);
      return;
    }
  if (!any_holder(s)) {
    src = from_memory(s);
    me = {CS::E, CacheLevel::L1, s.memory_version};
    return;
  }
  // only S/F copies remain; shared lines are served by an L3
  if (s.l3[d].state != CS::I) {
    src = from_l3(s, d);
  } else {
    int f_core = -1, f_l3 = -1, any_l3 = -1;
    for (int k = 0; k < m.cores(); ++k)
      if (s.core[k].state == CS::F) f_core = k;
    for (int e = m.domain_count - 1; e >= 0; --e) {
      if (s.l3[e].state == CS::F) f_l3 = e;
      if (s.l3[e].state != CS::I) any_l3 = e;
    }
    if (f_l3 >= 0)
      src = from_l3(s, f_l3);
    else if (f_core >= 0)
      src = s.l3[m.core_domain[f_core]].state != CS::I ? from_l3(s, m.core_domain[f_core]) : from_core(s, f_core);
    else if (any_l3 >= 0)
      src = from_l3(s, any_l3);
    else
      src = from_memory(s);
  }
  for (auto& k : s.core)
    if (k.state == CS::F) k.state = CS::S;
  for (auto& e : s.l3)
    if (e.state == CS::F) e.state = CS::S;
  me = {CS::F, CacheLevel::L1, src.version};
  keep_copy(src.version);
}

}  // namespace

StepResult protocol_step(const ProtocolModel& m, const StateMap& in, const Event& e) {
  StepResult r{in, {}};
  auto& s = r.map;
  if (e.core < 0 || e.core >= m.cores()) throw ConfigError("event core " + std::to_string(e.core) + " out of range");
  int c = e.core;
  int d = m.core_domain[c];
  auto& me = s.core[c];
  switch (e.action) {
    case Action::read:
      if (me.state != CS::I) {
        r.source = from_core(s, c);
        me.level = CacheLevel::L1;
      } else if (m.protocol == Protocol::MOESI) {
        read_moesi(m, s, c, r.source);
      } else {
        read_mesif(m, s, c, r.source);
      }
      break;
    case Action::write: {
      if (me.state != CS::I) {
        r.source = from_core(s, c);
      } else {
        // the read-for-ownership source, for the trace only
        int best = 0;
        r.source = from_memory(s);
        for (int k = 0; k < m.cores(); ++k)
          if (rank(s.core[k].state) > best) {
            best = rank(s.core[k].state);
            r.source = from_core(s, k);
          }
        for (int x = 0; x < m.domain_count; ++x)
          if (rank(s.l3[x].state) > best) {
            best = rank(s.l3[x].state);
            r.source = from_l3(s, x);
          }
      }
      for (auto& k : s.core) k = {};
      for (auto& x : s.l3) x = {};
      me = {CS::M, CacheLevel::L1, e.value};
      break;
    }
    case Action::flush:
      for (auto& k : s.core) {
        if (dirty(k.state)) s.memory_version = k.version;
        k = {};
      }
      for (auto& x : s.l3) {
        if (dirty(x.state)) s.memory_version = x.version;
        x = {};
      }
      break;
    case Action::evict:
      if (e.level == CacheLevel::L1) {
        if (me.state != CS::I && me.level == CacheLevel::L1) me.level = CacheLevel::L2;
      } else if (e.level == CacheLevel::L2) {
        if (me.state != CS::I) {
          CoreLine out = me;
          me = {};
          auto& l3 = s.l3[d];
          if (l3.state == CS::I)
            l3 = {out.state, out.version};
          else if (rank(out.state) > rank(l3.state))
            l3 = {out.state, out.version};
        }
      } else if (e.level == CacheLevel::L3) {
        auto& l3 = s.l3[d];
        if (dirty(l3.state)) s.memory_version = l3.version;
        l3 = {};
      }
      break;
  }
  return r;
}

bool check_invariants(const ProtocolModel& m, const StateMap& s, std::string* why) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  int owners = 0, holders = 0, exclusive = 0;
  auto visit = [&](CS st) -> bool {
    if (st == CS::I) return true;
    ++holders;
    if (owner_like(st)) ++owners;
    if (st == CS::M || st == CS::E) ++exclusive;
    if (!state_valid_for(st, m.protocol)) return false;
    return true;
  };
  for (const auto& k : s.core)
    if (!visit(k.state)) return fail("state invalid for protocol");
  for (const auto& x : s.l3)
    if (!visit(x.state)) return fail("state invalid for protocol");
  if (owners > 1) return fail("more than one M/E/O/F holder");
  if (exclusive && holders > 1) return fail("M/E line has other copies");
  return true;
}

std::string_view state_class(Protocol p, CoherenceState s) {
  if (p == Protocol::MOESI) {
    if (s == CS::M || s == CS::E) return "ME";
    if (s == CS::O || s == CS::S) return "OS";
  } else {
    if (s == CS::M) return "M";
    if (s == CS::E) return "E";
    if (s == CS::S || s == CS::F) return "SF";
  }
  return "-";
}

bool needs_helper(CoherenceState s) { return s == CS::O || s == CS::S || s == CS::F; }

std::optional<int> choose_helper(const ProtocolModel& m, int requester, int owner) {
  int d = m.core_domain.at(owner);
  for (int k = 0; k < m.cores(); ++k)
    if (k != owner && k != requester && m.core_domain[k] == d) return k;
  for (int k = 0; k < m.cores(); ++k)
    if (k != owner && k != requester) return k;
  return std::nullopt;
}

int CoherenceScript::core_of(Worker w) const {
  switch (w) {
    case Worker::requester_0:
      if (requester < 0) throw ConfigError("script has no requester bound");
      return requester;
    case Worker::owner_N: return owner;
    case Worker::helper_M:
      if (!helper) throw ConfigError("script uses a helper but none is bound");
      return *helper;
  }
  return owner;
}

CoherenceScript plan_state(CoherenceState state, const ProtocolModel& m, int owner, std::optional<int> helper) {
  return plan_state(state, m, -1, owner, helper, CacheLevel::L1);
}

CoherenceScript plan_state(CoherenceState state, const ProtocolModel& m, int requester, int owner,
                           std::optional<int> helper, CacheLevel level) {
  if (!state_valid_for(state, m.protocol))
    throw ConfigError("state " + std::string(to_string(state)) + " does not exist under " +
                      std::string(to_string(m.protocol)));
  if (owner < 0 || owner >= m.cores()) throw ConfigError("owner core out of range");
  if (needs_helper(state)) {
    if (!helper) throw ConfigError("state " + std::string(to_string(state)) + " needs a helper core");
    if (*helper == owner) throw ConfigError("helper must differ from owner");
    if (*helper < 0 || *helper >= m.cores()) throw ConfigError("helper core out of range");
  }
  CoherenceScript s;
  s.target_state = state;
  s.target = {owner, level};
  s.requester = requester;
  s.owner = owner;
  if (needs_helper(state)) s.helper = helper;

  auto add = [&](Worker w, Action a, CacheLevel lv = CacheLevel::L1) { s.steps.push_back({w, a, 0, lv}); };
  switch (state) {
    case CS::E:
      add(Worker::owner_N, Action::flush);
      add(Worker::owner_N, Action::read);
      break;
    case CS::M: add(Worker::owner_N, Action::write); break;
    case CS::O:
      add(Worker::owner_N, Action::write);
      add(Worker::helper_M, Action::read);
      break;
    case CS::F:
      add(Worker::helper_M, Action::read);
      add(Worker::owner_N, Action::read);
      break;
    case CS::S:
      add(Worker::owner_N, Action::read);
      add(Worker::helper_M, Action::read);
      break;
    case CS::I: add(Worker::owner_N, Action::flush); return s;
  }
  std::vector<Worker> holders{Worker::owner_N};
  if (s.helper) holders.push_back(Worker::helper_M);
  if (level == CacheLevel::L2)
    for (auto w : holders) add(w, Action::evict, CacheLevel::L1);
  if (level == CacheLevel::L3 || level == CacheLevel::RAM)
    for (auto w : holders) add(w, Action::evict, CacheLevel::L2);
  if (level == CacheLevel::RAM)
    for (auto w : holders) add(w, Action::evict, CacheLevel::L3);
  return s;
}

Simulator::Simulator(ProtocolModel m) : m_(std::move(m)), empty_(initial_state(m_)) {}

StateMap& Simulator::slot(std::uint64_t line) {
  auto it = lines_.find(line);
  if (it == lines_.end()) it = lines_.emplace(line, empty_).first;
  return it->second;
}

const StateMap& Simulator::line(std::uint64_t line) const {
  auto it = lines_.find(line);
  return it == lines_.end() ? empty_ : it->second;
}

std::uint64_t Simulator::latest_write(std::uint64_t line) const {
  auto it = latest_.find(line);
  return it == latest_.end() ? 0 : it->second;
}

DataSource Simulator::apply(int core, Action a, std::uint64_t line, CacheLevel level) {
  Event e{core, a, level, 0};
  if (a == Action::write) {
    e.value = next_value_++;
    latest_[line] = e.value;
  }
  auto& s = slot(line);
  auto r = protocol_step(m_, s, e);
  s = std::move(r.map);
  return r.source;
}

StateMap SimResult::line(std::uint64_t l, const ProtocolModel& m) const {
  auto it = lines.find(l);
  return it == lines.end() ? initial_state(m) : it->second;
}

SimResult simulate(const CoherenceScript& script, const ProtocolModel& m) {
  Simulator sim(m);
  SimResult out;
  for (std::size_t i = 0; i < script.steps.size(); ++i) {
    const auto& st = script.steps[i];
    int core = script.core_of(st.worker);
    auto src = sim.apply(core, st.action, st.line, st.level);
    if (st.action == Action::read || st.action == Action::write) out.trace.push_back({i, core, st.action, st.line, src});
  }
  out.lines = sim.lines();
  return out;
}

bool target_reached(const CoherenceScript& script, const ProtocolModel& m, const StateMap& s, std::string* why) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  bool uncached = script.target_state == CS::I || script.target.level == CacheLevel::RAM;
  if (uncached) {
    for (const auto& k : s.core)
      if (k.state != CS::I) return fail("line still cached in a core");
    for (const auto& x : s.l3)
      if (x.state != CS::I) return fail("line still cached in an L3");
    return true;
  }
  const auto& own = s.core[script.owner];
  if (script.target.level == CacheLevel::L3) {
    if (own.state != CS::I) return fail("line still in the owner's private caches");
    const auto& l3 = s.l3[m.core_domain[script.owner]];
    if (state_class(m.protocol, l3.state) != state_class(m.protocol, script.target_state))
      return fail("owner's L3 holds " + std::string(to_string(l3.state)));
  } else {
    if (own.state != script.target_state) return fail("owner holds " + std::string(to_string(own.state)));
    if (own.level != script.target.level) return fail("owner holds the line at " + std::string(to_string(own.level)));
  }
  if (script.requester >= 0 && script.requester != script.owner &&
      (!script.helper || script.requester != *script.helper) && s.core[script.requester].state != CS::I)
    return fail("requester still holds the line");
  return true;
}

std::string transition_table(Protocol p) {
  // core 0 is "local", core 1 "remote"; each in its own L3 domain
  auto m = ProtocolModel::make(p, {0, 1});
  std::vector<CS> states;
  for (auto st : {CS::M, CS::O, CS::E, CS::S, CS::F, CS::I})
    if (state_valid_for(st, p)) states.push_back(st);
  struct Ev {
    const char* name;
    Event e;
  };
  std::vector<Ev> events = {{"local read", {0, Action::read}},   {"local write", {0, Action::write, CacheLevel::L1, 9}},
                            {"remote read", {1, Action::read}},  {"remote write", {1, Action::write, CacheLevel::L1, 9}},
                            {"local flush", {0, Action::flush}}, {"local evict L2", {0, Action::evict, CacheLevel::L2}}};
  std::ostringstream os;
  os << "# " << to_string(p) << " two-cache transitions (L1-resident lines)\n";
  os << std::left << std::setw(8) << "local" << std::setw(8) << "remote" << std::setw(16) << "event" << std::setw(8)
     << "local'" << std::setw(8) << "remote'" << std::setw(10) << "l3(local)'" << " source\n";
  for (auto a : states)
    for (auto b : states) {
      StateMap s = initial_state(m);
      s.core[0].state = a;
      s.core[1].state = b;
      if (!check_invariants(m, s)) continue;
      for (const auto& ev : events) {
        auto r = protocol_step(m, s, ev.e);
        os << std::setw(8) << to_string(a) << std::setw(8) << to_string(b) << std::setw(16) << ev.name << std::setw(8)
           << to_string(r.map.core[0].state) << std::setw(8) << to_string(r.map.core[1].state) << std::setw(10)
           << to_string(r.map.l3[0].state) << " " << describe(r.source) << "\n";
      }
    }
  return os.str();
}

}  // namespace memchar

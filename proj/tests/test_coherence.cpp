#include <gtest/gtest.h>

#include <random>
#include <tuple>

#include "memchar/coherence.hpp"
#include "memchar/topology.hpp"

using namespace memchar;
using CS = CoherenceState;

namespace {

const CS kAll[] = {CS::M, CS::O, CS::E, CS::S, CS::F, CS::I};
const CacheLevel kLevels[] = {CacheLevel::L1, CacheLevel::L2, CacheLevel::L3, CacheLevel::RAM};

StateMap two(const ProtocolModel& m, CS a, CS b) {
  auto s = initial_state(m);
  s.core[0].state = a;
  s.core[1].state = b;
  return s;
}

std::pair<CS, CS> after(const ProtocolModel& m, CS a, CS b, int core, Action act) {
  auto r = protocol_step(m, two(m, a, b), {core, act, CacheLevel::L1, 7});
  return {r.map.core[0].state, r.map.core[1].state};
}

// Hand-written expected results for a two-core model, one core per L3 domain.
// Columns: local, remote, event core, expected local', expected remote'.
struct Row {
  CS a, b;
  int core;
  CS a1, b1;
};

const Row kMoesiReads[] = {
    {CS::I, CS::I, 1, CS::I, CS::E}, {CS::M, CS::I, 1, CS::O, CS::S}, {CS::O, CS::I, 1, CS::O, CS::S},
    {CS::E, CS::I, 1, CS::S, CS::S}, {CS::S, CS::I, 1, CS::S, CS::S}, {CS::O, CS::S, 1, CS::O, CS::S},
    {CS::S, CS::S, 1, CS::S, CS::S}, {CS::I, CS::M, 0, CS::S, CS::O}, {CS::I, CS::E, 0, CS::S, CS::S},
    {CS::M, CS::I, 0, CS::M, CS::I}, {CS::E, CS::I, 0, CS::E, CS::I},
};

const Row kMesifReads[] = {
    {CS::I, CS::I, 1, CS::I, CS::E}, {CS::M, CS::I, 1, CS::S, CS::F}, {CS::E, CS::I, 1, CS::S, CS::F},
    {CS::F, CS::I, 1, CS::S, CS::F}, {CS::S, CS::I, 1, CS::S, CS::F}, {CS::F, CS::S, 1, CS::F, CS::S},
    {CS::I, CS::M, 0, CS::F, CS::S}, {CS::I, CS::F, 0, CS::F, CS::S}, {CS::E, CS::I, 0, CS::E, CS::I},
};

}  // namespace

TEST(Protocol, WriteFromAnyStateGivesM) {
  for (auto p : {Protocol::MOESI, Protocol::MESIF}) {
    auto m = ProtocolModel::make(p, {0, 1});
    for (CS a : kAll)
      for (CS b : kAll) {
        if (!check_invariants(m, two(m, a, b))) continue;
        EXPECT_EQ(after(m, a, b, 0, Action::write), std::make_pair(CS::M, CS::I));
        EXPECT_EQ(after(m, a, b, 1, Action::write), std::make_pair(CS::I, CS::M));
        EXPECT_EQ(after(m, a, b, 0, Action::flush), std::make_pair(CS::I, CS::I));
      }
  }
}

TEST(Protocol, TwoCacheReadTable) {
  auto mo = ProtocolModel::make(Protocol::MOESI, {0, 1});
  for (const auto& r : kMoesiReads)
    EXPECT_EQ(after(mo, r.a, r.b, r.core, Action::read), std::make_pair(r.a1, r.b1))
        << to_string(r.a) << "," << to_string(r.b) << " read by " << r.core;
  auto mf = ProtocolModel::make(Protocol::MESIF, {0, 1});
  for (const auto& r : kMesifReads)
    EXPECT_EQ(after(mf, r.a, r.b, r.core, Action::read), std::make_pair(r.a1, r.b1))
        << to_string(r.a) << "," << to_string(r.b) << " read by " << r.core;
}

TEST(Protocol, EnumerationPreservesInvariants) {
  // every legal two-core state, every event, both protocols
  for (auto p : {Protocol::MOESI, Protocol::MESIF}) {
    auto m = ProtocolModel::make(p, {0, 1});
    for (CS a : kAll)
      for (CS b : kAll)
        for (CS l : kAll) {
          auto s = two(m, a, b);
          s.l3[0].state = l;
          if (!check_invariants(m, s)) continue;
          for (int c = 0; c < 2; ++c)
            for (auto act : {Action::read, Action::write, Action::flush})
              EXPECT_TRUE(check_invariants(m, protocol_step(m, s, {c, act, CacheLevel::L1, 3}).map));
          for (auto lv : {CacheLevel::L1, CacheLevel::L2, CacheLevel::L3})
            EXPECT_TRUE(check_invariants(m, protocol_step(m, s, {0, Action::evict, lv, 0}).map));
        }
  }
}

TEST(Protocol, TransitionTableText) {
  auto t = transition_table(Protocol::MOESI);
  EXPECT_NE(t.find("MOESI"), std::string::npos);
  EXPECT_EQ(transition_table(Protocol::MESIF).find(" O "), std::string::npos);
}

TEST(Protocol, ForwardHandoff) {
  auto m = ProtocolModel::make(Protocol::MESIF, {0, 1, 2});
  Simulator sim(m);
  sim.apply(0, Action::read);
  sim.apply(1, Action::read);
  EXPECT_EQ(sim.line(0).core[1].state, CS::F);
  sim.apply(2, Action::read);
  EXPECT_EQ(sim.line(0).core[0].state, CS::S);
  EXPECT_EQ(sim.line(0).core[1].state, CS::S);
  EXPECT_EQ(sim.line(0).core[2].state, CS::F);
}

TEST(Protocol, VictimL3TakesL2Evictions) {
  auto m = ProtocolModel::make(Protocol::MOESI, {0, 0});
  Simulator sim(m);
  sim.apply(0, Action::read);
  sim.apply(0, Action::evict, 0, CacheLevel::L2);
  EXPECT_EQ(sim.line(0).core[0].state, CS::I);
  EXPECT_EQ(sim.line(0).l3[0].state, CS::E);
  // the next read pulls it back and leaves the victim L3 empty
  auto src = sim.apply(0, Action::read);
  EXPECT_EQ(src.kind, SourceKind::l3_domain);
  EXPECT_EQ(sim.line(0).l3[0].state, CS::I);
}

TEST(Protocol, NonInclusiveReadSkipsL3) {
  auto m = ProtocolModel::make(Protocol::MESIF, {0, 0});
  Simulator sim(m);
  sim.apply(0, Action::read);
  EXPECT_EQ(sim.line(0).core[0].state, CS::E);
  EXPECT_EQ(sim.line(0).l3[0].state, CS::I);
}

TEST(Protocol, MesifSharedServedByL3) {
  auto m = ProtocolModel::make(Protocol::MESIF, {0, 0, 1, 1});
  for (CS st : {CS::S, CS::F}) {
    auto sc = plan_state(st, m, 0, 2, 3, CacheLevel::L1);
    auto res = simulate(sc, m);
    Simulator sim(m);
    for (const auto& s : sc.steps) sim.apply(sc.core_of(s.worker), s.action, s.line, s.level);
    auto src = sim.apply(0, Action::read);
    EXPECT_EQ(src.kind, SourceKind::l3_domain) << to_string(st);
    EXPECT_TRUE(target_reached(sc, m, res.line(0, m)));
  }
}

TEST(Protocol, EmptyScriptLeavesAllInvalid) {
  auto m = ProtocolModel::make(Protocol::MOESI, {0, 0, 1, 1});
  CoherenceScript s;
  auto r = simulate(s, m);
  EXPECT_EQ(r.line(0, m), initial_state(m));
  EXPECT_TRUE(r.trace.empty());
}

TEST(PlanState, Examples) {
  auto mf = ProtocolModel::make(Protocol::MESIF, {0, 0, 1, 1});
  auto mo = ProtocolModel::make(Protocol::MOESI, {0, 0, 1, 1});

  auto e = plan_state(CS::E, mf, 1, std::nullopt);
  ASSERT_EQ(e.steps.size(), 2u);
  EXPECT_EQ(e.steps[0].action, Action::flush);
  EXPECT_EQ(e.steps[1].action, Action::read);
  EXPECT_EQ(e.steps[1].worker, Worker::owner_N);

  auto mm = plan_state(CS::M, mo, 1, std::nullopt);
  ASSERT_EQ(mm.steps.size(), 1u);
  EXPECT_EQ(mm.steps[0].action, Action::write);

  auto o = plan_state(CS::O, mo, 1, 2);
  auto ro = simulate(o, mo).line(0, mo);
  EXPECT_EQ(ro.core[1].state, CS::O);
  EXPECT_EQ(ro.core[2].state, CS::S);

  auto f = plan_state(CS::F, mf, 1, 2);
  EXPECT_EQ(f.steps[0].worker, Worker::helper_M);
  auto rf = simulate(f, mf).line(0, mf);
  EXPECT_EQ(rf.core[1].state, CS::F);
  EXPECT_EQ(rf.core[2].state, CS::S);
}

TEST(PlanState, WorkersPerState) {
  auto m = ProtocolModel::make(Protocol::MOESI, {0, 0, 1, 1});
  for (CS st : {CS::E, CS::M, CS::I}) {
    auto s = plan_state(st, m, 0, 1, std::nullopt, CacheLevel::L2);
    for (const auto& step : s.steps) EXPECT_EQ(step.worker, Worker::owner_N);
  }
}

TEST(PlanState, Errors) {
  auto mo = ProtocolModel::make(Protocol::MOESI, {0, 0});
  auto mf = ProtocolModel::make(Protocol::MESIF, {0, 0});
  EXPECT_THROW(plan_state(CS::F, mo, 0, 1), ConfigError);
  EXPECT_THROW(plan_state(CS::O, mf, 0, 1), ConfigError);
  EXPECT_THROW(plan_state(CS::S, mo, 0, std::nullopt), ConfigError);
  EXPECT_THROW(plan_state(CS::S, mo, 0, 0), ConfigError);
  EXPECT_THROW(plan_state(CS::M, mo, 5, std::nullopt), ConfigError);
}

TEST(PlanState, ExhaustiveOracle) {
  // 4 cores in 2 domains and the Rome/CLX topologies' models
  std::vector<ProtocolModel> models;
  for (auto p : {Protocol::MOESI, Protocol::MESIF}) models.push_back(ProtocolModel::make(p, {0, 0, 1, 1}));
  for (const char* f : {"rome_2s.json", "clx_2s.json"})
    models.push_back(ProtocolModel::from_topology(load_topology_file(std::string(MEMCHAR_FIXTURES) + "/" + f)));
  int checked = 0;
  for (const auto& m : models) {
    int n = m.cores();
    std::vector<std::pair<int, int>> pairs;
    if (n <= 8) {
      for (int r = 0; r < n; ++r)
        for (int o = 0; o < n; ++o) pairs.push_back({r, o});
    } else {
      for (int o : {0, 1, 4, 8, 17, n / 2 + 3, n - 1}) pairs.push_back({0, o});
    }
    for (CS st : kAll) {
      if (!state_valid_for(st, m.protocol)) continue;
      for (auto [r, o] : pairs)
        for (CacheLevel lv : kLevels) {
          auto h = needs_helper(st) ? choose_helper(m, r, o) : std::nullopt;
          auto sc = plan_state(st, m, r, o, h, lv);
          auto res = simulate(sc, m);
          std::string why;
          EXPECT_TRUE(target_reached(sc, m, res.line(0, m), &why))
              << to_string(st) << " " << to_string(m.protocol) << " r=" << r << " o=" << o << " " << to_string(lv)
              << ": " << why;
          ++checked;
        }
    }
  }
  EXPECT_GT(checked, 500);
}

TEST(Fuzz, InvariantsAndReadAfterWrite) {
  std::mt19937_64 rng(12345);
  const int sequences = 100000;
  for (auto p : {Protocol::MOESI, Protocol::MESIF}) {
    auto m = ProtocolModel::make(p, {0, 0, 1, 1});
    for (int seq = 0; seq < sequences / 2; ++seq) {
      Simulator sim(m);
      int len = 1 + static_cast<int>(rng() % 24);
      for (int i = 0; i < len; ++i) {
        int core = static_cast<int>(rng() % 4);
        std::uint64_t line = rng() % 2;
        auto a = static_cast<Action>(rng() % 4);
        auto lv = static_cast<CacheLevel>(rng() % 3);
        auto src = sim.apply(core, a, line, lv);
        std::string why;
        ASSERT_TRUE(check_invariants(m, sim.line(line), &why)) << why << " seq " << seq << " step " << i;
        if (a == Action::read) ASSERT_EQ(src.version, sim.latest_write(line)) << "seq " << seq << " step " << i;
      }
    }
  }
}

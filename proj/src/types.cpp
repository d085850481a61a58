#include "memchar/types.hpp"

namespace memchar {

std::string_view to_string(CoherenceState s) {
  switch (s) {
    case CoherenceState::M: return "M";
    case CoherenceState::O: return "O";
    case CoherenceState::E: return "E";
    case CoherenceState::S: return "S";
    case CoherenceState::F: return "F";
    case CoherenceState::I: return "I";
  }
  return "?";
}

std::string_view to_string(CacheLevel l) {
  switch (l) {
    case CacheLevel::L1: return "L1";
    case CacheLevel::L2: return "L2";
    case CacheLevel::L3: return "L3";
    case CacheLevel::RAM: return "RAM";
  }
  return "?";
}

std::string_view to_string(Protocol p) {
  return p == Protocol::MOESI ? "MOESI" : "MESIF";
}

CoherenceState parse_state(std::string_view s) {
  if (s == "M") return CoherenceState::M;
  if (s == "O") return CoherenceState::O;
  if (s == "E") return CoherenceState::E;
  if (s == "S") return CoherenceState::S;
  if (s == "F") return CoherenceState::F;
  if (s == "I") return CoherenceState::I;
  throw ConfigError("unknown coherence state '" + std::string(s) + "'");
}

CacheLevel parse_level(std::string_view s) {
  if (s == "L1") return CacheLevel::L1;
  if (s == "L2") return CacheLevel::L2;
  if (s == "L3") return CacheLevel::L3;
  if (s == "RAM") return CacheLevel::RAM;
  throw ConfigError("unknown memory level '" + std::string(s) + "'");
}

Protocol parse_protocol(std::string_view s) {
  if (s == "MOESI") return Protocol::MOESI;
  if (s == "MESIF") return Protocol::MESIF;
  throw ConfigError("unknown protocol '" + std::string(s) + "'");
}

bool state_valid_for(CoherenceState s, Protocol p) {
  if (s == CoherenceState::O) return p == Protocol::MOESI;
  if (s == CoherenceState::F) return p == Protocol::MESIF;
  return true;
}

double cycles_to_ns(double cycles, double frequency_mhz) {
  if (!(frequency_mhz > 0)) throw ConfigError("frequency must be positive");
  return cycles * 1000.0 / frequency_mhz;
}

}  // namespace memchar

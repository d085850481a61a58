#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace memchar {

// Error categories map 1:1 onto CLI exit codes.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class PinningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class BackendError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class VerificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class CoherenceState { M, O, E, S, F, I };
enum class CacheLevel { L1, L2, L3, RAM };
enum class Protocol { MOESI, MESIF };

std::string_view to_string(CoherenceState s);
std::string_view to_string(CacheLevel l);
std::string_view to_string(Protocol p);
CoherenceState parse_state(std::string_view s);
CacheLevel parse_level(std::string_view s);
Protocol parse_protocol(std::string_view s);

bool state_valid_for(CoherenceState s, Protocol p);

// ns = cycles * 1000 / MHz
double cycles_to_ns(double cycles, double frequency_mhz);

}  // namespace memchar

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace memchar {

// Marsaglia xorshift64 with shifts (13, 7, 17):
//   x ^= x << 13; x ^= x >> 7; x ^= x << 17
// The seed is first scrambled by one splitmix64 step so small seeds do not
// produce correlated streams; a zero state is replaced by 0x9E3779B97F4A7C15.
class Xorshift64 {
 public:
  explicit Xorshift64(std::uint64_t seed);
  std::uint64_t next();
  // uniform in [0, bound), bound > 0
  std::uint64_t below(std::uint64_t bound);

 private:
  std::uint64_t x_;
};

// Sattolo's algorithm over the identity permutation; successor[i] is the
// element visited after i. Always a single cycle of length n.
std::vector<std::uint32_t> sattolo_successors(std::size_t n, std::uint64_t seed);

struct ChainOptions {
  bool huge_pages = true;
  std::optional<int> numa_node;  // bind pages before first touch
};

class ChainBuffer {
 public:
  ChainBuffer() = default;
  ChainBuffer(ChainBuffer&& o) noexcept;
  ChainBuffer& operator=(ChainBuffer&& o) noexcept;
  ChainBuffer(const ChainBuffer&) = delete;
  ChainBuffer& operator=(const ChainBuffer&) = delete;
  ~ChainBuffer();

  void* base() const { return base_; }
  std::size_t element_count() const { return count_; }
  std::size_t stride_alignment() const { return stride_; }
  std::size_t total_bytes() const { return count_ * stride_; }
  std::uint64_t seed() const { return seed_; }
  bool huge_pages_requested() const { return huge_requested_; }
  bool huge_pages() const { return huge_effective_; }

  // Address of element i.
  void** element(std::size_t i) const {
    return reinterpret_cast<void**>(static_cast<char*>(base_) + i * stride_);
  }

  friend ChainBuffer generate_chain(std::size_t, std::size_t, std::uint64_t, const ChainOptions&);

 private:
  void release();
  void* base_ = nullptr;
  void* map_ = nullptr;
  std::size_t map_bytes_ = 0;
  std::size_t count_ = 0;
  std::size_t stride_ = 0;
  std::uint64_t seed_ = 0;
  bool huge_requested_ = false;
  bool huge_effective_ = false;
};

ChainBuffer generate_chain(std::size_t total_bytes, std::size_t stride_alignment, std::uint64_t seed,
                           const ChainOptions& opts = {});

struct ChainReport {
  std::size_t cycle_length = 0;
  std::size_t alignment_violations = 0;
  std::size_t first_revisit_index = 0;  // steps until an element is seen a second time
  bool valid(std::size_t element_count) const {
    return cycle_length == element_count && alignment_violations == 0 && first_revisit_index == element_count;
  }
};

ChainReport verify_chain(const ChainBuffer& buffer);

// Successor element indices as stored in memory (-1 where the pointer is out of range).
std::vector<std::int64_t> successor_table(const ChainBuffer& buffer);

// One line per element: "<offset> -> <successor offset>".
std::string dump_chain(const ChainBuffer& buffer);

// True when the kernel honours madvise(MADV_HUGEPAGE) requests.
bool transparent_huge_pages_available();

}  // namespace memchar

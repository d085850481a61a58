#include "memchar/chain.hpp"

#include <sys/mman.h>

#include <fstream>
#include <sstream>
#include <utility>

#include "memchar/types.hpp"

#ifdef MEMCHAR_HAVE_NUMA
#include <numaif.h>
#endif

namespace memchar {

namespace {

constexpr std::size_t kHugePage = 2u << 20;

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

Xorshift64::Xorshift64(std::uint64_t seed) : x_(splitmix64(seed)) {
  if (x_ == 0) x_ = 0x9E3779B97F4A7C15ull;
}

std::uint64_t Xorshift64::next() {
  x_ ^= x_ << 13;
  x_ ^= x_ >> 7;
  x_ ^= x_ << 17;
  return x_;
}

std::uint64_t Xorshift64::below(std::uint64_t bound) {
  // Lemire's multiply-shift with rejection of the biased low region
  unsigned __int128 m = static_cast<unsigned __int128>(next()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    std::uint64_t threshold = -bound % bound;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(next()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

std::vector<std::uint32_t> sattolo_successors(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ConfigError("chain needs at least one element");
  if (n > UINT32_MAX) throw ConfigError("chain too long");
  std::vector<std::uint32_t> succ(n);
  for (std::size_t i = 0; i < n; ++i) succ[i] = static_cast<std::uint32_t>(i);
  Xorshift64 rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::size_t j = rng.below(i);
    std::swap(succ[i], succ[j]);
  }
  return succ;
}

bool transparent_huge_pages_available() {
  std::ifstream in("/sys/kernel/mm/transparent_hugepage/enabled");
  std::string line;
  if (!std::getline(in, line)) return false;
  return line.find("[always]") != std::string::npos || line.find("[madvise]") != std::string::npos;
}

ChainBuffer::ChainBuffer(ChainBuffer&& o) noexcept { *this = std::move(o); }

ChainBuffer& ChainBuffer::operator=(ChainBuffer&& o) noexcept {
  if (this != &o) {
    release();
    base_ = std::exchange(o.base_, nullptr);
    map_ = std::exchange(o.map_, nullptr);
    map_bytes_ = std::exchange(o.map_bytes_, 0);
    count_ = std::exchange(o.count_, 0);
    stride_ = o.stride_;
    seed_ = o.seed_;
    huge_requested_ = o.huge_requested_;
    huge_effective_ = o.huge_effective_;
  }
  return *this;
}

ChainBuffer::~ChainBuffer() { release(); }

void ChainBuffer::release() {
  if (map_) munmap(map_, map_bytes_);
  map_ = base_ = nullptr;
  map_bytes_ = 0;
}

ChainBuffer generate_chain(std::size_t total_bytes, std::size_t stride, std::uint64_t seed, const ChainOptions& opts) {
  if (stride < 64 || (stride & (stride - 1)) != 0)
    throw ConfigError("stride alignment " + std::to_string(stride) + " is not a power of two >= 64");
  if (total_bytes < stride) throw ConfigError("chain smaller than one element");
  std::size_t count = total_bytes / stride;
  std::size_t bytes = count * stride;

  ChainBuffer buf;
  buf.count_ = count;
  buf.stride_ = stride;
  buf.seed_ = seed;
  buf.huge_requested_ = opts.huge_pages;

  bool want_huge = opts.huge_pages && bytes >= kHugePage;
  std::size_t align = want_huge ? kHugePage : std::max<std::size_t>(stride, 4096);
  buf.map_bytes_ = bytes + align;
  void* m = mmap(nullptr, buf.map_bytes_, PROT_READ | PROT_WRITE, MAP_PRIVATE | MAP_ANONYMOUS, -1, 0);
  if (m == MAP_FAILED) throw BackendError("chain allocation of " + std::to_string(bytes) + " bytes failed");
  buf.map_ = m;
  auto addr = reinterpret_cast<std::uintptr_t>(m);
  buf.base_ = reinterpret_cast<void*>((addr + align - 1) & ~(static_cast<std::uintptr_t>(align) - 1));
  if (want_huge) buf.huge_effective_ = madvise(buf.base_, bytes, MADV_HUGEPAGE) == 0 && transparent_huge_pages_available();

  if (opts.numa_node) {
#ifdef MEMCHAR_HAVE_NUMA
    unsigned long mask = 1ul << *opts.numa_node;
    if (*opts.numa_node < 0 || *opts.numa_node >= 64 ||
        mbind(buf.base_, bytes, MPOL_BIND, &mask, sizeof(mask) * 8, 0) != 0)
      throw PinningError("binding chain memory to NUMA node " + std::to_string(*opts.numa_node) + " failed");
#else
    if (*opts.numa_node != 0) throw PinningError("built without libnuma; cannot bind to a remote node");
#endif
  }

  auto succ = sattolo_successors(count, seed);
  for (std::size_t i = 0; i < count; ++i) *buf.element(i) = buf.element(succ[i]);
  return buf;
}

std::vector<std::int64_t> successor_table(const ChainBuffer& b) {
  std::vector<std::int64_t> out(b.element_count());
  auto base = reinterpret_cast<std::uintptr_t>(b.base());
  for (std::size_t i = 0; i < b.element_count(); ++i) {
    auto p = reinterpret_cast<std::uintptr_t>(*b.element(i));
    if (p < base || p >= base + b.total_bytes() || (p - base) % b.stride_alignment() != 0)
      out[i] = -1;
    else
      out[i] = static_cast<std::int64_t>((p - base) / b.stride_alignment());
  }
  return out;
}

ChainReport verify_chain(const ChainBuffer& b) {
  ChainReport r;
  auto succ = successor_table(b);
  for (auto s : succ) r.alignment_violations += s < 0;
  std::vector<char> seen(b.element_count(), 0);
  std::size_t cur = 0, steps = 0;
  seen[0] = 1;
  while (true) {
    auto nx = succ[cur];
    ++steps;
    if (nx < 0) {
      // walk leaves the buffer; treat as terminated
      r.first_revisit_index = steps;
      r.cycle_length = 0;
      return r;
    }
    cur = static_cast<std::size_t>(nx);
    if (seen[cur]) break;
    seen[cur] = 1;
  }
  r.first_revisit_index = steps;
  // cycle length: only a full cycle returns to element 0
  r.cycle_length = cur == 0 ? steps : 0;
  if (cur != 0) {
    std::size_t start = cur, len = 0;
    do {
      cur = static_cast<std::size_t>(succ[cur]);
      ++len;
    } while (cur != start);
    r.cycle_length = len;
  }
  return r;
}

std::string dump_chain(const ChainBuffer& b) {
  std::ostringstream os;
  auto succ = successor_table(b);
  for (std::size_t i = 0; i < succ.size(); ++i)
    os << i * b.stride_alignment() << " -> "
       << (succ[i] < 0 ? std::string("?") : std::to_string(succ[i] * b.stride_alignment())) << "\n";
  return os.str();
}

}  // namespace memchar

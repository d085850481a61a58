#pragma once

#include <cstddef>
#include <string_view>

namespace memchar::kernels {

enum class Isa { scalar, sse, avx2, avx512 };
std::string_view to_string(Isa i);

bool isa_supported(Isa i);
Isa widest_supported();

// Vector registers kept in flight per burst.
int burst_registers(Isa i);
// Doubles consumed per burst.
std::size_t burst_doubles(Isa i);

// Reads n doubles with `burst_registers` independent accumulators, returns the sum.
using ReadFn = double (*)(const double* p, std::size_t n);
// a[i] = b[i] + s * c[i]; streaming stores when nontemporal.
using TriadFn = void (*)(double* a, const double* b, const double* c, double s, std::size_t n, bool nontemporal);

ReadFn read_kernel(Isa i);
TriadFn triad_kernel(Isa i);

double read_scalar(const double* p, std::size_t n);
void triad_scalar(double* a, const double* b, const double* c, double s, std::size_t n, bool nontemporal);

#if defined(__x86_64__)
double read_sse(const double* p, std::size_t n);
double read_avx2(const double* p, std::size_t n);
double read_avx512(const double* p, std::size_t n);
void triad_sse(double* a, const double* b, const double* c, double s, std::size_t n, bool nontemporal);
void triad_avx2(double* a, const double* b, const double* c, double s, std::size_t n, bool nontemporal);
void triad_avx512(double* a, const double* b, const double* c, double s, std::size_t n, bool nontemporal);
#endif

}  // namespace memchar::kernels

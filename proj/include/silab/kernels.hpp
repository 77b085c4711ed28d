#pragma once

#include <cstddef>
#include <string>

// Data-parallel primitives behind the dynamics engine and the net.
// Two implementations: a scalar reference and an AVX2+FMA variant.
// The active one is chosen once at startup from CPUID; SILAB_KERNELS=scalar|avx2
// overrides. Both are exported so the equivalence tests can drive them
// side by side.

namespace silab::kernels {

struct Ops {
    double (*dot)(const double* x, const double* y, std::size_t n);
    double (*nrm2_sq)(const double* x, std::size_t n);
    double (*sum)(const double* x, std::size_t n);
    // y[i] += a * x[i]
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    // y[i] = a * x[i] + b * y[i]
    void (*axpby)(double a, const double* x, double b, double* y, std::size_t n);
    void (*scale)(double* x, double a, std::size_t n);
    // acc[i] += (x[i] - m[i])^2
    void (*sq_diff_acc)(double* acc, const double* x, const double* m, std::size_t n);
    // out[i] = (x[i] - m[i]) * s[i]
    void (*normalize)(const double* x, const double* m, const double* s, double* out,
                      std::size_t n);
    // acc[i] += x[i] * y[i]
    void (*mul_acc)(double* acc, const double* x, const double* y, std::size_t n);
    const char* name;
};

namespace scalar {
extern const Ops ops;
}
namespace avx2 {
extern const Ops ops;       // null members when built without AVX2 support
bool available();           // compiled in and supported by this CPU
}

// Active implementation (decided once, thread-safe).
const Ops& ops();

// Force an implementation by name ("scalar" or "avx2"); throws on an
// unavailable choice. Intended for tests.
void force_impl(const std::string& name);

} // namespace silab::kernels

#include "silab/kernels.hpp"

namespace silab::kernels::scalar {

namespace {

double dot(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

double nrm2_sq(const double* x, std::size_t n) { return dot(x, x, n); }

double sum(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void axpby(double a, const double* x, double b, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = a * x[i] + b * y[i];
}

void scale(double* x, double a, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void sq_diff_acc(double* acc, const double* x, const double* m, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double d = x[i] - m[i];
        acc[i] += d * d;
    }
}

void normalize(const double* x, const double* m, const double* s, double* out,
               std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = (x[i] - m[i]) * s[i];
}

void mul_acc(double* acc, const double* x, const double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) acc[i] += x[i] * y[i];
}

} // namespace

const Ops ops = {dot, nrm2_sq, sum, axpy, axpby, scale, sq_diff_acc, normalize, mul_acc,
                 "scalar"};

} // namespace silab::kernels::scalar

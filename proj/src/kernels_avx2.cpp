#include "silab/kernels.hpp"

#if defined(__x86_64__) && defined(__AVX2__) && defined(__FMA__)
#define SILAB_HAVE_AVX2 1
#include <immintrin.h>
#else
#define SILAB_HAVE_AVX2 0
#endif

namespace silab::kernels::avx2 {

#if SILAB_HAVE_AVX2

namespace {

double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

double dot(const double* x, const double* y, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

double nrm2_sq(const double* x, std::size_t n) { return dot(x, x, n); }

double sum(const double* x, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
    double acc = hsum(acc0);
    for (; i < n; ++i) acc += x[i];
    return acc;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void axpby(double a, const double* x, double b, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    const __m256d vb = _mm256_set1_pd(b);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_mul_pd(vb, _mm256_loadu_pd(y + i));
        vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] = a * x[i] + b * y[i];
}

void scale(double* x, double a, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) x[i] *= a;
}

void sq_diff_acc(double* acc, const double* x, const double* m, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(m + i));
        __m256d va = _mm256_loadu_pd(acc + i);
        va = _mm256_fmadd_pd(d, d, va);
        _mm256_storeu_pd(acc + i, va);
    }
    for (; i < n; ++i) {
        const double d = x[i] - m[i];
        acc[i] += d * d;
    }
}

void normalize(const double* x, const double* m, const double* s, double* out,
               std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(m + i));
        _mm256_storeu_pd(out + i, _mm256_mul_pd(d, _mm256_loadu_pd(s + i)));
    }
    for (; i < n; ++i) out[i] = (x[i] - m[i]) * s[i];
}

void mul_acc(double* acc, const double* x, const double* y, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d va = _mm256_loadu_pd(acc + i);
        va = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), va);
        _mm256_storeu_pd(acc + i, va);
    }
    for (; i < n; ++i) acc[i] += x[i] * y[i];
}

} // namespace

const Ops ops = {dot, nrm2_sq, sum, axpy, axpby, scale, sq_diff_acc, normalize, mul_acc,
                 "avx2"};

bool available() { return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"); }

#else

const Ops ops = {nullptr, nullptr, nullptr, nullptr, nullptr,
                 nullptr, nullptr, nullptr, nullptr, "avx2-unavailable"};

bool available() { return false; }

#endif

} // namespace silab::kernels::avx2

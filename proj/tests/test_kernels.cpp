#include <doctest.h>

#include <cmath>
#include <vector>

#include "silab/kernels.hpp"
#include "silab/rng.hpp"

using namespace silab;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal();
    return v;
}

} // namespace

TEST_CASE("scalar kernel reference values") {
    const auto& k = kernels::scalar::ops;
    std::vector<double> x = {1.0, 2.0, 3.0};
    std::vector<double> y = {4.0, -5.0, 6.0};
    CHECK(k.dot(x.data(), y.data(), 3) == 12.0);
    CHECK(k.nrm2_sq(x.data(), 3) == 14.0);
    CHECK(k.sum(y.data(), 3) == 5.0);

    auto z = y;
    k.axpy(2.0, x.data(), z.data(), 3);
    CHECK(z == std::vector<double>{6.0, -1.0, 12.0});

    z = y;
    k.axpby(2.0, x.data(), 0.5, z.data(), 3);
    CHECK(z == std::vector<double>{4.0, 1.5, 9.0});

    z = x;
    k.scale(z.data(), -1.0, 3);
    CHECK(z == std::vector<double>{-1.0, -2.0, -3.0});

    std::vector<double> acc = {0.0, 0.0, 0.0};
    k.sq_diff_acc(acc.data(), x.data(), y.data(), 3);
    CHECK(acc == std::vector<double>{9.0, 49.0, 9.0});

    std::vector<double> out(3);
    std::vector<double> s = {2.0, 2.0, 2.0};
    k.normalize(x.data(), y.data(), s.data(), out.data(), 3);
    CHECK(out == std::vector<double>{-6.0, 14.0, -6.0});

    acc = {1.0, 1.0, 1.0};
    k.mul_acc(acc.data(), x.data(), y.data(), 3);
    CHECK(acc == std::vector<double>{5.0, -9.0, 19.0});
}

TEST_CASE("avx2 kernels match the scalar reference") {
    if (!kernels::avx2::available()) return;  // nothing to compare on this host
    const auto& s = kernels::scalar::ops;
    const auto& v = kernels::avx2::ops;
    Rng rng(99);
    for (std::size_t n : {0, 1, 3, 4, 7, 8, 13, 64, 255, 1000}) {
        auto x = random_vec(rng, n);
        auto y = random_vec(rng, n);
        const double tol = 1e-12 * (1.0 + static_cast<double>(n));

        CHECK(std::abs(s.dot(x.data(), y.data(), n) - v.dot(x.data(), y.data(), n)) <= tol);
        CHECK(std::abs(s.nrm2_sq(x.data(), n) - v.nrm2_sq(x.data(), n)) <= tol);
        CHECK(std::abs(s.sum(x.data(), n) - v.sum(x.data(), n)) <= tol);

        auto ys = y, yv = y;
        s.axpy(1.7, x.data(), ys.data(), n);
        v.axpy(1.7, x.data(), yv.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(ys[i] == doctest::Approx(yv[i]).epsilon(1e-14));

        ys = y;
        yv = y;
        s.axpby(-0.3, x.data(), 0.9, ys.data(), n);
        v.axpby(-0.3, x.data(), 0.9, yv.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(ys[i] == doctest::Approx(yv[i]).epsilon(1e-14));

        std::vector<double> as(n, 0.5), av(n, 0.5);
        s.sq_diff_acc(as.data(), x.data(), y.data(), n);
        v.sq_diff_acc(av.data(), x.data(), y.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(as[i] == doctest::Approx(av[i]).epsilon(1e-14));

        as.assign(n, -2.0);
        av.assign(n, -2.0);
        s.mul_acc(as.data(), x.data(), y.data(), n);
        v.mul_acc(av.data(), x.data(), y.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(as[i] == doctest::Approx(av[i]).epsilon(1e-14));
    }
}

TEST_CASE("kernel dispatch override") {
    kernels::force_impl("scalar");
    CHECK(std::string(kernels::ops().name) == "scalar");
    if (kernels::avx2::available()) {
        kernels::force_impl("avx2");
        CHECK(std::string(kernels::ops().name) == "avx2");
    }
    // restore the default for the rest of the test binary
    kernels::force_impl(kernels::avx2::available() ? "avx2" : "scalar");
    CHECK_THROWS(kernels::force_impl("no-such-impl"));
}

TEST_CASE("deterministic rng") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c(42);
    double mean = 0.0;
    for (int i = 0; i < 10000; ++i) mean += c.normal();
    mean /= 10000.0;
    CHECK(std::abs(mean) < 0.05);
}

#include "silab/kernels.hpp"

#include <cstdlib>
#include <stdexcept>

namespace silab::kernels {

namespace {

const Ops* select_initial() {
    if (const char* env = std::getenv("SILAB_KERNELS")) {
        const std::string want(env);
        if (want == "scalar") return &scalar::ops;
        if (want == "avx2" && avx2::available()) return &avx2::ops;
    }
    return avx2::available() ? &avx2::ops : &scalar::ops;
}

const Ops*& active() {
    static const Ops* impl = select_initial();
    return impl;
}

} // namespace

const Ops& ops() { return *active(); }

void force_impl(const std::string& name) {
    if (name == "scalar") {
        active() = &scalar::ops;
    } else if (name == "avx2") {
        if (!avx2::available()) throw std::runtime_error("avx2 kernels unavailable on this host");
        active() = &avx2::ops;
    } else {
        throw std::runtime_error("unknown kernel impl: " + name);
    }
}

} // namespace silab::kernels

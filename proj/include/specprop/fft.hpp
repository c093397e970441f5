#pragma once

#include <fftw3.h>

#include <array>
#include <complex>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <tuple>

#include "specprop/common.hpp"

namespace specprop::fft {

namespace detail {

struct FftwBuffer {
    explicit FftwBuffer(std::size_t n)
        : size(n), data(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n))) {
        if (data == nullptr) throw std::bad_alloc();
    }
    ~FftwBuffer() { fftw_free(data); }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;

    std::size_t size;
    fftw_complex* data;
};

using PlanKey = std::tuple<int, int, int>;  // dims, n, sign

struct PlanCache {
    std::mutex mutex;
    std::map<PlanKey, fftw_plan> plans;

    ~PlanCache() {
        for (auto& [key, plan] : plans) fftw_destroy_plan(plan);
    }
};

inline PlanCache& plan_cache() {
    static PlanCache cache;
    return cache;
}

// FFTW_ESTIMATE plans are chosen without timing, so they are identical from
// run to run; together with fftw_malloc alignment this keeps results bitwise
// reproducible.
inline fftw_plan get_plan(int dims, int n, int sign) {
    auto& cache = plan_cache();
    std::lock_guard lock(cache.mutex);
    const PlanKey key{dims, n, sign};
    if (auto it = cache.plans.find(key); it != cache.plans.end()) return it->second;
    std::size_t total = 1;
    std::array<int, 3> shape{n, n, n};
    for (int i = 0; i < dims; ++i) total *= static_cast<std::size_t>(n);
    FftwBuffer in(total), out(total);
    fftw_plan plan = fftw_plan_dft(dims, shape.data(), in.data, out.data, sign, FFTW_ESTIMATE);
    if (plan == nullptr) throw Error("fftw: plan creation failed");
    cache.plans.emplace(key, plan);
    return plan;
}

}  // namespace detail

/// Unnormalized in-place DFT of a row-major N^dims array:
/// out[k] = sum_j exp(sign * 2 pi i j.k / N) in[j].
inline void transform(std::span<Complex> data, int dims, int n, int sign) {
    std::size_t total = 1;
    for (int i = 0; i < dims; ++i) total *= static_cast<std::size_t>(n);
    require(data.size() == total, "fft::transform: size mismatch");
    fftw_plan plan = detail::get_plan(dims, n, sign);
    detail::FftwBuffer in(total), out(total);
    std::memcpy(in.data, data.data(), total * sizeof(fftw_complex));
    fftw_execute_dft(plan, in.data, out.data);
    std::memcpy(data.data(), out.data, total * sizeof(fftw_complex));
}

}  // namespace specprop::fft

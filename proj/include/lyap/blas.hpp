#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <type_traits>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

// Dense vector kernels. The parallel versions are deterministic for any
// thread count: every output element is produced by a single serially
// evaluated expression, and reductions use a fixed chunk grid whose
// partial sums are combined in chunk order.

namespace lyap {

using cplx = std::complex<double>;

template <class S>
struct scalar_traits {
    using real_type = S;
    static constexpr bool is_complex = false;
    static S conj(S v) { return v; }
    static double re(S v) { return v; }
    static double im(S) { return 0.0; }
};

template <>
struct scalar_traits<cplx> {
    using real_type = double;
    static constexpr bool is_complex = true;
    static cplx conj(cplx v) { return std::conj(v); }
    static double re(cplx v) { return v.real(); }
    static double im(cplx v) { return v.imag(); }
};

template <class S>
inline S conj_val(S v) { return scalar_traits<S>::conj(v); }

inline constexpr std::ptrdiff_t kReduceChunk = 4096;
inline constexpr std::ptrdiff_t kParThreshold = 2048;

namespace blas {

// sum of conj(x)*y over a fixed chunk grid; chunk partials combined in order
template <class S>
S dot(std::span<const S> x, std::span<const S> y) {
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
    const std::ptrdiff_t nchunk = (n + kReduceChunk - 1) / kReduceChunk;
    if (nchunk <= 1) {
        S acc{};
        for (std::ptrdiff_t i = 0; i < n; ++i) acc += conj_val(x[i]) * y[i];
        return acc;
    }
    std::vector<S> partial(static_cast<size_t>(nchunk), S{});
#pragma omp parallel for schedule(static) if (n >= kParThreshold)
    for (std::ptrdiff_t c = 0; c < nchunk; ++c) {
        const std::ptrdiff_t lo = c * kReduceChunk;
        const std::ptrdiff_t hi = std::min(n, lo + kReduceChunk);
        S acc{};
        for (std::ptrdiff_t i = lo; i < hi; ++i) acc += conj_val(x[i]) * y[i];
        partial[static_cast<size_t>(c)] = acc;
    }
    S total{};
    for (const S& p : partial) total += p;
    return total;
}

template <class S>
double nrm2(std::span<const S> x) {
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
    const std::ptrdiff_t nchunk = (n + kReduceChunk - 1) / kReduceChunk;
    auto sq = [](S v) {
        const double a = scalar_traits<S>::re(v), b = scalar_traits<S>::im(v);
        return a * a + b * b;
    };
    if (nchunk <= 1) {
        double acc = 0.0;
        for (std::ptrdiff_t i = 0; i < n; ++i) acc += sq(x[i]);
        return std::sqrt(acc);
    }
    std::vector<double> partial(static_cast<size_t>(nchunk), 0.0);
#pragma omp parallel for schedule(static) if (n >= kParThreshold)
    for (std::ptrdiff_t c = 0; c < nchunk; ++c) {
        const std::ptrdiff_t lo = c * kReduceChunk;
        const std::ptrdiff_t hi = std::min(n, lo + kReduceChunk);
        double acc = 0.0;
        for (std::ptrdiff_t i = lo; i < hi; ++i) acc += sq(x[i]);
        partial[static_cast<size_t>(c)] = acc;
    }
    double total = 0.0;
    for (double p : partial) total += p;
    return std::sqrt(total);
}

template <class S>
void axpy(S alpha, std::span<const S> x, std::span<S> y) {
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static) if (n >= kParThreshold)
    for (std::ptrdiff_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <class S>
void scal(S alpha, std::span<S> x) {
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static) if (n >= kParThreshold)
    for (std::ptrdiff_t i = 0; i < n; ++i) x[i] *= alpha;
}

}  // namespace blas

// Plain single-threaded reference kernels, kept for tests and the kernel
// benchmark. Loop orders match the parallel versions so element-independent
// kernels agree bitwise.
namespace serial {

template <class S>
S dot(std::span<const S> x, std::span<const S> y) {
    S acc{};
    for (size_t i = 0; i < x.size(); ++i) acc += conj_val(x[i]) * y[i];
    return acc;
}

template <class S>
double nrm2(std::span<const S> x) {
    double acc = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double a = scalar_traits<S>::re(x[i]), b = scalar_traits<S>::im(x[i]);
        acc += a * a + b * b;
    }
    return std::sqrt(acc);
}

template <class S>
void axpy(S alpha, std::span<const S> x, std::span<S> y) {
    for (size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace serial

}  // namespace lyap

#include "fspike/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <cstdint>
#include <vector>

namespace fspike::kernels {

namespace {

int thread_cap = 0;

int env_threads() {
    const char* s = std::getenv("FSPIKE_THREADS");
    if (s == nullptr) return 0;
    char* end = nullptr;
    const long v = std::strtol(s, &end, 10);
    if (end == s || v < 1) return 0;
    return static_cast<int>(std::min<long>(v, 4096));
}

// Below these sizes the OpenMP fork/join costs more than the loop.
constexpr std::size_t kParallelComponents = 4096;
constexpr std::size_t kParallelMatrix = 1 << 16;

bool use_parallel(std::size_t work) { return work >= kParallelMatrix && max_threads() > 1; }

// Spike inputs are mostly zero; both matvec variants walk only the support.
std::vector<std::uint32_t> nonzero_indices(std::span<const double> x) {
    std::vector<std::uint32_t> nz;
    nz.reserve(x.size());
    for (std::size_t c = 0; c < x.size(); ++c)
        if (x[c] != 0.0) nz.push_back(static_cast<std::uint32_t>(c));
    return nz;
}

} // namespace

int max_threads() {
    if (thread_cap > 0) return thread_cap;
    const int env = env_threads();
    return env > 0 ? env : omp_get_max_threads();
}

void set_max_threads(int n) { thread_cap = std::max(n, 0); }

namespace serial {

void history_sum(std::span<double> out, std::span<const double> c,
                 std::span<const double> hist, int k, int lo, int hi) {
    const std::size_t d = out.size();
    for (int j = lo; j <= hi; ++j) {
        const double w = c[static_cast<std::size_t>(j > k ? j - k : k - j)];
        const double* row = hist.data() + static_cast<std::size_t>(j) * d;
        for (std::size_t i = 0; i < d; ++i) out[i] += w * row[i];
    }
}

void matvec_accumulate(std::span<double> out, std::span<const double> w,
                       std::span<const double> x) {
    const std::size_t cols = x.size();
    const auto nz = nonzero_indices(x);
    for (std::size_t r = 0; r < out.size(); ++r) {
        const double* row = w.data() + r * cols;
        double acc = 0.0;
        for (std::uint32_t c : nz) acc += row[c] * x[c];
        out[r] += acc;
    }
}

void matvec_transpose_accumulate(std::span<double> out, std::span<const double> w,
                                 std::span<const double> v) {
    const std::size_t cols = out.size();
    for (std::size_t r = 0; r < v.size(); ++r) {
        if (v[r] == 0.0) continue;
        const double* row = w.data() + r * cols;
        const double vr = v[r];
        for (std::size_t c = 0; c < cols; ++c) out[c] += vr * row[c];
    }
}

void outer_accumulate(std::span<double> g, double scale, std::span<const double> u,
                      std::span<const double> x) {
    const std::size_t cols = x.size();
    for (std::size_t r = 0; r < u.size(); ++r) {
        if (u[r] == 0.0) continue;
        const double ur = scale * u[r];
        double* row = g.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c)
            if (x[c] != 0.0) row[c] += ur * x[c];
    }
}

void ordered_sum(std::span<double> out, std::span<const double* const> parts) {
    std::fill(out.begin(), out.end(), 0.0);
    for (const double* p : parts)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += p[i];
}

} // namespace serial

namespace omp {

void history_sum(std::span<double> out, std::span<const double> c,
                 std::span<const double> hist, int k, int lo, int hi) {
    const auto d = static_cast<std::int64_t>(out.size());
#pragma omp parallel for schedule(static) num_threads(max_threads())
    for (std::int64_t i = 0; i < d; ++i) {
        double acc = out[i];
        for (int j = lo; j <= hi; ++j) {
            const double w = c[static_cast<std::size_t>(j > k ? j - k : k - j)];
            acc += w * hist[static_cast<std::size_t>(j) * out.size() + i];
        }
        out[i] = acc;
    }
}

void matvec_accumulate(std::span<double> out, std::span<const double> w,
                       std::span<const double> x) {
    const std::size_t cols = x.size();
    const auto nz = nonzero_indices(x);
    const auto rows = static_cast<std::int64_t>(out.size());
#pragma omp parallel for schedule(static) num_threads(max_threads())
    for (std::int64_t r = 0; r < rows; ++r) {
        const double* row = w.data() + r * cols;
        double acc = 0.0;
        for (std::uint32_t c : nz) acc += row[c] * x[c];
        out[r] += acc;
    }
}

void matvec_transpose_accumulate(std::span<double> out, std::span<const double> w,
                                 std::span<const double> v) {
    const auto cols = static_cast<std::int64_t>(out.size());
    const std::size_t rows = v.size();
#pragma omp parallel for schedule(static) num_threads(max_threads())
    for (std::int64_t c = 0; c < cols; ++c) {
        double acc = out[c];
        for (std::size_t r = 0; r < rows; ++r)
            if (v[r] != 0.0) acc += v[r] * w[r * cols + c];
        out[c] = acc;
    }
}

void outer_accumulate(std::span<double> g, double scale, std::span<const double> u,
                      std::span<const double> x) {
    const std::size_t cols = x.size();
    const auto rows = static_cast<std::int64_t>(u.size());
#pragma omp parallel for schedule(static) num_threads(max_threads())
    for (std::int64_t r = 0; r < rows; ++r) {
        if (u[r] == 0.0) continue;
        const double ur = scale * u[r];
        double* row = g.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c)
            if (x[c] != 0.0) row[c] += ur * x[c];
    }
}

void ordered_sum(std::span<double> out, std::span<const double* const> parts) {
    const auto n = static_cast<std::int64_t>(out.size());
#pragma omp parallel for schedule(static) num_threads(max_threads())
    for (std::int64_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (const double* p : parts) acc += p[i];
        out[i] = acc;
    }
}

} // namespace omp

void history_sum(std::span<double> out, std::span<const double> c,
                 std::span<const double> hist, int k, int lo, int hi) {
    if (out.size() >= kParallelComponents && max_threads() > 1)
        omp::history_sum(out, c, hist, k, lo, hi);
    else
        serial::history_sum(out, c, hist, k, lo, hi);
}

void matvec_accumulate(std::span<double> out, std::span<const double> w,
                       std::span<const double> x) {
    if (use_parallel(w.size()))
        omp::matvec_accumulate(out, w, x);
    else
        serial::matvec_accumulate(out, w, x);
}

void matvec_transpose_accumulate(std::span<double> out, std::span<const double> w,
                                 std::span<const double> v) {
    if (use_parallel(w.size()))
        omp::matvec_transpose_accumulate(out, w, v);
    else
        serial::matvec_transpose_accumulate(out, w, v);
}

void outer_accumulate(std::span<double> g, double scale, std::span<const double> u,
                      std::span<const double> x) {
    if (use_parallel(g.size()))
        omp::outer_accumulate(g, scale, u, x);
    else
        serial::outer_accumulate(g, scale, u, x);
}

} // namespace fspike::kernels

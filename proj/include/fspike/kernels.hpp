#pragma once

// Data-parallel inner loops. Each kernel has a serial reference in
// kernels::serial and an OpenMP version in kernels::omp; the two produce
// bit-identical results (parallelism is only ever across independent output
// components or samples, never inside a floating-point reduction). The
// unqualified entry points dispatch on problem size and the thread cap.

#include <cstddef>
#include <exception>
#include <span>
#include <vector>

namespace fspike::kernels {

// Thread cap: FSPIKE_THREADS when set to a positive integer, else the
// OpenMP default.
int max_threads();
void set_max_threads(int n);

enum class Exec { serial, parallel };

namespace serial {

// out[i] += sum_{j=lo}^{hi} c[|k - j|] * hist[j * d + i], d = out.size().
void history_sum(std::span<double> out, std::span<const double> c,
                 std::span<const double> hist, int k, int lo, int hi);

// out += W x (W row-major, rows = out.size()); zero entries of x are skipped.
void matvec_accumulate(std::span<double> out, std::span<const double> w,
                       std::span<const double> x);

// out += W^T v (W row-major rows = v.size(), cols = out.size()).
void matvec_transpose_accumulate(std::span<double> out, std::span<const double> w,
                                 std::span<const double> v);

// G += scale * u x^T; rows with u == 0 and columns with x == 0 are skipped.
void outer_accumulate(std::span<double> g, double scale, std::span<const double> u,
                      std::span<const double> x);

// out[i] = sum_s parts[s][i] in sample order s = 0..n-1.
void ordered_sum(std::span<double> out, std::span<const double* const> parts);

} // namespace serial

namespace omp {

void history_sum(std::span<double> out, std::span<const double> c,
                 std::span<const double> hist, int k, int lo, int hi);
void matvec_accumulate(std::span<double> out, std::span<const double> w,
                       std::span<const double> x);
void matvec_transpose_accumulate(std::span<double> out, std::span<const double> w,
                                 std::span<const double> v);
void outer_accumulate(std::span<double> g, double scale, std::span<const double> u,
                      std::span<const double> x);
void ordered_sum(std::span<double> out, std::span<const double* const> parts);

} // namespace omp

// Size-dispatched entry points used by the library.
void history_sum(std::span<double> out, std::span<const double> c,
                 std::span<const double> hist, int k, int lo, int hi);
void matvec_accumulate(std::span<double> out, std::span<const double> w,
                       std::span<const double> x);
void matvec_transpose_accumulate(std::span<double> out, std::span<const double> w,
                                 std::span<const double> v);
void outer_accumulate(std::span<double> g, double scale, std::span<const double> u,
                      std::span<const double> x);

// Runs body(i) for i in [0, n) serially or across OpenMP threads. Callers
// write only to per-index outputs.
// An exception escaping body is rethrown on the calling thread; when several
// indices fail, the lowest index wins.
template <class Body>
void for_each_index(Exec exec, int n, Body&& body) {
    if (exec == Exec::serial || n < 2 || max_threads() < 2) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 1) num_threads(max_threads())
    for (int i = 0; i < n; ++i) {
        try {
            body(i);
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace fspike::kernels

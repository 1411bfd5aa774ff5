#include "fspike/fde.hpp"
#include "fspike/kernels.hpp"

#include <doctest.h>

#include <random>
#include <stdexcept>
#include <vector>

using namespace fspike;

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double zero_fraction = 0.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> p(0.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = p(rng) < zero_fraction ? 0.0 : u(rng);
    return v;
}

struct ThreadCap {
    explicit ThreadCap(int n) { kernels::set_max_threads(n); }
    ~ThreadCap() { kernels::set_max_threads(0); }
};

} // namespace

TEST_CASE("thread cap") {
    ThreadCap cap(3);
    CHECK(kernels::max_threads() == 3);
}

TEST_CASE("serial and OpenMP kernels agree bit for bit") {
    ThreadCap cap(4);
    const std::size_t dim = 300;
    const int steps = 40;
    const auto c = predictor_weights(steps, 0.05, FractionalOrder(0.6));
    const auto hist = random_vector(static_cast<std::size_t>(steps + 1) * dim, 1);
    for (int lo : {0, 10, 35}) {
        std::vector<double> a(dim, 0.5), b(dim, 0.5);
        kernels::serial::history_sum(a, c, hist, steps, lo, steps - 1);
        kernels::omp::history_sum(b, c, hist, steps, lo, steps - 1);
        CHECK(a == b);
    }

    const std::size_t rows = 130, cols = 257;
    const auto w = random_vector(rows * cols, 2);
    const auto x = random_vector(cols, 3, 0.6);
    const auto v = random_vector(rows, 4, 0.3);
    std::vector<double> a(rows, 1.0), b(rows, 1.0);
    kernels::serial::matvec_accumulate(a, w, x);
    kernels::omp::matvec_accumulate(b, w, x);
    CHECK(a == b);

    std::vector<double> at(cols, -1.0), bt(cols, -1.0);
    kernels::serial::matvec_transpose_accumulate(at, w, v);
    kernels::omp::matvec_transpose_accumulate(bt, w, v);
    CHECK(at == bt);

    std::vector<double> ga = w, gb = w;
    kernels::serial::outer_accumulate(ga, 0.3, v, x);
    kernels::omp::outer_accumulate(gb, 0.3, v, x);
    CHECK(ga == gb);

    const auto p0 = random_vector(rows, 5), p1 = random_vector(rows, 6), p2 = random_vector(rows, 7);
    const double* parts[] = {p0.data(), p1.data(), p2.data()};
    std::vector<double> sa(rows), sb(rows);
    kernels::serial::ordered_sum(sa, parts);
    kernels::omp::ordered_sum(sb, parts);
    CHECK(sa == sb);
    for (std::size_t i = 0; i < rows; ++i) CHECK(sa[i] == (p0[i] + p1[i]) + p2[i]);
}

TEST_CASE("kernels against direct loops") {
    const std::size_t rows = 5, cols = 7;
    const auto w = random_vector(rows * cols, 8);
    const auto x = random_vector(cols, 9, 0.4);
    const auto v = random_vector(rows, 10);
    std::vector<double> y(rows, 0.0), yt(cols, 0.0);
    kernels::matvec_accumulate(y, w, x);
    kernels::matvec_transpose_accumulate(yt, w, v);
    for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < cols; ++c) s += w[r * cols + c] * x[c];
        CHECK(y[r] == doctest::Approx(s).epsilon(1e-14));
    }
    for (std::size_t c = 0; c < cols; ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < rows; ++r) s += w[r * cols + c] * v[r];
        CHECK(yt[c] == doctest::Approx(s).epsilon(1e-14));
    }
    std::vector<double> g(rows * cols, 0.0);
    kernels::outer_accumulate(g, 2.0, v, x);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) CHECK(g[r * cols + c] == doctest::Approx(2.0 * v[r] * x[c]));

    const int k = 6;
    const auto c = predictor_weights(k, 0.1, FractionalOrder(0.5));
    const auto hist = random_vector(static_cast<std::size_t>(k + 1) * 3, 11);
    std::vector<double> out(3, 0.0);
    kernels::history_sum(out, c, hist, k, 2, k - 1);
    for (std::size_t i = 0; i < 3; ++i) {
        double s = 0.0;
        for (int j = 2; j < k; ++j) s += c[static_cast<std::size_t>(k - j)] * hist[static_cast<std::size_t>(j) * 3 + i];
        CHECK(out[i] == doctest::Approx(s).epsilon(1e-14));
    }
}

TEST_CASE("for_each_index runs every index and rethrows the lowest failure") {
    ThreadCap cap(4);
    for (auto exec : {kernels::Exec::serial, kernels::Exec::parallel}) {
        std::vector<int> hits(100, 0);
        kernels::for_each_index(exec, 100, [&](int i) { hits[static_cast<std::size_t>(i)] += 1; });
        CHECK(hits == std::vector<int>(100, 1));
        try {
            kernels::for_each_index(exec, 50, [](int i) {
                if (i == 17 || i == 31) throw std::runtime_error("index " + std::to_string(i));
            });
            FAIL("expected an exception");
        } catch (const std::runtime_error& e) {
            CHECK(std::string(e.what()) == "index 17");
        }
    }
}

#include "fspike/surrogate.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

using namespace fspike;

namespace {

const SurrogateKind kAll[] = {SurrogateKind::sigmoid, SurrogateKind::arctan, SurrogateKind::piecewise_linear,
                              SurrogateKind::gaussian};

} // namespace

TEST_CASE("defaults") {
    CHECK(SurrogateSpec{}.kind == SurrogateKind::sigmoid);
    CHECK(SurrogateSpec{}.scale == 5.0);
    CHECK(default_scale(SurrogateKind::sigmoid) == 5.0);
    CHECK(default_scale(SurrogateKind::arctan) == 2.0);
    CHECK(default_scale(SurrogateKind::piecewise_linear) == 1.0);
    CHECK(default_scale(SurrogateKind::gaussian) == 1.0);
    SurrogateSpec bad{SurrogateKind::gaussian, 0.0};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    for (auto k : kAll) CHECK(parse_surrogate_kind(to_string(k)) == k);
    CHECK_THROWS_AS(parse_surrogate_kind("relu"), std::invalid_argument);
}

TEST_CASE("point values") {
    CHECK(surrogate_grad({SurrogateKind::sigmoid, 5.0}, 0.0) == 1.25);
    CHECK(surrogate_grad({SurrogateKind::arctan, 2.0}, 0.0) == 2.0);
    CHECK(surrogate_grad({SurrogateKind::piecewise_linear, 1.0}, 0.5) == 0.5);
    CHECK(surrogate_grad({SurrogateKind::piecewise_linear, 1.0}, 1.5) == 0.0);
    CHECK(surrogate_grad({SurrogateKind::gaussian, 1.0}, 0.0) == doctest::Approx(0.398942).epsilon(1e-6));
}

TEST_CASE("backward rule") {
    const SurrogateSpec sig{SurrogateKind::sigmoid, 5.0};
    CHECK(backward_rule(sig, 2.0, 0.0) == 2.5);
    CHECK(backward_rule({SurrogateKind::piecewise_linear, 1.0}, 1.0, 3.0) == 0.0);
    std::vector<double> x = {-2.0, -0.1, 0.0, 0.7}, up(4, 0.0), out(4, 9.0);
    backward_rule(sig, up, x, out);
    for (double v : out) CHECK(v == 0.0);
    up = {1.0, -2.0, 0.5, 3.0};
    backward_rule(sig, up, x, out);
    for (std::size_t i = 0; i < 4; ++i) CHECK(out[i] == up[i] * surrogate_grad(sig, x[i]));
}

TEST_CASE("symmetry, positivity and peak at zero") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-6.0, 6.0);
    for (auto k : kAll) {
        for (double scale : {0.5, default_scale(k), 3.0}) {
            const SurrogateSpec s{k, scale};
            const double peak = surrogate_grad(s, 0.0);
            for (int i = 0; i < 500; ++i) {
                const double x = u(rng);
                CHECK(surrogate_grad(s, x) == surrogate_grad(s, -x));
                CHECK(surrogate_grad(s, x) >= 0.0);
                CHECK(surrogate_grad(s, x) <= peak);
            }
        }
    }
}

TEST_CASE("piecewise linear has unit mass") {
    for (double g : {0.25, 1.0, 2.0}) {
        const SurrogateSpec s{SurrogateKind::piecewise_linear, g};
        CHECK(2.0 * g * surrogate_grad(s, 0.0) == 1.0);
        CHECK(surrogate_primitive(s, g) - surrogate_primitive(s, -g) == 1.0);
    }
}

TEST_CASE("primitive differentiates to the surrogate") {
    for (auto k : kAll) {
        const SurrogateSpec s = SurrogateSpec::with_default_scale(k);
        for (double x = -3.0; x <= 3.0; x += 0.0625) {
            if (k == SurrogateKind::piecewise_linear && std::abs(std::abs(x) - 1.0) < 1e-3) continue;
            const double h = 1e-5;
            const double fd = (surrogate_primitive(s, x + h) - surrogate_primitive(s, x - h)) / (2 * h);
            INFO(to_string(k) << " x = " << x);
            CHECK(std::abs(fd - surrogate_grad(s, x)) < 1e-6);
        }
        CHECK(std::abs(surrogate_primitive(s, -1e6)) < 1e-5);
    }
    const SurrogateSpec sig{SurrogateKind::sigmoid, 5.0};
    CHECK(surrogate_primitive(sig, 0.3) == doctest::Approx(1.0 / (1.0 + std::exp(-1.5))).epsilon(1e-15));
}

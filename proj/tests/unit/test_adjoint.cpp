#include "fspike/adjoint.hpp"
#include "fspike/special.hpp"
#include "fspike/tracking.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

using namespace fspike;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

NeuronParams neuron(double alpha, double tau, double theta = 1.0,
                    SurrogateKind kind = SurrogateKind::sigmoid) {
    NeuronParams p;
    p.alpha = FractionalOrder(alpha);
    p.tau_alpha = tau;
    p.theta = theta;
    p.surrogate = SurrogateSpec::with_default_scale(kind);
    return p;
}

InputTensor uniform_input(int frames, std::size_t features, unsigned seed, double hi = 2.0) {
    InputTensor in(frames, 1, features);
    unsigned state = seed;
    for (double& v : in.data()) {
        state = state * 1664525u + 1013904223u;
        v = hi * ((state >> 8) / double(1u << 24));
    }
    return in;
}

// Linear readout sum_i g_i counts_i of the smooth forward pass.
double readout(const NetworkSpec& spec, const SampleInput& in, const TimeGrid& grid,
               std::span<const double> g) {
    const auto s = forward_sample(spec, in, grid);
    const auto c = s.counts(spec);
    double v = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) v += g[i] * c[i];
    return v;
}

double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

} // namespace

TEST_CASE("adjoint right-hand side") {
    SUBCASE("zero adjoint maps to zero") {
        const std::size_t dims[] = {3, 4, 2};
        const auto spec = make_network(dims, neuron(0.7, 2.0), FractionalOrder(0.7), 1, 4.0);
        const auto grid = TimeGrid::with_step(0.0, 0.5, 10);
        const auto in = uniform_input(10, 3, 5);
        const auto fwd = forward_sample(spec, in.sample(0), grid);
        const std::vector<double> lambda(spec.state_dim(), 0.0);
        std::vector<double> out(spec.state_dim(), 1.0);
        for (int k = 0; k <= 10; ++k) {
            adjoint_rhs_at(spec, fwd, k, lambda, out);
            for (double v : out) CHECK(v == 0.0);
        }
    }

    SUBCASE("deep sub-threshold neuron is a pure leak") {
        for (double tau : {1.0, 2.0}) {
            NetworkSpec spec;
            spec.alpha = FractionalOrder(0.8);
            spec.layers.push_back({Matrix(1, 1, 1.0), neuron(0.8, tau, 1.0, SurrogateKind::piecewise_linear)});
            const auto grid = TimeGrid::with_step(0.0, 1.0, 1);
            Trajectory traj(grid, 2);
            traj.value(0)[0] = -5.0;
            traj.value(1)[0] = -5.0;
            const std::vector<double> x(2, 0.0);
            SampleState fwd(std::move(traj), SampleInput::contiguous(x, 2, 1));
            const std::vector<double> lambda = {0.7, 3.0};
            std::vector<double> out(2);
            adjoint_rhs(spec, fwd, 0.2, lambda, out);
            CHECK(out[0] == doctest::Approx(-0.7 / tau).epsilon(1e-15));
            CHECK(out[1] == 0.0);
        }
    }

    SUBCASE("transpose of the finite-difference Jacobian on a 1-1-1 network") {
        NetworkSpec spec;
        spec.alpha = FractionalOrder(0.6);
        spec.spike_mode = SpikeMode::smooth;
        spec.layers.push_back({Matrix(1, 1, 1.3), neuron(0.6, 2.0, 1.0)});
        spec.layers.push_back({Matrix(1, 1, -0.8), neuron(0.6, 1.5, 0.7)});
        spec.layers[1].neuron.surrogate.scale = 3.0;

        const auto grid = TimeGrid::with_step(0.0, 1.0, 1);
        const std::vector<double> x = {0.9, 0.9};
        for (const auto& y : {std::vector<double>{0.8, 0.5, 0.1}, std::vector<double>{1.1, 0.75, 2.0},
                              std::vector<double>{-0.3, 1.4, 0.0}}) {
            Trajectory traj(grid, 3);
            std::copy(y.begin(), y.end(), traj.value(0).begin());
            std::copy(y.begin(), y.end(), traj.value(1).begin());
            SampleState fwd(std::move(traj), SampleInput::contiguous(x, 2, 1));
            const std::vector<double> lambda = {0.4, -1.2, 0.9};
            std::vector<double> out(3);
            adjoint_rhs_at(spec, fwd, 0, lambda, out);

            const double eps = 1e-6;
            for (std::size_t j = 0; j < 3; ++j) {
                auto yp = y, ym = y;
                yp[j] += eps;
                ym[j] -= eps;
                std::vector<double> fp(3), fm(3);
                concat_dynamics(spec, yp, std::span<const double>(x).first(1), fp);
                concat_dynamics(spec, ym, std::span<const double>(x).first(1), fm);
                double jtv = 0.0;
                for (std::size_t i = 0; i < 3; ++i) jtv += lambda[i] * (fp[i] - fm[i]) / (2.0 * eps);
                CHECK(out[j] == doctest::Approx(jtv).epsilon(1e-5).scale(1.0));
            }
        }
    }

    SUBCASE("wrong sizes and missing states") {
        const std::size_t dims[] = {2, 2};
        const auto spec = make_network(dims, neuron(1.0, 2.0), FractionalOrder(1.0), 1);
        const auto grid = TimeGrid::with_step(0.0, 1.0, 3);
        const auto in = uniform_input(3, 2, 1);
        const auto fwd = forward_sample(spec, in.sample(0), grid);
        std::vector<double> lam(4), out(4), bad(3);
        CHECK_THROWS_AS(adjoint_rhs_at(spec, fwd, 0, bad, out), std::invalid_argument);
        CHECK_THROWS_AS(adjoint_rhs_at(spec, fwd, 4, lam, out), std::logic_error);
    }
}

TEST_CASE("terminal condition packing") {
    const std::size_t dims[] = {3, 4, 2};
    const auto spec = make_network(dims, neuron(1.0, 2.0), FractionalOrder(1.0), 1);
    const double g[] = {0.5, -2.0};
    const auto ts = terminal_condition(spec, g, TerminalSlot::s_sum);
    const auto tu = terminal_condition(spec, g, TerminalSlot::membrane_last);
    CHECK(ts == std::vector<double>{0, 0, 0, 0, 0, 0, 0.5, -2.0});
    CHECK(tu == std::vector<double>{0, 0, 0, 0, 0.5, -2.0, 0, 0});
    const double wrong[] = {1.0};
    CHECK_THROWS_AS(terminal_condition(spec, wrong, TerminalSlot::s_sum), std::invalid_argument);
}

TEST_CASE("backward pass basics") {
    const std::size_t dims[] = {4, 6, 3};
    const auto grid = TimeGrid::with_step(0.0, 0.5, 16);
    const auto in = uniform_input(16, 4, 7);
    const auto spec = make_network(dims, neuron(0.8, 2.0), FractionalOrder(0.8), 2, 3.0);
    const auto fwd = forward_sample(spec, in.sample(0), grid);

    SUBCASE("zero loss gradient gives zero gradients") {
        const std::vector<double> zero(3, 0.0);
        for (auto scheme : {AdjointScheme::discrete, AdjointScheme::continuous}) {
            const auto g = backward(spec, fwd, zero, grid, {}, {scheme, TerminalSlot::s_sum});
            REQUIRE(g.dW.size() == 2);
            for (const auto& m : g.dW)
                for (double v : m.values()) CHECK(v == 0.0);
        }
    }

    SUBCASE("terminal value is kept exactly") {
        const std::vector<double> lg = {0.3, -1.0, 2.5};
        auto grads = GradientSet::zeros_like(spec);
        for (auto scheme : {AdjointScheme::discrete, AdjointScheme::continuous}) {
            const auto adj = backward_accumulate(spec, fwd, lg, grid, {}, {scheme, TerminalSlot::s_sum}, grads);
            const auto expected = terminal_condition(spec, lg, TerminalSlot::s_sum);
            const auto last = adj.lambda.value(grid.steps());
            for (std::size_t i = 0; i < expected.size(); ++i) CHECK(last[i] == expected[i]);
        }
    }

    SUBCASE("linear in the loss gradient") {
        const std::vector<double> g = {0.3, -1.0, 2.5};
        std::vector<double> cg(3);
        const double c = -3.7;
        for (int i = 0; i < 3; ++i) cg[i] = c * g[i];
        const auto a = backward(spec, fwd, g, grid);
        const auto b = backward(spec, fwd, cg, grid);
        double nonzero = 0.0;
        for (std::size_t l = 0; l < 2; ++l) {
            const auto x = a.dW[l].values();
            const auto y = b.dW[l].values();
            for (std::size_t i = 0; i < x.size(); ++i) {
                CHECK(std::abs(y[i] - c * x[i]) <= 1e-12 * std::max(1.0, std::abs(c * x[i])));
                nonzero += std::abs(x[i]);
            }
        }
        CHECK(nonzero > 0.0);
    }

    SUBCASE("accumulation adds onto existing gradients") {
        const std::vector<double> g = {1.0, 0.0, -1.0};
        const auto once = backward(spec, fwd, g, grid);
        auto twice = GradientSet::zeros_like(spec);
        backward_accumulate(spec, fwd, g, grid, {}, {}, twice);
        backward_accumulate(spec, fwd, g, grid, {}, {}, twice);
        for (std::size_t l = 0; l < 2; ++l)
            for (std::size_t i = 0; i < once.dW[l].size(); ++i)
                CHECK(twice.dW[l].values()[i] == doctest::Approx(2.0 * once.dW[l].values()[i]));
    }

    SUBCASE("rejected inputs") {
        const std::vector<double> g = {1.0, 0.0, -1.0};
        CHECK_THROWS_AS(backward(spec, fwd, g, TimeGrid::with_step(0.0, 0.5, 15)), std::invalid_argument);
        CHECK_THROWS_AS(backward(spec, fwd, g, TimeGrid::with_step(0.0, 0.25, 16)), std::invalid_argument);
        auto hard = spec;
        for (auto& l : hard.layers) l.neuron.reset = ResetMode::hard_zero;
        const auto hfwd = forward_sample(hard, in.sample(0), grid);
        CHECK_THROWS_AS(backward(hard, hfwd, g, grid), std::invalid_argument);
        const std::vector<double> short_g = {1.0};
        CHECK_THROWS_AS(backward(spec, fwd, short_g, grid), std::invalid_argument);
    }
}

TEST_CASE("zero input gives zero gradients beyond the first layer") {
    const std::size_t dims[] = {5, 6, 4, 3};
    for (double alpha : {1.0, 0.7}) {
        const auto spec = make_network(dims, neuron(alpha, 2.0, 1.0, SurrogateKind::piecewise_linear),
                                       FractionalOrder(alpha), 4);
        const auto grid = TimeGrid::with_step(0.0, 1.0, 12);
        InputTensor in(12, 1, 5);
        const auto fwd = forward_sample(spec, in.sample(0), grid);
        const std::vector<double> g = {1.0, -2.0, 0.5};
        const auto grads = backward(spec, fwd, g, grid);
        for (std::size_t l = 1; l < grads.dW.size(); ++l)
            for (double v : grads.dW[l].values()) CHECK(v == 0.0);
    }
}

TEST_CASE("linear neuron gradient against the closed form") {
    // U(t) = w (1 - E_a(-t^a / tau)) under unit input with firing disabled.
    // L = (U(b) - target)^2 / 2 gives dL/dw = (U(b) - target) (1 - E_a(-b^a / tau)).
    const double tau = 2.0, w = 1.5, target = 0.4, b = 3.0;
    struct Case {
        double alpha;
        int n;
        double tol;
    };
    for (const Case c : {Case{1.0, 1000, 1e-3}, Case{0.7, 4000, 1e-2}}) {
        CAPTURE(c.alpha);
        NetworkSpec spec;
        spec.alpha = FractionalOrder(c.alpha);
        spec.layers.push_back({Matrix(1, 1, w), neuron(c.alpha, tau, kInf)});
        const auto grid = TimeGrid(0.0, b, c.n);
        InputTensor in(c.n, 1, 1);
        for (double& v : in.data()) v = 1.0;
        const auto fwd = forward_sample(spec, in.sample(0), grid);
        const double u_b = fwd.membrane(spec, 0, c.n)[0];
        const double shape = 1.0 - mittag_leffler(spec.alpha, -std::pow(b, c.alpha) / tau);
        CHECK(u_b == doctest::Approx(w * shape).epsilon(c.tol));

        const double analytic = (w * shape - target) * shape;
        const std::vector<double> lg = {u_b - target};
        const auto schemes = c.alpha == 1.0
                                 ? std::vector<AdjointScheme>{AdjointScheme::discrete, AdjointScheme::continuous}
                                 : std::vector<AdjointScheme>{AdjointScheme::discrete};
        for (auto scheme : schemes) {
            const auto g = backward(spec, fwd, lg, grid, {}, {scheme, TerminalSlot::membrane_last});
            CHECK(rel_err(g.dW[0](0, 0), analytic) < c.tol);
        }
    }
}

TEST_CASE("adjoint gradients match finite differences of the smooth forward pass") {
    const std::size_t dims[] = {4, 8, 2};
    const auto grid = TimeGrid::with_step(0.0, 0.25, 16);
    const auto in = uniform_input(16, 4, 11);
    const std::vector<double> g = {1.0, -0.6};
    for (double alpha : {1.0, 0.8, 0.5}) {
        CAPTURE(alpha);
        auto spec = make_network(dims, neuron(alpha, 2.0), FractionalOrder(alpha), 3, 2.0);
        spec.spike_mode = SpikeMode::smooth;
        const auto fwd = forward_sample(spec, in.sample(0), grid);
        const auto grads = backward(spec, fwd, g, grid);

        const double eps = 1e-4;
        double worst = 0.0;
        for (std::size_t l = 0; l < spec.layers.size(); ++l) {
            for (std::size_t i = 0; i < spec.layers[l].weight.size(); ++i) {
                auto plus = spec, minus = spec;
                plus.layers[l].weight.values()[i] += eps;
                minus.layers[l].weight.values()[i] -= eps;
                const double fd =
                    (readout(plus, in.sample(0), grid, g) - readout(minus, in.sample(0), grid, g)) / (2.0 * eps);
                worst = std::max(worst, rel_err(grads.dW[l].values()[i], fd));
            }
        }
        CHECK(worst < 1e-3);
    }
}

TEST_CASE("backward memory does not grow parameter buffers with the horizon") {
    const std::size_t dims[] = {6, 10, 3};
    const auto spec = make_network(dims, neuron(0.8, 2.0), FractionalOrder(0.8), 9, 3.0);
    const std::vector<double> g = {1.0, 0.5, -1.0};
    std::vector<std::size_t> param_allocs, param_bytes, traj_bytes;
    for (int n : {16, 64, 256}) {
        const auto grid = TimeGrid::with_step(0.0, 0.25, n);
        const auto in = uniform_input(n, 6, 13);
        const auto fwd = forward_sample(spec, in.sample(0), grid);
        AllocationLedger ledger;
        {
            ScopedLedger scope(ledger);
            const auto grads = backward(spec, fwd, g, grid);
            CHECK(grads.all_finite());
        }
        param_allocs.push_back(ledger.stats(AllocCategory::parameter).allocations);
        param_bytes.push_back(ledger.stats(AllocCategory::parameter).peak_live_bytes);
        traj_bytes.push_back(ledger.stats(AllocCategory::trajectory).bytes_allocated);
        // Adjoint values and right-hand sides over N + 1 points.
        CHECK(traj_bytes.back() == 2 * (n + 1) * spec.state_dim() * sizeof(double));
    }
    CHECK(param_allocs[0] == spec.layers.size());
    CHECK(param_allocs[1] == param_allocs[0]);
    CHECK(param_allocs[2] == param_allocs[0]);
    CHECK(param_bytes[0] == spec.parameter_count() * sizeof(double));
    CHECK(param_bytes[2] == param_bytes[0]);
    CHECK(traj_bytes[2] > traj_bytes[1]);
    CHECK(traj_bytes[1] > traj_bytes[0]);
}

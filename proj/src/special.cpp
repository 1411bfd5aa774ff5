#include "fspike/special.hpp"

#include "fspike/error.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

namespace fspike {

namespace {

constexpr double kLanczosG = 7.0;
constexpr std::array<double, 9> kLanczos = {
    0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
    771.32342877765313,   -176.61502916214059,   12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7,
};

// Lanczos sum A_g(x) for the shifted argument x = z - 1, z >= 1/2.
double lanczos_sum(double x) {
    double a = kLanczos[0];
    for (std::size_t i = 1; i < kLanczos.size(); ++i) a += kLanczos[i] / (x + static_cast<double>(i));
    return a;
}

bool is_nonpositive_integer(double x) { return x <= 0.0 && std::floor(x) == x; }

// 1 / Gamma(x), zero at the poles.
double reciprocal_gamma(double x) {
    if (is_nonpositive_integer(x)) return 0.0;
    if (x > 170.0) return std::exp(-log_gamma(x));
    return 1.0 / gamma_fn(x);
}

std::string describe(FractionalOrder alpha, double z) {
    return "alpha=" + std::to_string(alpha.value()) + ", z=" + std::to_string(z);
}

} // namespace

double gamma_fn(double x) {
    if (std::isnan(x)) return x;
    if (is_nonpositive_integer(x))
        throw std::invalid_argument("gamma_fn: pole at " + std::to_string(x));
    if (x < 0.5) {
        const double pi = std::numbers::pi;
        return pi / (std::sin(pi * x) * gamma_fn(1.0 - x));
    }
    const double xm = x - 1.0;
    const double t = xm + kLanczosG + 0.5;
    return std::sqrt(2.0 * std::numbers::pi) * std::pow(t, xm + 0.5) * std::exp(-t) *
           lanczos_sum(xm);
}

double log_gamma(double x) {
    if (!(x > 0.0)) throw std::invalid_argument("log_gamma: argument must be positive");
    if (x < 0.5) {
        const double pi = std::numbers::pi;
        return std::log(pi / std::sin(pi * x)) - log_gamma(1.0 - x);
    }
    const double xm = x - 1.0;
    const double t = xm + kLanczosG + 0.5;
    return 0.5 * std::log(2.0 * std::numbers::pi) + (xm + 0.5) * std::log(t) - t +
           std::log(lanczos_sum(xm));
}

double mittag_leffler_laplace(FractionalOrder alpha, double x) {
    const double a = alpha.value();
    if (alpha.is_integer()) return std::exp(-x);
    if (x < 0.0) throw std::invalid_argument("mittag_leffler_laplace: need x >= 0");
    if (x == 0.0) return 1.0;

    // E_a(-x) = int K(e^u) e^u exp(-s e^u) du with s = x^(1/a). The integrand
    // is analytic in the strip |Im u| < pi (1 - a) / a, so the trapezoid rule
    // converges geometrically once the step resolves that strip.
    const double pi = std::numbers::pi;
    const double s = std::pow(x, 1.0 / a);
    const double sin_ap = std::sin(a * pi);
    const double cos_ap = std::cos(a * pi);
    const double strip = pi * (1.0 - a) / a;
    const double du = std::min(0.05, strip / 6.0);
    const double u_lo = std::log(1e-18) / a;
    const double u_hi = std::log(60.0 / s) + 1.0;
    if (!(u_hi > u_lo)) return 0.0;

    const auto integrand = [&](double u) {
        const double ra = std::exp(a * u);
        return sin_ap / pi * ra / (ra * ra + 2.0 * ra * cos_ap + 1.0) * std::exp(-s * std::exp(u));
    };
    double sum = 0.5 * (integrand(u_lo) + integrand(u_hi));
    const long n = static_cast<long>(std::ceil((u_hi - u_lo) / du));
    const double step = (u_hi - u_lo) / static_cast<double>(n);
    for (long i = 1; i < n; ++i) sum += integrand(u_lo + static_cast<double>(i) * step);
    return sum * step;
}

double mittag_leffler(FractionalOrder alpha, double z) {
    if (!std::isfinite(z)) throw std::invalid_argument("mittag_leffler: z must be finite");
    const double a = alpha.value();
    if (alpha.is_integer()) return std::exp(z);
    if (z == 0.0) return 1.0;

    if (z < kMittagLefflerAsymptoticCrossover) {
        // E_a(z) ~ -sum_{k>=1} z^-k / Gamma(1 - a k); the remainder is
        // exponentially small, so stop at the smallest term.
        double sum = 0.0;
        double prev = INFINITY;
        double last = INFINITY;
        double zk = 1.0;
        for (int k = 1; k < 200; ++k) {
            zk /= z;
            const double term = -zk * reciprocal_gamma(1.0 - a * k);
            const double mag = std::abs(term);
            if (mag > prev && mag != 0.0) break;
            sum += term;
            if (mag != 0.0) {
                prev = mag;
                last = mag;
            }
            if (mag != 0.0 && mag < 1e-17 * std::abs(sum)) break;
        }
        if (last <= 1e-10) return sum;
        return mittag_leffler_laplace(alpha, -z);
    }

    double sum = 0.0;
    double largest = 0.0;
    const double log_abs_z = std::log(std::abs(z));
    const bool negative = z < 0.0;
    bool converged = false;
    double prev_mag = INFINITY;
    for (int k = 0; k < kMittagLefflerMaxTerms; ++k) {
        const double log_mag = k * log_abs_z - log_gamma(a * k + 1.0);
        const double mag = std::exp(log_mag);
        const double term = (negative && (k % 2 == 1)) ? -mag : mag;
        sum += term;
        largest = std::max(largest, mag);
        // Cancellation among alternating terms costs about eps * largest.
        if (negative && largest * 4e-16 > 1e-13) return mittag_leffler_laplace(alpha, -z);
        if (!std::isfinite(sum))
            throw PrecisionError("mittag_leffler: series overflows for " + describe(alpha, z));
        if (k > 0 && mag <= prev_mag && mag < 1e-15 * std::abs(sum)) {
            converged = true;
            break;
        }
        prev_mag = mag;
    }
    if (!converged) {
        if (negative) return mittag_leffler_laplace(alpha, -z);
        throw PrecisionError("mittag_leffler: series did not converge within " +
                             std::to_string(kMittagLefflerMaxTerms) + " terms for " +
                             describe(alpha, z));
    }
    return sum;
}

} // namespace fspike

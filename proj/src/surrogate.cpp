#include "fspike/surrogate.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace fspike {

namespace {

double logistic(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

} // namespace

double default_scale(SurrogateKind kind) {
    switch (kind) {
    case SurrogateKind::sigmoid: return 5.0;
    case SurrogateKind::arctan: return 2.0;
    case SurrogateKind::piecewise_linear: return 1.0;
    case SurrogateKind::gaussian: return 1.0;
    }
    return 1.0;
}

SurrogateSpec SurrogateSpec::with_default_scale(SurrogateKind kind) {
    return {kind, default_scale(kind)};
}

void SurrogateSpec::validate() const {
    if (!(scale > 0.0) || !std::isfinite(scale))
        throw std::invalid_argument("surrogate scale must be a positive finite number");
}

double surrogate_grad(const SurrogateSpec& spec, double x) {
    const double k = spec.scale;
    switch (spec.kind) {
    case SurrogateKind::sigmoid: {
        // Evaluated at |x| so that s(x) == s(-x) holds bit for bit.
        const double s = logistic(k * std::abs(x));
        return k * s * (1.0 - s);
    }
    case SurrogateKind::arctan: {
        const double kx = k * x;
        return k / (1.0 + kx * kx);
    }
    case SurrogateKind::piecewise_linear:
        return (x >= -k && x <= k) ? 1.0 / (2.0 * k) : 0.0;
    case SurrogateKind::gaussian:
        return std::exp(-x * x / (2.0 * k * k)) / (k * std::sqrt(2.0 * std::numbers::pi));
    }
    return 0.0;
}

double surrogate_primitive(const SurrogateSpec& spec, double x) {
    const double k = spec.scale;
    switch (spec.kind) {
    case SurrogateKind::sigmoid: return logistic(k * x);
    case SurrogateKind::arctan: return std::atan(k * x) + 0.5 * std::numbers::pi;
    case SurrogateKind::piecewise_linear:
        if (x <= -k) return 0.0;
        if (x >= k) return 1.0;
        return (x + k) / (2.0 * k);
    case SurrogateKind::gaussian: return 0.5 * std::erfc(-x / (k * std::numbers::sqrt2));
    }
    return 0.0;
}

double backward_rule(const SurrogateSpec& spec, double upstream, double x) {
    if (upstream == 0.0) return 0.0;
    return upstream * surrogate_grad(spec, x);
}

void backward_rule(const SurrogateSpec& spec, std::span<const double> upstream,
                   std::span<const double> x, std::span<double> out) {
    if (upstream.size() != x.size() || out.size() != x.size())
        throw std::invalid_argument("backward_rule: dimension mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = backward_rule(spec, upstream[i], x[i]);
}

std::string_view to_string(SurrogateKind kind) {
    switch (kind) {
    case SurrogateKind::sigmoid: return "sigmoid";
    case SurrogateKind::arctan: return "arctan";
    case SurrogateKind::piecewise_linear: return "piecewise_linear";
    case SurrogateKind::gaussian: return "gaussian";
    }
    return "?";
}

SurrogateKind parse_surrogate_kind(std::string_view name) {
    if (name == "sigmoid") return SurrogateKind::sigmoid;
    if (name == "arctan") return SurrogateKind::arctan;
    if (name == "piecewise_linear") return SurrogateKind::piecewise_linear;
    if (name == "gaussian") return SurrogateKind::gaussian;
    throw std::invalid_argument("unknown surrogate '" + std::string(name) + "'");
}

} // namespace fspike

#pragma once

#include <span>
#include <string>
#include <string_view>

namespace fspike {

enum class SurrogateKind { sigmoid, arctan, piecewise_linear, gaussian };

// Smooth stand-in for dH/dx. `scale` is kappa (sigmoid, arctan), gamma
// (piecewise_linear) or sigma (gaussian).
struct SurrogateSpec {
    SurrogateKind kind = SurrogateKind::sigmoid;
    double scale = 5.0;

    static SurrogateSpec with_default_scale(SurrogateKind kind);
    void validate() const;

    friend bool operator==(const SurrogateSpec&, const SurrogateSpec&) = default;
};

double default_scale(SurrogateKind kind);

// s(x) with x = U - theta. Always >= 0.
double surrogate_grad(const SurrogateSpec& spec, double x);

// Antiderivative of s vanishing at -infinity: the smooth spike used when a
// network runs in gradcheck mode (sigmoid(kappa x) for the sigmoid family).
double surrogate_primitive(const SurrogateSpec& spec, double x);

// dL/du = dL/ds * s(u - theta), componentwise. `x` holds u - theta.
void backward_rule(const SurrogateSpec& spec, std::span<const double> upstream,
                   std::span<const double> x, std::span<double> out);
double backward_rule(const SurrogateSpec& spec, double upstream, double x);

std::string_view to_string(SurrogateKind kind);
SurrogateKind parse_surrogate_kind(std::string_view name);

} // namespace fspike

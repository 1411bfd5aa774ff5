#include "fspike/energy.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fspike {

void EnergyModel::validate() const {
    if (!(e_mac >= 0.0) || !(e_ac >= 0.0) || !std::isfinite(e_mac) || !std::isfinite(e_ac))
        throw std::invalid_argument("energy: per-operation energies must be finite and >= 0");
    if (timesteps < 1) throw std::invalid_argument("energy: timesteps must be >= 1");
}

EnergyReport estimate_energy(std::span<const LayerCost> layers, const EnergyModel& model) {
    model.validate();
    EnergyReport report;
    report.layers.reserve(layers.size());
    for (const auto& l : layers) {
        if (!(l.rate >= 0.0 && l.rate <= 1.0))
            throw std::invalid_argument("energy: layer '" + l.name + "' rate " + std::to_string(l.rate) +
                                        " outside [0, 1]");
        if (!(l.flops >= 0.0) || !std::isfinite(l.flops))
            throw std::invalid_argument("energy: layer '" + l.name + "' has negative or non-finite flops");
        const double e = l.op == OpKind::mac ? model.e_mac : model.e_ac;
        const double j = e * model.timesteps * l.rate * l.flops;
        report.layers.push_back({l.name, j});
        report.total += j;
    }
    return report;
}

double dense_flops(std::size_t in, std::size_t out) {
    return 2.0 * static_cast<double>(in) * static_cast<double>(out);
}

double conv_flops(std::size_t out_h, std::size_t out_w, std::size_t c_in, std::size_t c_out, std::size_t k) {
    return 2.0 * static_cast<double>(out_h) * static_cast<double>(out_w) * static_cast<double>(c_in) *
           static_cast<double>(c_out) * static_cast<double>(k * k);
}

std::vector<LayerCost> network_costs(const NetworkSpec& spec, std::span<const double> rates, bool mac_first) {
    if (rates.size() != spec.layers.size())
        throw std::invalid_argument("energy: need one firing rate per layer, got " + std::to_string(rates.size()));
    std::vector<LayerCost> costs;
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        const auto& layer = spec.layers[l];
        costs.push_back({"dense" + std::to_string(l + 1) + " " + std::to_string(layer.in_dim()) + "x" +
                             std::to_string(layer.out_dim()),
                         l == 0 && mac_first ? OpKind::mac : OpKind::ac,
                         dense_flops(layer.in_dim(), layer.out_dim()), rates[l]});
    }
    return costs;
}

std::string_view to_string(OpKind op) { return op == OpKind::mac ? "mac" : "ac"; }

OpKind parse_op_kind(std::string_view name) {
    if (name == "mac") return OpKind::mac;
    if (name == "ac") return OpKind::ac;
    throw std::invalid_argument("unknown operation kind '" + std::string(name) + "' (expected mac or ac)");
}

} // namespace fspike

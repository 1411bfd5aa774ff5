#pragma once

// Post-hoc inference energy: E = E_op * T * R * FL per layer, with E_MAC for
// the encoding layer and E_AC for spike-driven layers.

#include "fspike/network.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fspike {

struct EnergyModel {
    double e_mac = 4.6e-12; // joules per multiply-accumulate
    double e_ac = 0.9e-12;  // joules per accumulate
    int timesteps = 16;

    void validate() const;
};

enum class OpKind { mac, ac };

struct LayerCost {
    std::string name;
    OpKind op = OpKind::ac;
    double flops = 0.0; // per sample per timestep
    double rate = 0.0;  // firing rate in [0, 1]
};

struct LayerEnergy {
    std::string name;
    double joules = 0.0;
};

struct EnergyReport {
    double total = 0.0;
    std::vector<LayerEnergy> layers;
};

EnergyReport estimate_energy(std::span<const LayerCost> layers, const EnergyModel& model);

// 2 * in * out.
double dense_flops(std::size_t in, std::size_t out);
// 2 * out_h * out_w * c_in * c_out * k * k.
double conv_flops(std::size_t out_h, std::size_t out_w, std::size_t c_in, std::size_t c_out, std::size_t k);

// One entry per dense layer, rated by that layer's firing rate. The first
// layer is costed as MAC when `mac_first` is set.
std::vector<LayerCost> network_costs(const NetworkSpec& spec, std::span<const double> rates,
                                     bool mac_first = true);

std::string_view to_string(OpKind op);
OpKind parse_op_kind(std::string_view name);

} // namespace fspike

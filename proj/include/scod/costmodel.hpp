#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "scod/config.hpp"
#include "scod/spiking.hpp"

namespace scod {

// Multiply-accumulate count of one convolution layer: O^2 * N * k^2 * M.
// 1 MAC = 1 FLOP; bias and activations are not counted. The plain-integer
// overload accepts any k >= 1 (the formula needs no odd-kernel rule).
std::uint64_t flops_conv(std::size_t output_size, std::size_t in_channels, std::size_t kernel,
                         std::size_t out_channels);
std::uint64_t flops_conv(const ConvSpec& spec, std::size_t output_size);

// Effective spiking cost: base * S_a. S_a outside [0,1] is rejected unless
// the out-of-range override is set.
double flops_spiking_conv(std::uint64_t base, double s_a, bool allow_out_of_range = false);

// Fraction of neuron-timesteps carrying a spike, over a collection.
double measure_spiking_activity(const std::vector<const SpikeTrain*>& trains);
double measure_spiking_activity(const std::vector<SpikeTrain>& trains);

// Eq.-style energy figure: sum of layer FLOPS * coeff * T.
double energy_snn(const std::vector<double>& layer_flops, std::size_t timesteps, double coeff);

struct LayerCost {
    std::string name;
    bool backbone = true;
    bool spiking = false;
    std::uint64_t flops_cnn = 0;
    double s_a = 1.0;
    double flops_snn = 0.0; // flops_cnn * s_a
    double energy = 0.0;    // flops_snn * coeff * T
};

struct NetworkProfile {
    std::vector<LayerCost> layers;
    std::uint64_t total_flops_cnn = 0;
    double total_flops_snn = 0.0;
    double total_energy = 0.0;
    double backbone_share = 0.0; // of total_flops_cnn
    std::size_t timesteps = 0;
    double energy_coeff = 0.1;
};

// How spiking activity enters the profile: a fixed S_a for every spiking
// layer, or per-layer measured values keyed by layer name.
struct ActivitySource {
    enum class Kind { Fixed, Measured };
    Kind kind = Kind::Fixed;
    double fixed = 1.0;
    std::map<std::string, double> measured;
    bool allow_out_of_range = false;

    static ActivitySource fixed_value(double s_a, bool allow_oor = false);
    static ActivitySource from_measurements(std::map<std::string, double> values);
};

// Per-layer and whole-network cost for every MAC-bearing layer (backbone,
// extras, and head predictor paths).
NetworkProfile profile_network(const NetworkConfig& cfg, const ActivitySource& activity,
                               double energy_coeff = 0.1);

std::string profile_to_json(const NetworkProfile& p);
std::string profile_to_csv(const NetworkProfile& p);

} // namespace scod

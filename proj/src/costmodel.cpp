#include "scod/costmodel.hpp"

#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace scod {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

} // namespace

std::uint64_t flops_conv(std::size_t output_size, std::size_t in_channels, std::size_t kernel,
                         std::size_t out_channels) {
    require(output_size >= 1 && in_channels >= 1 && kernel >= 1 && out_channels >= 1,
            "flops_conv: all dimensions must be >= 1");
    return static_cast<std::uint64_t>(output_size) * output_size * in_channels * kernel *
           kernel * out_channels;
}

std::uint64_t flops_conv(const ConvSpec& spec, std::size_t output_size) {
    spec.validate();
    return flops_conv(output_size, spec.in_channels, spec.kernel, spec.out_channels);
}

double flops_spiking_conv(std::uint64_t base, double s_a, bool allow_out_of_range) {
    if (!allow_out_of_range)
        require(s_a >= 0.0 && s_a <= 1.0,
                "flops_spiking_conv: S_a " + std::to_string(s_a) + " outside [0,1]");
    return static_cast<double>(base) * s_a;
}

double measure_spiking_activity(const std::vector<const SpikeTrain*>& trains) {
    require(!trains.empty(), "measure_spiking_activity: empty collection");
    std::uint64_t spikes = 0, slots = 0;
    for (const SpikeTrain* t : trains) {
        spikes += t->total_spikes();
        slots += static_cast<std::uint64_t>(t->neurons) * t->timesteps;
    }
    require(slots > 0, "measure_spiking_activity: no neuron-timesteps");
    return static_cast<double>(spikes) / static_cast<double>(slots);
}

double measure_spiking_activity(const std::vector<SpikeTrain>& trains) {
    std::vector<const SpikeTrain*> ptrs;
    ptrs.reserve(trains.size());
    for (const SpikeTrain& t : trains) ptrs.push_back(&t);
    return measure_spiking_activity(ptrs);
}

double energy_snn(const std::vector<double>& layer_flops, std::size_t timesteps, double coeff) {
    require(coeff > 0.0, "energy_snn: coeff must be positive");
    double total = 0.0;
    for (double f : layer_flops) total += f * coeff * static_cast<double>(timesteps);
    return total;
}

ActivitySource ActivitySource::fixed_value(double s_a, bool allow_oor) {
    ActivitySource s;
    s.kind = Kind::Fixed;
    s.fixed = s_a;
    s.allow_out_of_range = allow_oor;
    return s;
}

ActivitySource ActivitySource::from_measurements(std::map<std::string, double> values) {
    ActivitySource s;
    s.kind = Kind::Measured;
    s.measured = std::move(values);
    return s;
}

NetworkProfile profile_network(const NetworkConfig& cfg, const ActivitySource& activity,
                               double energy_coeff) {
    cfg.validate();
    require(energy_coeff > 0.0, "profile_network: energy coeff must be positive");

    NetworkProfile p;
    p.timesteps = cfg.timesteps;
    p.energy_coeff = energy_coeff;

    auto activity_for = [&](const std::string& name) {
        if (activity.kind == ActivitySource::Kind::Fixed) return activity.fixed;
        auto it = activity.measured.find(name);
        require(it != activity.measured.end(),
                "profile_network: no measured activity for spiking layer '" + name + "'");
        return it->second;
    };

    auto add = [&](const std::string& name, bool backbone, bool spiking, std::uint64_t macs) {
        LayerCost c;
        c.name = name;
        c.backbone = backbone;
        c.spiking = spiking;
        c.flops_cnn = macs;
        c.s_a = spiking ? activity_for(name) : 1.0;
        c.flops_snn = flops_spiking_conv(macs, c.s_a, activity.allow_out_of_range);
        c.energy = c.flops_snn * energy_coeff * static_cast<double>(cfg.timesteps);
        p.layers.push_back(c);
    };

    // backbone and extra layers
    std::size_t extent = cfg.input_size;
    std::size_t channels = 3;
    std::vector<std::pair<std::size_t, std::size_t>> source_maps; // (grid, channels)
    for (const LayerSpec& l : cfg.layers) {
        if (l.kind == LayerKind::Conv) {
            const std::size_t out = l.conv.out_extent(extent);
            add(l.name, l.backbone, false, flops_conv(l.conv, out));
            extent = out;
            channels = l.conv.out_channels;
        } else {
            extent = l.pool_ceil ? (extent - l.pool_k + l.pool_s - 1) / l.pool_s + 1
                                 : (extent - l.pool_k) / l.pool_s + 1;
        }
        if (l.source_map) source_maps.emplace_back(extent, channels);
    }

    // head predictor paths
    for (std::size_t i = 0; i < cfg.heads.size(); ++i) {
        const HeadSpec& h = cfg.heads[i];
        const auto [f, ch] = source_maps[i];
        const std::size_t b = h.aspects.size() + 1;
        ConvSpec loc{ch, 4 * b, h.kernel, 1, (h.kernel - 1) / 2};
        ConvSpec conf{ch, static_cast<std::size_t>(cfg.class_count + 1) * b, h.kernel, 1,
                      (h.kernel - 1) / 2};
        add(h.source + "_loc", false, h.loc_path == PathKind::Spiking, flops_conv(loc, f));
        add(h.source + "_conf", false, h.conf_path == PathKind::Spiking, flops_conv(conf, f));
        if (h.aux_loc) add(h.source + "_aux", false, false, flops_conv(loc, f));
    }

    std::uint64_t backbone_macs = 0;
    for (const LayerCost& c : p.layers) {
        p.total_flops_cnn += c.flops_cnn;
        p.total_flops_snn += c.flops_snn;
        p.total_energy += c.energy;
        if (c.backbone) backbone_macs += c.flops_cnn;
    }
    p.backbone_share = p.total_flops_cnn == 0
                           ? 0.0
                           : static_cast<double>(backbone_macs) /
                                 static_cast<double>(p.total_flops_cnn);
    return p;
}

std::string profile_to_json(const NetworkProfile& p) {
    nlohmann::json j;
    j["layers"] = nlohmann::json::array();
    for (const LayerCost& c : p.layers) {
        nlohmann::json lj;
        lj["name"] = c.name;
        lj["backbone"] = c.backbone;
        lj["spiking"] = c.spiking;
        lj["flops_cnn"] = c.flops_cnn;
        lj["flops_snn"] = c.flops_snn;
        lj["s_a"] = c.s_a;
        lj["energy"] = c.energy;
        j["layers"].push_back(lj);
    }
    j["total_flops_cnn"] = p.total_flops_cnn;
    j["total_flops_snn"] = p.total_flops_snn;
    j["total_energy"] = p.total_energy;
    j["backbone_share"] = p.backbone_share;
    j["timesteps"] = p.timesteps;
    j["energy_coeff"] = p.energy_coeff;
    return j.dump(2) + "\n";
}

std::string profile_to_csv(const NetworkProfile& p) {
    std::ostringstream out;
    out << "name,backbone,spiking,flops_cnn,flops_snn,s_a,energy\n";
    for (const LayerCost& c : p.layers)
        out << c.name << "," << (c.backbone ? 1 : 0) << "," << (c.spiking ? 1 : 0) << ","
            << c.flops_cnn << "," << c.flops_snn << "," << c.s_a << "," << c.energy << "\n";
    out << "total,,," << p.total_flops_cnn << "," << p.total_flops_snn << ",," << p.total_energy
        << "\n";
    return out.str();
}

} // namespace scod

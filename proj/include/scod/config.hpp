#pragma once

#include <string>
#include <vector>

#include "scod/conv.hpp"
#include "scod/multibox.hpp"

namespace scod {

enum class LayerKind { Conv, MaxPool };

// Declarative description of one layer; execution and cost profiling both
// derive from it.
struct LayerSpec {
    std::string name;
    LayerKind kind = LayerKind::Conv;
    ConvSpec conv;     // kind == Conv
    bool relu = true;  // kind == Conv: apply relu after the convolution
    std::size_t pool_k = 2, pool_s = 2;
    bool pool_ceil = false;  // kind == MaxPool
    bool backbone = true;    // backbone vs head section for cost shares
    bool source_map = false; // output feeds a detection head
};

enum class PathKind { Spiking, Conventional };

// Per-source-map predictor paths: a loc path (4*b_k filters), a conf path
// ((C+1)*b_k filters), and optionally an auxiliary conventional loc conv
// averaged with the loc path output.
struct HeadSpec {
    std::string source;          // name of the source-map layer
    std::vector<double> aspects; // boxes per cell = aspects + 1
    PathKind loc_path = PathKind::Spiking;
    PathKind conf_path = PathKind::Conventional;
    bool aux_loc = false;
    std::size_t kernel = 3;
    std::size_t loc_filters = 0;  // 4*b_k; validated when nonzero
    std::size_t conf_filters = 0; // (C+1)*b_k; validated when nonzero
};

enum class SpikingTrainMode { Eq6, Surrogate };

struct NetworkConfig {
    std::size_t input_size = 300;
    int class_count = 20;
    std::size_t timesteps = 32;
    double v_th = 1.0;
    double tau = 5.0; // trace decay for the spike-train update
    double s_min = 0.2, s_max = 0.9;
    Variances variances;
    double offset_range = 3.0; // loc offsets map to rates via (off+R)/(2R)
    SpikingTrainMode spiking_train = SpikingTrainMode::Eq6;
    std::vector<LayerSpec> layers;
    std::vector<HeadSpec> heads;

    // Spatial size of every layer output; index aligned with layers.
    std::vector<std::size_t> map_sizes() const;
    // Channels of every layer output.
    std::vector<std::size_t> map_channels() const;
    // Grid sizes of the source maps, in network order.
    std::vector<std::size_t> source_map_sizes() const;
    std::vector<MapLayout> box_layout() const;
    std::size_t anchor_count() const;

    // Full consistency check; throws naming the offending layer.
    void validate() const;
};

NetworkConfig reference_config();
NetworkConfig toy_config();

NetworkConfig config_from_json(const std::string& text);
std::string config_to_json(const NetworkConfig& cfg);
NetworkConfig load_config(const std::string& path);

} // namespace scod

#pragma once

#include <map>
#include <string>
#include <vector>

#include "scod/config.hpp"
#include "scod/data.hpp"
#include "scod/multibox.hpp"
#include "scod/spiking.hpp"

namespace scod {

// Two-section detector: conventional backbone, per-source-map head paths
// (spiking loc, conventional conf, optional auxiliary loc).
struct Model {
    NetworkConfig cfg;
    DefaultBoxBank bank;
    std::map<std::string, Tensor> params;

    std::size_t param_count() const;
};

// Seeded-random weights; the same seed builds bit-identical models.
Model build_network(const NetworkConfig& cfg, std::uint64_t seed);
// Weights from a SCODW1 container; missing or mis-shaped tensors are
// rejected naming the parameter.
Model build_network(const NetworkConfig& cfg, const std::map<std::string, Tensor>& weights);

struct ForwardResult {
    Tensor loc;  // [anchors x 4]
    Tensor conf; // [anchors x (C+1)]
    // measured spiking activity per spiking head path, in head order
    std::vector<std::pair<std::string, double>> head_activity;
    // emitted spike trains of the same paths (for CSV export/debugging)
    std::vector<std::pair<std::string, SpikeTrain>> head_trains;
};

ForwardResult forward(const Model& m, const Tensor& image);

// Spike events as CSV rows: layer,neuron_id,timestep.
std::string spike_events_to_csv(
    const std::vector<std::pair<std::string, SpikeTrain>>& trains);

std::vector<Detection> detect(const Model& m, const Tensor& image, double conf_threshold,
                              double nms_threshold, std::size_t top_k);

struct TrainSample {
    Tensor image;
    std::vector<std::pair<Box, int>> gts; // normalized boxes, 1-based class ids
};

// One pass over the dataset (seeded shuffle, per-sample updates).
// Conventional paths update by SGD on the multibox-loss gradients; spiking
// paths by the spike-train rule (or its dense surrogate, per config).
double train_epoch(Model& m, const std::vector<TrainSample>& data, double lr,
                   std::uint64_t seed);

// Detections as CSV rows: image_id, class_name, score, xmin, ymin, xmax,
// ymax in pixel units, corners clamped to the image.
std::string detections_to_csv(const std::vector<Detection>& dets, const std::string& image_id,
                              std::size_t width, std::size_t height,
                              const std::vector<std::string>& class_names);

// class names for a class count: 20 -> VOC, 12 -> Ex-Dark, 3 -> synthetic,
// otherwise class_1..class_C
std::vector<std::string> class_names_for(int class_count);

} // namespace scod

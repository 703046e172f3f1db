#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "scod/evaluate.hpp"
#include "scod/multibox.hpp"
#include "scod/rng.hpp"
#include "scod/spiking.hpp"
#include "scod/tensor.hpp"

namespace testutil {

// relative error with a unit floor, so near-zero gradients compare absolutely
inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

// central finite difference of a scalar functional at one tensor element,
// h = 1e-5 * max(1, |w|)
inline double fd_grad(scod::Tensor& t, std::size_t idx,
                      const std::function<double()>& loss) {
    const double w = t.data[idx];
    const double h = 1e-5 * std::max(1.0, std::abs(w));
    t.data[idx] = w + h;
    const double up = loss();
    t.data[idx] = w - h;
    const double down = loss();
    t.data[idx] = w;
    return (up - down) / (2.0 * h);
}

// max relative error between an analytic gradient tensor and finite
// differences of the supplied loss
inline double check_grad(scod::Tensor& param, const scod::Tensor& analytic,
                         const std::function<double()>& loss) {
    double worst = 0.0;
    for (std::size_t i = 0; i < param.data.size(); ++i)
        worst = std::max(worst, rel_err(analytic.data[i], fd_grad(param, i, loss)));
    return worst;
}

// Supervised single-neuron task: 8 periodic inputs, a periodic target
// train whose rate matches one of the inputs, iterated spike-train
// updates. Returns initial and final Hamming disagreement.
struct NeuronTaskResult {
    std::size_t initial = 0;
    std::size_t final = 0;
};

NeuronTaskResult run_single_neuron_task(std::uint64_t seed, std::size_t iterations = 100);

// Brute-force greedy NMS: repeatedly scan for the best remaining
// detection, suppress same-class overlaps. Written independently of the
// library routine.
std::vector<scod::Detection> nms_reference(const std::vector<scod::Detection>& dets,
                                           double thr, std::size_t top_k);

// Straight-from-definition AP: re-count TP/FP at every cutoff rank and
// integrate the envelope. Independent of the library's incremental pass.
double ap_reference(std::vector<scod::ScoredBox> dets, const std::vector<scod::GtBox>& gts,
                    double thr, scod::ApProtocol protocol);

} // namespace testutil

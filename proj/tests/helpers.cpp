#include "helpers.hpp"

namespace testutil {

using namespace scod;

namespace {

// student simulation: one LIF neuron over the 8 input trains
SpikeTrain run_student(const Tensor& weights, const SpikeTrain& inputs, double v_th) {
    const std::size_t T = inputs.timesteps;
    const std::size_t I = inputs.neurons;
    SpikeTrain out(1, T);
    LifState st = LifState::make(1, v_th);
    for (std::size_t t = 0; t < T; ++t) {
        double current = 0.0;
        for (std::size_t i = 0; i < I; ++i)
            current += weights.data[i] * static_cast<double>(inputs.get(i, t));
        const auto spikes = lif_step(st, {current});
        out.set(0, t, spikes[0]);
    }
    return out;
}

std::size_t disagreement(const SpikeTrain& a, const SpikeTrain& b) {
    std::size_t d = 0;
    for (std::size_t t = 0; t < a.timesteps; ++t)
        if (a.get(0, t) != b.get(0, t)) ++d;
    return d;
}

} // namespace

NeuronTaskResult run_single_neuron_task(std::uint64_t seed, std::size_t iterations) {
    const std::size_t inputs = 8;
    const std::size_t T = 64;
    const double v_th = 1.0;
    const double tau = 1.0;

    Rng rng(seed);
    // the target rate coincides with one input's rate, so the task is
    // realizable by a single strong synapse; the other inputs distract
    Tensor rates({inputs});
    const std::size_t teacher = rng.below(inputs);
    for (std::size_t i = 0; i < inputs; ++i)
        rates.data[i] = i == teacher ? rng.uniform(0.2, 0.7) : rng.uniform(0.05, 0.5);
    Tensor target_rate({1});
    target_rate.data[0] = rates.data[teacher];

    const SpikeTrain in_trains = encode_rate(rates, T, RateCoding::Periodic);
    const SpikeTrain target = encode_rate(target_rate, T, RateCoding::Periodic);
    const Tensor traces = spike_traces(in_trains, tau);

    Tensor w({inputs}); // silence at the start: the first updates are
                        // purely target-correlated

    NeuronTaskResult res;
    SpikeTrain out = run_student(w, in_trains, v_th);
    res.initial = disagreement(target, out);
    for (std::size_t it = 0; it < iterations; ++it) {
        const double lr = 0.02 / (1.0 + 0.05 * static_cast<double>(it));
        w = spike_train_update(w, target, out, traces, lr);
        out = run_student(w, in_trains, v_th);
    }
    res.final = disagreement(target, out);
    return res;
}

std::vector<Detection> nms_reference(const std::vector<Detection>& dets, double thr,
                                     std::size_t top_k) {
    std::vector<char> alive(dets.size(), 1);
    std::vector<Detection> kept;
    while (true) {
        std::size_t best = dets.size();
        for (std::size_t i = 0; i < dets.size(); ++i) {
            if (!alive[i]) continue;
            if (best == dets.size() || dets[i].score > dets[best].score) best = i;
        }
        if (best == dets.size()) break;
        alive[best] = 0;
        kept.push_back(dets[best]);
        for (std::size_t i = 0; i < dets.size(); ++i) {
            if (!alive[i] || dets[i].class_id != dets[best].class_id) continue;
            if (iou(dets[i].box, dets[best].box) > thr) alive[i] = 0;
        }
    }
    if (kept.size() > top_k) kept.resize(top_k);
    return kept;
}

double ap_reference(std::vector<ScoredBox> dets, const std::vector<GtBox>& gts, double thr,
                    ApProtocol protocol) {
    std::stable_sort(dets.begin(), dets.end(),
                     [](const ScoredBox& a, const ScoredBox& b) { return a.score > b.score; });
    std::size_t total_gt = 0;
    for (const GtBox& g : gts)
        if (!g.difficult) ++total_gt;
    if (total_gt == 0) return 0.0;

    // PR table rebuilt from scratch at every prefix length
    std::vector<double> precision, recall;
    for (std::size_t cut = 1; cut <= dets.size(); ++cut) {
        std::vector<char> used(gts.size(), 0);
        std::size_t tp = 0, fp = 0;
        for (std::size_t i = 0; i < cut; ++i) {
            double best = -1.0;
            std::size_t bg = 0;
            for (std::size_t g = 0; g < gts.size(); ++g) {
                if (gts[g].image_id != dets[i].image_id) continue;
                const double o = iou(dets[i].box, gts[g].box);
                if (o > best) {
                    best = o;
                    bg = g;
                }
            }
            if (best >= thr && gts[bg].difficult) continue;
            if (best >= thr && !used[bg]) {
                used[bg] = 1;
                ++tp;
            } else {
                ++fp;
            }
        }
        if (tp + fp == 0) continue;
        precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
        recall.push_back(static_cast<double>(tp) / static_cast<double>(total_gt));
    }
    if (precision.empty()) return 0.0;
    std::vector<double> env = precision;
    for (std::size_t i = env.size() - 1; i-- > 0;) env[i] = std::max(env[i], env[i + 1]);
    if (protocol == ApProtocol::AllPoint) {
        double ap = 0.0, prev = 0.0;
        for (std::size_t i = 0; i < env.size(); ++i)
            if (recall[i] > prev) {
                ap += (recall[i] - prev) * env[i];
                prev = recall[i];
            }
        return ap;
    }
    double ap = 0.0;
    for (int kk = 0; kk <= 10; ++kk) {
        const double r = kk / 10.0;
        double p = 0.0;
        for (std::size_t i = 0; i < env.size(); ++i)
            if (recall[i] >= r) {
                p = env[i];
                break;
            }
        ap += p;
    }
    return ap / 11.0;
}

} // namespace testutil

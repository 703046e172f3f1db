#include "scod/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "scod/rng.hpp"

namespace scod {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

ConvSpec head_spec(std::size_t in_ch, std::size_t filters, std::size_t kernel) {
    return ConvSpec{in_ch, filters, kernel, 1, (kernel - 1) / 2};
}

// map analog features to [0,1] by min-max over the whole map; constant
// maps become zeros
Tensor minmax01(const Tensor& t) {
    double lo = t.data[0], hi = t.data[0];
    for (double v : t.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    Tensor out = t;
    if (hi - lo < 1e-12) {
        for (double& v : out.data) v = 0.0;
        return out;
    }
    const double inv = 1.0 / (hi - lo);
    for (double& v : out.data) v = (v - lo) * inv;
    return out;
}

double rate_to_value(double rate, double range) { return (2.0 * rate - 1.0) * range; }
double value_to_rate(double value, double range) {
    return std::clamp((value + range) / (2.0 * range), 0.0, 1.0);
}

struct HeadGeometry {
    std::size_t grid = 0;
    std::size_t channels = 0; // source map channels
    std::size_t boxes = 0;    // per cell
};

std::vector<HeadGeometry> head_geometry(const NetworkConfig& cfg) {
    std::vector<HeadGeometry> out;
    const auto sizes = cfg.map_sizes();
    const auto chans = cfg.map_channels();
    std::size_t hi = 0;
    for (std::size_t i = 0; i < cfg.layers.size(); ++i) {
        if (!cfg.layers[i].source_map) continue;
        HeadGeometry g;
        g.grid = sizes[i];
        g.channels = chans[i];
        g.boxes = cfg.heads[hi].aspects.size() + 1;
        out.push_back(g);
        ++hi;
    }
    return out;
}

} // namespace

std::size_t Model::param_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : params) n += t.numel();
    return n;
}

std::vector<std::string> class_names_for(int class_count) {
    if (class_count == 20) return voc_classes();
    if (class_count == 12) return exdark_classes();
    if (class_count == 3) return synthetic_classes();
    std::vector<std::string> names;
    for (int c = 1; c <= class_count; ++c) names.push_back("class_" + std::to_string(c));
    return names;
}

namespace {

// Glorot weights + zero bias for a conv; spiking paths carry no bias.
void init_conv(std::map<std::string, Tensor>& params, const std::string& name,
               const ConvSpec& spec, bool bias, Rng& rng) {
    const std::size_t fan_in = spec.in_channels * spec.kernel * spec.kernel;
    const std::size_t fan_out = spec.out_channels * spec.kernel * spec.kernel;
    params[name + ".w"] = glorot_tensor({spec.out_channels, spec.in_channels, spec.kernel,
                                         spec.kernel},
                                        fan_in, fan_out, rng);
    if (bias) params[name + ".b"] = Tensor({spec.out_channels});
}

// Every parameter the config implies, with its shape.
std::vector<std::pair<std::string, std::vector<std::size_t>>>
expected_params(const NetworkConfig& cfg) {
    std::vector<std::pair<std::string, std::vector<std::size_t>>> out;
    for (const LayerSpec& l : cfg.layers) {
        if (l.kind != LayerKind::Conv) continue;
        out.emplace_back(l.name + ".w",
                         std::vector<std::size_t>{l.conv.out_channels, l.conv.in_channels,
                                                  l.conv.kernel, l.conv.kernel});
        out.emplace_back(l.name + ".b", std::vector<std::size_t>{l.conv.out_channels});
    }
    const auto geo = head_geometry(cfg);
    for (std::size_t i = 0; i < cfg.heads.size(); ++i) {
        const HeadSpec& h = cfg.heads[i];
        const std::size_t b = geo[i].boxes;
        const ConvSpec loc = head_spec(geo[i].channels, 4 * b, h.kernel);
        const ConvSpec conf = head_spec(
            geo[i].channels, static_cast<std::size_t>(cfg.class_count + 1) * b, h.kernel);
        out.emplace_back(h.source + "_loc.w",
                         std::vector<std::size_t>{loc.out_channels, loc.in_channels, loc.kernel,
                                                  loc.kernel});
        if (h.loc_path == PathKind::Conventional)
            out.emplace_back(h.source + "_loc.b", std::vector<std::size_t>{loc.out_channels});
        out.emplace_back(h.source + "_conf.w",
                         std::vector<std::size_t>{conf.out_channels, conf.in_channels,
                                                  conf.kernel, conf.kernel});
        if (h.conf_path == PathKind::Conventional)
            out.emplace_back(h.source + "_conf.b", std::vector<std::size_t>{conf.out_channels});
        if (h.aux_loc) {
            out.emplace_back(h.source + "_aux.w",
                             std::vector<std::size_t>{loc.out_channels, loc.in_channels,
                                                      loc.kernel, loc.kernel});
            out.emplace_back(h.source + "_aux.b", std::vector<std::size_t>{loc.out_channels});
        }
    }
    return out;
}

} // namespace

Model build_network(const NetworkConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Model m;
    m.cfg = cfg;
    m.bank = generate_default_boxes(cfg.box_layout(), cfg.s_min, cfg.s_max);

    std::size_t stream = 0;
    for (const auto& [name, shape] : expected_params(cfg)) {
        Rng rng(mix_seed(seed, stream++));
        if (name.size() >= 2 && name.compare(name.size() - 2, 2, ".b") == 0) {
            m.params[name] = Tensor(shape); // zero bias
        } else {
            const std::size_t fan_in = shape[1] * shape[2] * shape[3];
            const std::size_t fan_out = shape[0] * shape[2] * shape[3];
            m.params[name] = glorot_tensor(shape, fan_in, fan_out, rng);
        }
    }
    return m;
}

Model build_network(const NetworkConfig& cfg, const std::map<std::string, Tensor>& weights) {
    cfg.validate();
    Model m;
    m.cfg = cfg;
    m.bank = generate_default_boxes(cfg.box_layout(), cfg.s_min, cfg.s_max);
    for (const auto& [name, shape] : expected_params(cfg)) {
        auto it = weights.find(name);
        if (it == weights.end())
            throw std::invalid_argument("build_network: weight file lacks tensor '" + name +
                                        "'");
        if (it->second.shape != shape)
            throw std::invalid_argument("build_network: tensor '" + name + "' has shape " +
                                        it->second.shape_string() + ", config needs " +
                                        Tensor::shape_str(shape));
        m.params[name] = it->second;
    }
    return m;
}

namespace {

struct LayerCache {
    Tensor input;       // layer input
    Tensor pre_relu;    // conv output before relu (conv layers)
    MaxPoolResult pool; // pool layers
    Tensor output;
};

struct HeadCache {
    Tensor source;            // source map (post relu)
    Tensor norm;              // min-max normalized source (spiking paths)
    SpikeTrain input_train;   // rate-encoded source
    SpikingConvResult loc_spiking;
    Tensor loc_rates;         // decoded rates [4b, f, f]
    Tensor loc_map;           // offsets from the loc path [4b, f, f]
    Tensor aux_map;           // aux path offsets
    Tensor conf_map;          // [(C+1)b, f, f]
    SpikingConvResult conf_spiking;
    Tensor conf_rates;
};

struct ForwardCache {
    std::vector<LayerCache> layers;
    std::vector<HeadCache> heads;
    ForwardResult result;
};

const Tensor& param(const Model& m, const std::string& name) {
    auto it = m.params.find(name);
    if (it == m.params.end())
        throw std::logic_error("model: missing parameter '" + name + "'");
    return it->second;
}

// Run one spiking head path and decode output rates.
void run_spiking_path(const Model& m, HeadCache& hc, const std::string& name,
                      const ConvSpec& spec, SpikingConvResult& res_out, Tensor& rates_out) {
    const Tensor& w = param(m, name + ".w");
    res_out = spiking_conv_forward(hc.input_train, hc.norm.shape, w, spec, m.cfg.v_th);
    const std::size_t f = spec.out_extent(hc.norm.shape[1]);
    rates_out = Tensor({spec.out_channels, f, f});
    for (std::size_t j = 0; j < rates_out.numel(); ++j)
        rates_out.data[j] = res_out.output.decode_rate(j);
}

ForwardCache forward_cached(const Model& m, const Tensor& image, bool keep_intermediates) {
    const NetworkConfig& cfg = m.cfg;
    require(image.rank() == 3 && image.shape[0] == 3 && image.shape[1] == cfg.input_size &&
                image.shape[2] == cfg.input_size,
            "forward: image shape " + image.shape_string() + " != expected [3x" +
                std::to_string(cfg.input_size) + "x" + std::to_string(cfg.input_size) + "]");
    require(image.all_finite(), "forward: non-finite image values");

    ForwardCache fc;
    const auto geo = head_geometry(cfg);

    // backbone
    Tensor x = image;
    std::vector<Tensor> sources;
    for (const LayerSpec& l : cfg.layers) {
        LayerCache lc;
        if (keep_intermediates) lc.input = x;
        if (l.kind == LayerKind::Conv) {
            Tensor y = conv2d_forward(x, param(m, l.name + ".w"), param(m, l.name + ".b"),
                                      l.conv);
            if (l.relu) {
                if (keep_intermediates) lc.pre_relu = y;
                y = relu_forward(y);
            }
            x = std::move(y);
        } else {
            MaxPoolResult pr = maxpool_forward(x, l.pool_k, l.pool_s, l.pool_ceil);
            x = pr.output;
            if (keep_intermediates) lc.pool = std::move(pr);
        }
        if (l.source_map) sources.push_back(x);
        if (keep_intermediates) {
            lc.output = x;
            fc.layers.push_back(std::move(lc));
        }
    }

    // head paths
    const std::size_t A = m.bank.boxes.size();
    const std::size_t K = static_cast<std::size_t>(cfg.class_count + 1);
    fc.result.loc = Tensor({A, 4});
    fc.result.conf = Tensor({A, K});

    for (std::size_t i = 0; i < cfg.heads.size(); ++i) {
        const HeadSpec& h = cfg.heads[i];
        HeadCache hc;
        hc.source = sources[i];
        const std::size_t b = geo[i].boxes;
        const ConvSpec loc_spec = head_spec(geo[i].channels, 4 * b, h.kernel);
        const ConvSpec conf_spec = head_spec(geo[i].channels, K * b, h.kernel);

        const bool needs_spikes =
            h.loc_path == PathKind::Spiking || h.conf_path == PathKind::Spiking;
        if (needs_spikes) {
            hc.norm = minmax01(hc.source);
            hc.input_train = encode_rate(hc.norm, cfg.timesteps, RateCoding::Periodic);
        }

        if (h.loc_path == PathKind::Spiking) {
            run_spiking_path(m, hc, h.source + "_loc", loc_spec, hc.loc_spiking, hc.loc_rates);
            hc.loc_map = hc.loc_rates;
            for (double& v : hc.loc_map.data) v = rate_to_value(v, cfg.offset_range);
            fc.result.head_activity.emplace_back(h.source + "_loc", hc.loc_spiking.activity);
            fc.result.head_trains.emplace_back(h.source + "_loc", hc.loc_spiking.output);
        } else {
            hc.loc_map = conv2d_forward(hc.source, param(m, h.source + "_loc.w"),
                                        param(m, h.source + "_loc.b"), loc_spec);
        }
        if (h.aux_loc) {
            hc.aux_map = conv2d_forward(hc.source, param(m, h.source + "_aux.w"),
                                        param(m, h.source + "_aux.b"), loc_spec);
            for (std::size_t j = 0; j < hc.loc_map.numel(); ++j)
                hc.loc_map.data[j] = 0.5 * (hc.loc_map.data[j] + hc.aux_map.data[j]);
        }

        if (h.conf_path == PathKind::Spiking) {
            run_spiking_path(m, hc, h.source + "_conf", conf_spec, hc.conf_spiking,
                             hc.conf_rates);
            hc.conf_map = hc.conf_rates;
            for (double& v : hc.conf_map.data) v = rate_to_value(v, cfg.offset_range);
            fc.result.head_activity.emplace_back(h.source + "_conf", hc.conf_spiking.activity);
            fc.result.head_trains.emplace_back(h.source + "_conf", hc.conf_spiking.output);
        } else {
            hc.conf_map = conv2d_forward(hc.source, param(m, h.source + "_conf.w"),
                                         param(m, h.source + "_conf.b"), conf_spec);
        }

        // flatten to bank order: anchor = offset + (y*f + x)*b + box
        const std::size_t f = geo[i].grid;
        const std::size_t base = m.bank.map_offsets[i];
        for (std::size_t y = 0; y < f; ++y)
            for (std::size_t xcell = 0; xcell < f; ++xcell)
                for (std::size_t j = 0; j < b; ++j) {
                    const std::size_t a = base + (y * f + xcell) * b + j;
                    for (std::size_t c = 0; c < 4; ++c)
                        fc.result.loc(a, c) = hc.loc_map(j * 4 + c, y, xcell);
                    for (std::size_t c = 0; c < K; ++c)
                        fc.result.conf(a, c) = hc.conf_map(j * K + c, y, xcell);
                }
        fc.heads.push_back(std::move(hc));
    }
    return fc;
}

} // namespace

ForwardResult forward(const Model& m, const Tensor& image) {
    return forward_cached(m, image, /*keep_intermediates=*/false).result;
}

std::vector<Detection> detect(const Model& m, const Tensor& image, double conf_threshold,
                              double nms_threshold, std::size_t top_k) {
    require(conf_threshold > 0.0 && conf_threshold < 1.0 && nms_threshold > 0.0 &&
                nms_threshold < 1.0,
            "detect: thresholds must lie in (0,1)");
    const ForwardResult fr = forward(m, image);
    const Tensor prob = softmax_rows(fr.conf);
    const std::vector<Box> boxes = decode_boxes(m.bank, fr.loc, m.cfg.variances);

    std::vector<Detection> candidates;
    const std::size_t K = prob.shape[1];
    for (std::size_t a = 0; a < boxes.size(); ++a) {
        for (std::size_t c = 1; c < K; ++c) {
            const double s = prob(a, c);
            if (s >= conf_threshold)
                candidates.push_back(Detection{boxes[a], static_cast<int>(c), s});
        }
    }
    return nms(candidates, nms_threshold, top_k);
}

namespace {

// Hard clip for surrogate gradients: pass inside (0,1), zero at saturation.
double clamp01_grad(double preclamp) { return preclamp > 0.0 && preclamp < 1.0 ? 1.0 : 0.0; }

// Per-sample parameter updates; returns the multibox loss of the sample.
double train_sample(Model& m, const TrainSample& sample, double lr) {
    const NetworkConfig& cfg = m.cfg;
    ForwardCache fc = forward_cached(m, sample.image, /*keep_intermediates=*/true);

    const MatchResult match =
        match_and_encode(m.bank, sample.gts, 0.5, cfg.variances, cfg.class_count);
    MultiboxLoss loss = multibox_loss(fc.result.conf, fc.result.loc, match, 3.0);
    if (!std::isfinite(loss.loss))
        throw std::runtime_error("train: non-finite loss (" + std::to_string(loss.loss) + ")");

    const auto geo = head_geometry(cfg);
    const std::size_t K = static_cast<std::size_t>(cfg.class_count + 1);

    // gradient arriving at each source map, accumulated across head paths
    std::vector<Tensor> source_grads;
    for (std::size_t i = 0; i < cfg.heads.size(); ++i)
        source_grads.push_back(Tensor(fc.heads[i].source.shape));

    for (std::size_t i = 0; i < cfg.heads.size(); ++i) {
        const HeadSpec& h = cfg.heads[i];
        HeadCache& hc = fc.heads[i];
        const std::size_t b = geo[i].boxes;
        const std::size_t f = geo[i].grid;
        const std::size_t base = m.bank.map_offsets[i];
        const ConvSpec loc_spec = head_spec(geo[i].channels, 4 * b, h.kernel);
        const ConvSpec conf_spec = head_spec(geo[i].channels, K * b, h.kernel);

        // unflatten the loss gradients into per-map layouts
        Tensor g_loc({4 * b, f, f});
        Tensor g_conf({K * b, f, f});
        for (std::size_t y = 0; y < f; ++y)
            for (std::size_t xcell = 0; xcell < f; ++xcell)
                for (std::size_t j = 0; j < b; ++j) {
                    const std::size_t a = base + (y * f + xcell) * b + j;
                    for (std::size_t c = 0; c < 4; ++c)
                        g_loc(j * 4 + c, y, xcell) = loss.grad_loc(a, c);
                    for (std::size_t c = 0; c < K; ++c)
                        g_conf(j * K + c, y, xcell) = loss.grad_conf(a, c);
                }

        // conf path
        if (h.conf_path == PathKind::Conventional) {
            ConvGrads cg = conv2d_backward(hc.source, param(m, h.source + "_conf.w"), g_conf,
                                           conf_spec);
            for (std::size_t j = 0; j < source_grads[i].numel(); ++j)
                source_grads[i].data[j] += cg.grad_input.data[j];
            m.params[h.source + "_conf.w"] =
                sgd_step(param(m, h.source + "_conf.w"), cg.grad_weights, lr);
            m.params[h.source + "_conf.b"] =
                sgd_step(param(m, h.source + "_conf.b"), cg.grad_bias, lr);
        }
        // spiking conf handled below with the loc machinery

        // loc path gradients; averaging halves each branch's share
        const double branch_scale = h.aux_loc ? 0.5 : 1.0;
        if (h.aux_loc) {
            Tensor g_aux = g_loc;
            for (double& v : g_aux.data) v *= branch_scale;
            ConvGrads ag =
                conv2d_backward(hc.source, param(m, h.source + "_aux.w"), g_aux, loc_spec);
            for (std::size_t j = 0; j < source_grads[i].numel(); ++j)
                source_grads[i].data[j] += ag.grad_input.data[j];
            m.params[h.source + "_aux.w"] =
                sgd_step(param(m, h.source + "_aux.w"), ag.grad_weights, lr);
            m.params[h.source + "_aux.b"] =
                sgd_step(param(m, h.source + "_aux.b"), ag.grad_bias, lr);
        }

        if (h.loc_path == PathKind::Conventional) {
            Tensor g_main = g_loc;
            for (double& v : g_main.data) v *= branch_scale;
            ConvGrads lg =
                conv2d_backward(hc.source, param(m, h.source + "_loc.w"), g_main, loc_spec);
            for (std::size_t j = 0; j < source_grads[i].numel(); ++j)
                source_grads[i].data[j] += lg.grad_input.data[j];
            m.params[h.source + "_loc.w"] =
                sgd_step(param(m, h.source + "_loc.w"), lg.grad_weights, lr);
            m.params[h.source + "_loc.b"] =
                sgd_step(param(m, h.source + "_loc.b"), lg.grad_bias, lr);
        } else if (cfg.spiking_train == SpikingTrainMode::Surrogate) {
            // SGD through the dense rate approximation clamp(conv/v_th);
            // gradients stop at the rate-encoding boundary
            const Tensor dense =
                conv2d_forward(hc.norm, param(m, h.source + "_loc.w"),
                               Tensor({loc_spec.out_channels}), loc_spec);
            Tensor g_pre(dense.shape);
            for (std::size_t j = 0; j < dense.numel(); ++j) {
                const double pre = dense.data[j] / cfg.v_th;
                const double g_rate =
                    g_loc.data[j] * branch_scale * 2.0 * cfg.offset_range;
                g_pre.data[j] = g_rate * clamp01_grad(pre) / cfg.v_th;
            }
            ConvGrads lg = conv2d_backward(hc.norm, param(m, h.source + "_loc.w"), g_pre,
                                           loc_spec);
            m.params[h.source + "_loc.w"] =
                sgd_step(param(m, h.source + "_loc.w"), lg.grad_weights, lr);
        } else {
            // spike-train rule: target trains equal the emitted trains at
            // unsupervised sites (zero error) and the rate-encoded target
            // offsets at matched anchors
            SpikeTrain target = hc.loc_spiking.output;
            bool any = false;
            for (std::size_t y = 0; y < f; ++y)
                for (std::size_t xcell = 0; xcell < f; ++xcell)
                    for (std::size_t j = 0; j < b; ++j) {
                        const std::size_t a = base + (y * f + xcell) * b + j;
                        if (match.anchor_gt[a] < 0) continue;
                        any = true;
                        for (std::size_t c = 0; c < 4; ++c) {
                            const double rate = value_to_rate(match.offsets(a, c),
                                                              cfg.offset_range);
                            Tensor one({1});
                            one.data[0] = rate;
                            const SpikeTrain enc =
                                encode_rate(one, cfg.timesteps, RateCoding::Periodic);
                            const std::size_t site =
                                ((j * 4 + c) * f + y) * f + xcell;
                            for (std::size_t t = 0; t < cfg.timesteps; ++t)
                                target.set(site, t, enc.get(0, t));
                        }
                    }
            if (any) {
                const Tensor traces = spike_traces(hc.input_train, cfg.tau);
                m.params[h.source + "_loc.w"] = spiking_conv_update(
                    param(m, h.source + "_loc.w"), target, hc.loc_spiking.output, traces,
                    hc.norm.shape, loc_spec, lr);
            }
        }

        if (h.conf_path == PathKind::Spiking) {
            // mirror of the surrogate loc rule, applied to conf logits
            const Tensor dense =
                conv2d_forward(hc.norm, param(m, h.source + "_conf.w"),
                               Tensor({conf_spec.out_channels}), conf_spec);
            Tensor g_pre(dense.shape);
            for (std::size_t j = 0; j < dense.numel(); ++j) {
                const double pre = dense.data[j] / cfg.v_th;
                const double g_rate = g_conf.data[j] * 2.0 * cfg.offset_range;
                g_pre.data[j] = g_rate * clamp01_grad(pre) / cfg.v_th;
            }
            ConvGrads cg = conv2d_backward(hc.norm, param(m, h.source + "_conf.w"), g_pre,
                                           conf_spec);
            m.params[h.source + "_conf.w"] =
                sgd_step(param(m, h.source + "_conf.w"), cg.grad_weights, lr);
        }
    }

    // backbone backward: walk layers in reverse, injecting source-map
    // gradients where the heads read
    Tensor g = Tensor(fc.layers.back().output.shape); // zero unless a head read the last layer
    std::size_t source_idx = cfg.heads.size();
    for (std::size_t li = cfg.layers.size(); li-- > 0;) {
        const LayerSpec& l = cfg.layers[li];
        LayerCache& lc = fc.layers[li];
        if (l.source_map) {
            --source_idx;
            if (g.numel() != source_grads[source_idx].numel())
                g = Tensor(source_grads[source_idx].shape);
            for (std::size_t j = 0; j < g.numel(); ++j)
                g.data[j] += source_grads[source_idx].data[j];
        }
        if (l.kind == LayerKind::Conv) {
            Tensor gy = l.relu ? relu_backward(lc.pre_relu, g) : g;
            ConvGrads cg = conv2d_backward(lc.input, param(m, l.name + ".w"), gy, l.conv);
            m.params[l.name + ".w"] = sgd_step(param(m, l.name + ".w"), cg.grad_weights, lr);
            m.params[l.name + ".b"] = sgd_step(param(m, l.name + ".b"), cg.grad_bias, lr);
            g = std::move(cg.grad_input);
        } else {
            g = maxpool_backward(lc.pool, lc.input.shape, g);
        }
    }

    return loss.loss;
}

} // namespace

double train_epoch(Model& m, const std::vector<TrainSample>& data, double lr,
                   std::uint64_t seed) {
    require(!data.empty(), "train_epoch: empty dataset");
    require(lr >= 0.0, "train_epoch: negative learning rate");

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(mix_seed(seed, 0x7261696e));
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.below(i)]);

    double total = 0.0;
    for (std::size_t idx : order) total += train_sample(m, data[idx], lr);
    return total / static_cast<double>(data.size());
}

std::string spike_events_to_csv(
    const std::vector<std::pair<std::string, SpikeTrain>>& trains) {
    std::ostringstream out;
    out << "layer,neuron_id,timestep\n";
    for (const auto& [name, train] : trains)
        for (std::size_t n = 0; n < train.neurons; ++n)
            for (std::size_t t = 0; t < train.timesteps; ++t)
                if (train.get(n, t)) out << name << "," << n << "," << t << "\n";
    return out.str();
}

std::string detections_to_csv(const std::vector<Detection>& dets, const std::string& image_id,
                              std::size_t width, std::size_t height,
                              const std::vector<std::string>& class_names) {
    std::ostringstream out;
    out << "image_id,class_name,score,xmin,ymin,xmax,ymax\n";
    for (const Detection& d : dets) {
        const std::string cls =
            d.class_id >= 1 && d.class_id <= static_cast<int>(class_names.size())
                ? class_names[static_cast<std::size_t>(d.class_id - 1)]
                : "class_" + std::to_string(d.class_id);
        const double x0 = std::clamp(d.box.xmin(), 0.0, 1.0) * static_cast<double>(width);
        const double y0 = std::clamp(d.box.ymin(), 0.0, 1.0) * static_cast<double>(height);
        const double x1 = std::clamp(d.box.xmax(), 0.0, 1.0) * static_cast<double>(width);
        const double y1 = std::clamp(d.box.ymax(), 0.0, 1.0) * static_cast<double>(height);
        out << image_id << "," << cls << "," << d.score << "," << x0 << "," << y0 << "," << x1
            << "," << y1 << "\n";
    }
    return out.str();
}

} // namespace scod

#include "scod/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace scod {

namespace {

using nlohmann::json;

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

LayerSpec conv_layer(std::string name, std::size_t n, std::size_t m, std::size_t k,
                     std::size_t stride, std::size_t pad, bool backbone, bool source = false) {
    LayerSpec l;
    l.name = std::move(name);
    l.kind = LayerKind::Conv;
    l.conv = ConvSpec{n, m, k, stride, pad};
    l.relu = true;
    l.backbone = backbone;
    l.source_map = source;
    return l;
}

LayerSpec pool_layer(std::string name, bool ceil = false) {
    LayerSpec l;
    l.name = std::move(name);
    l.kind = LayerKind::MaxPool;
    l.pool_k = 2;
    l.pool_s = 2;
    l.pool_ceil = ceil;
    l.backbone = true;
    return l;
}

} // namespace

std::vector<std::size_t> NetworkConfig::map_sizes() const {
    std::vector<std::size_t> sizes;
    std::size_t cur = input_size;
    for (const LayerSpec& l : layers) {
        if (l.kind == LayerKind::Conv) {
            cur = l.conv.out_extent(cur);
        } else {
            require(cur >= l.pool_k, "layer " + l.name + ": pool window exceeds input");
            if (l.pool_ceil)
                cur = (cur - l.pool_k + l.pool_s - 1) / l.pool_s + 1;
            else
                cur = (cur - l.pool_k) / l.pool_s + 1;
        }
        sizes.push_back(cur);
    }
    return sizes;
}

std::vector<std::size_t> NetworkConfig::map_channels() const {
    std::vector<std::size_t> ch;
    std::size_t cur = 3;
    for (const LayerSpec& l : layers) {
        if (l.kind == LayerKind::Conv) cur = l.conv.out_channels;
        ch.push_back(cur);
    }
    return ch;
}

std::vector<std::size_t> NetworkConfig::source_map_sizes() const {
    std::vector<std::size_t> out;
    const auto sizes = map_sizes();
    for (std::size_t i = 0; i < layers.size(); ++i)
        if (layers[i].source_map) out.push_back(sizes[i]);
    return out;
}

std::vector<MapLayout> NetworkConfig::box_layout() const {
    const auto sizes = source_map_sizes();
    require(sizes.size() == heads.size(),
            "config: " + std::to_string(sizes.size()) + " source maps but " +
                std::to_string(heads.size()) + " head specs");
    std::vector<MapLayout> layout;
    for (std::size_t i = 0; i < heads.size(); ++i)
        layout.push_back(MapLayout{sizes[i], heads[i].aspects});
    return layout;
}

std::size_t NetworkConfig::anchor_count() const {
    std::size_t n = 0;
    for (const MapLayout& m : box_layout()) n += m.grid * m.grid * (m.aspects.size() + 1);
    return n;
}

void NetworkConfig::validate() const {
    require(input_size >= 1, "config: input_size must be positive");
    require(class_count >= 1, "config: class_count must be positive");
    require(timesteps >= 1, "config: timesteps must be positive");
    require(v_th > 0.0, "config: v_th must be positive");
    require(offset_range > 0.0, "config: offset_range must be positive");
    require(!layers.empty(), "config: no layers");
    require(!heads.empty(), "config: no heads");

    // shapes must chain: conv in_channels match the running channel count
    std::size_t ch = 3;
    for (const LayerSpec& l : layers) {
        if (l.kind == LayerKind::Conv) {
            require(l.conv.in_channels == ch, "layer " + l.name + ": in_channels " +
                                                  std::to_string(l.conv.in_channels) +
                                                  " != incoming channels " + std::to_string(ch));
            l.conv.validate();
            ch = l.conv.out_channels;
        }
    }
    map_sizes(); // throws on degenerate extents

    // heads must name source-map layers, in order
    std::vector<std::string> sources;
    for (const LayerSpec& l : layers)
        if (l.source_map) sources.push_back(l.name);
    require(sources.size() == heads.size(),
            "config: " + std::to_string(sources.size()) + " source maps but " +
                std::to_string(heads.size()) + " head specs");
    for (std::size_t i = 0; i < heads.size(); ++i) {
        const HeadSpec& h = heads[i];
        require(h.source == sources[i], "head " + std::to_string(i) + ": source '" + h.source +
                                            "' does not match source map '" + sources[i] + "'");
        require(!h.aspects.empty(), "head " + h.source + ": no aspect ratios");
        require(h.kernel >= 1 && h.kernel % 2 == 1, "head " + h.source + ": kernel must be odd");
        const std::size_t b = h.aspects.size() + 1;
        if (h.loc_filters)
            require(h.loc_filters == 4 * b, "head " + h.source + ": loc filters " +
                                                std::to_string(h.loc_filters) + " != 4*b_k = " +
                                                std::to_string(4 * b));
        if (h.conf_filters)
            require(h.conf_filters == static_cast<std::size_t>(class_count + 1) * b,
                    "head " + h.source + ": conf filters " + std::to_string(h.conf_filters) +
                        " != (C+1)*b_k = " +
                        std::to_string(static_cast<std::size_t>(class_count + 1) * b));
    }
}

NetworkConfig reference_config() {
    NetworkConfig cfg;
    cfg.input_size = 300;
    cfg.class_count = 20;
    cfg.timesteps = 32;
    cfg.v_th = 1.0;
    cfg.s_min = 0.2;
    cfg.s_max = 0.9;

    auto conv = [&](std::string name, std::size_t n, std::size_t m, std::size_t k,
                    std::size_t stride, std::size_t pad, bool backbone, bool source = false) {
        cfg.layers.push_back(conv_layer(std::move(name), n, m, k, stride, pad, backbone, source));
    };

    // VGG16-style stages, width-reduced so the 300x300 forward path totals
    // ~14e9 multiply-accumulates.
    conv("conv1_1", 3, 48, 3, 1, 1, true);
    conv("conv1_2", 48, 48, 3, 1, 1, true);
    cfg.layers.push_back(pool_layer("pool1"));
    conv("conv2_1", 48, 96, 3, 1, 1, true);
    conv("conv2_2", 96, 96, 3, 1, 1, true);
    cfg.layers.push_back(pool_layer("pool2"));
    conv("conv3_1", 96, 160, 3, 1, 1, true);
    conv("conv3_2", 160, 160, 3, 1, 1, true);
    conv("conv3_3", 160, 160, 3, 1, 1, true);
    cfg.layers.push_back(pool_layer("pool3", /*ceil=*/true)); // 75 -> 38
    conv("conv4_1", 160, 320, 3, 1, 1, true);
    conv("conv4_2", 320, 320, 3, 1, 1, true);
    conv("conv4_3", 320, 320, 3, 1, 1, true, /*source=*/true); // 38x38
    cfg.layers.push_back(pool_layer("pool4"));
    conv("conv5_1", 320, 320, 3, 1, 1, true);
    conv("conv5_2", 320, 320, 3, 1, 1, true);
    conv("conv5_3", 320, 320, 3, 1, 1, true);
    // classifier stage replaced by two convolutions
    conv("conv6", 320, 640, 3, 1, 1, true);
    conv("conv7", 640, 640, 1, 1, 0, true, /*source=*/true); // 19x19
    // extra feature stages down to 1x1
    conv("conv8_1", 640, 160, 1, 1, 0, false);
    conv("conv8_2", 160, 320, 3, 2, 1, false, /*source=*/true); // 10x10
    conv("conv9_1", 320, 128, 1, 1, 0, false);
    conv("conv9_2", 128, 256, 3, 2, 1, false, /*source=*/true); // 5x5
    conv("conv10_1", 256, 128, 1, 1, 0, false);
    conv("conv10_2", 128, 256, 3, 1, 0, false, /*source=*/true); // 3x3
    conv("conv11_1", 256, 128, 1, 1, 0, false);
    conv("conv11_2", 128, 256, 3, 1, 0, false, /*source=*/true); // 1x1

    const std::vector<double> narrow{1.0, 2.0, 0.5};
    const std::vector<double> wide{1.0, 2.0, 0.5, 3.0, 1.0 / 3.0};
    auto head = [&](std::string source, const std::vector<double>& aspects) {
        HeadSpec h;
        h.source = std::move(source);
        h.aspects = aspects;
        h.loc_path = PathKind::Spiking;
        h.conf_path = PathKind::Conventional;
        h.aux_loc = true;
        h.kernel = 3;
        const std::size_t b = aspects.size() + 1;
        h.loc_filters = 4 * b;
        h.conf_filters = static_cast<std::size_t>(cfg.class_count + 1) * b;
        return h;
    };
    cfg.heads.push_back(head("conv4_3", narrow)); // 16 loc / 84 conf filters
    cfg.heads.push_back(head("conv7", wide));
    cfg.heads.push_back(head("conv8_2", wide));
    cfg.heads.push_back(head("conv9_2", wide));
    cfg.heads.push_back(head("conv10_2", narrow));
    cfg.heads.push_back(head("conv11_2", narrow));
    return cfg;
}

NetworkConfig toy_config() {
    NetworkConfig cfg;
    cfg.input_size = 64;
    cfg.class_count = 3;
    cfg.timesteps = 32;
    cfg.v_th = 1.0;
    cfg.s_min = 0.2;
    cfg.s_max = 0.7;
    cfg.offset_range = 3.0;

    auto conv = [&](std::string name, std::size_t n, std::size_t m, std::size_t k,
                    std::size_t stride, std::size_t pad, bool source = false) {
        cfg.layers.push_back(conv_layer(std::move(name), n, m, k, stride, pad, true, source));
    };
    conv("conv1", 3, 16, 3, 1, 1);
    cfg.layers.push_back(pool_layer("pool1")); // 32
    conv("conv2", 16, 32, 3, 1, 1);
    cfg.layers.push_back(pool_layer("pool2")); // 16
    conv("conv3", 32, 48, 3, 1, 1);
    cfg.layers.push_back(pool_layer("pool3")); // 8
    conv("conv4", 48, 48, 3, 1, 1, /*source=*/true); // 8x8
    conv("conv5", 48, 64, 3, 2, 1, /*source=*/true); // 4x4
    conv("conv6", 64, 64, 3, 2, 1, /*source=*/true); // 2x2

    const std::vector<double> narrow{1.0, 2.0, 0.5};
    for (const char* src : {"conv4", "conv5", "conv6"}) {
        HeadSpec h;
        h.source = src;
        h.aspects = narrow;
        h.loc_path = PathKind::Spiking;
        h.conf_path = PathKind::Conventional;
        h.aux_loc = true;
        h.kernel = 3;
        cfg.heads.push_back(h);
    }
    return cfg;
}

namespace {

std::string path_name(PathKind p) { return p == PathKind::Spiking ? "spiking" : "conventional"; }

PathKind path_from(const std::string& s) {
    if (s == "spiking") return PathKind::Spiking;
    if (s == "conventional") return PathKind::Conventional;
    throw std::invalid_argument("config: unknown path kind '" + s + "'");
}

} // namespace

NetworkConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config: JSON parse error: ") + e.what());
    }
    NetworkConfig cfg;
    cfg.input_size = j.at("input_size").get<std::size_t>();
    cfg.class_count = j.at("classes").get<int>();
    cfg.timesteps = j.at("timesteps").get<std::size_t>();
    cfg.v_th = j.at("v_th").get<double>();
    cfg.tau = j.value("tau", 5.0);
    cfg.s_min = j.value("s_min", 0.2);
    cfg.s_max = j.value("s_max", 0.9);
    cfg.variances.center = j.value("variance_center", 0.1);
    cfg.variances.size = j.value("variance_size", 0.2);
    cfg.offset_range = j.value("offset_range", 3.0);
    cfg.spiking_train =
        j.value("spiking_train", std::string("eq6")) == "surrogate" ? SpikingTrainMode::Surrogate
                                                                    : SpikingTrainMode::Eq6;
    for (const json& lj : j.at("layers")) {
        LayerSpec l;
        l.name = lj.at("name").get<std::string>();
        const std::string kind = lj.at("kind").get<std::string>();
        if (kind == "conv") {
            l.kind = LayerKind::Conv;
            l.conv.in_channels = lj.at("in").get<std::size_t>();
            l.conv.out_channels = lj.at("out").get<std::size_t>();
            l.conv.kernel = lj.at("k").get<std::size_t>();
            l.conv.stride = lj.value("stride", std::size_t{1});
            l.conv.padding = lj.value("pad", std::size_t{0});
            l.relu = lj.value("relu", true);
        } else if (kind == "maxpool") {
            l.kind = LayerKind::MaxPool;
            l.pool_k = lj.value("k", std::size_t{2});
            l.pool_s = lj.value("stride", std::size_t{2});
            l.pool_ceil = lj.value("ceil", false);
        } else {
            throw std::invalid_argument("config: unknown layer kind '" + kind + "' in layer '" +
                                        l.name + "'");
        }
        l.backbone = lj.value("backbone", true);
        l.source_map = lj.value("source_map", false);
        cfg.layers.push_back(std::move(l));
    }
    for (const json& hj : j.at("head")) {
        HeadSpec h;
        h.source = hj.at("source").get<std::string>();
        h.aspects = hj.at("aspects").get<std::vector<double>>();
        h.loc_path = path_from(hj.value("loc_path", std::string("spiking")));
        h.conf_path = path_from(hj.value("conf_path", std::string("conventional")));
        h.aux_loc = hj.value("aux_loc", false);
        h.kernel = hj.value("k", std::size_t{3});
        h.loc_filters = hj.value("loc_filters", std::size_t{0});
        h.conf_filters = hj.value("conf_filters", std::size_t{0});
        cfg.heads.push_back(std::move(h));
    }
    cfg.validate();
    return cfg;
}

std::string config_to_json(const NetworkConfig& cfg) {
    json j;
    j["input_size"] = cfg.input_size;
    j["classes"] = cfg.class_count;
    j["timesteps"] = cfg.timesteps;
    j["v_th"] = cfg.v_th;
    j["tau"] = cfg.tau;
    j["s_min"] = cfg.s_min;
    j["s_max"] = cfg.s_max;
    j["variance_center"] = cfg.variances.center;
    j["variance_size"] = cfg.variances.size;
    j["offset_range"] = cfg.offset_range;
    j["spiking_train"] = cfg.spiking_train == SpikingTrainMode::Surrogate ? "surrogate" : "eq6";
    j["layers"] = json::array();
    for (const LayerSpec& l : cfg.layers) {
        json lj;
        lj["name"] = l.name;
        if (l.kind == LayerKind::Conv) {
            lj["kind"] = "conv";
            lj["in"] = l.conv.in_channels;
            lj["out"] = l.conv.out_channels;
            lj["k"] = l.conv.kernel;
            lj["stride"] = l.conv.stride;
            lj["pad"] = l.conv.padding;
            lj["relu"] = l.relu;
        } else {
            lj["kind"] = "maxpool";
            lj["k"] = l.pool_k;
            lj["stride"] = l.pool_s;
            lj["ceil"] = l.pool_ceil;
        }
        lj["backbone"] = l.backbone;
        lj["source_map"] = l.source_map;
        j["layers"].push_back(lj);
    }
    j["head"] = json::array();
    for (const HeadSpec& h : cfg.heads) {
        json hj;
        hj["source"] = h.source;
        hj["aspects"] = h.aspects;
        hj["loc_path"] = path_name(h.loc_path);
        hj["conf_path"] = path_name(h.conf_path);
        hj["aux_loc"] = h.aux_loc;
        hj["k"] = h.kernel;
        if (h.loc_filters) hj["loc_filters"] = h.loc_filters;
        if (h.conf_filters) hj["conf_filters"] = h.conf_filters;
        j["head"].push_back(hj);
    }
    return j.dump(2) + "\n";
}

NetworkConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return config_from_json(ss.str());
}

} // namespace scod

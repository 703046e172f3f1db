#include "scod/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "scod/costmodel.hpp"
#include "scod/data.hpp"
#include "scod/evaluate.hpp"
#include "scod/network.hpp"
#include "scod/parallel.hpp"
#include "scod/serialize.hpp"

namespace scod {

namespace {

namespace fs = std::filesystem;

constexpr const char* kVersion = "0.1.0";

std::string timestamp_utc() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path);
}

// Every run leaves exactly one manifest alongside its outputs.
void write_run_manifest(const std::string& out_dir, const std::string& command,
                        const std::string& config_path, std::uint64_t seed,
                        const std::string& started, const std::vector<std::string>& outputs) {
    nlohmann::json j;
    j["command"] = command;
    j["config"] = config_path;
    j["seed"] = seed;
    j["started"] = started;
    j["finished"] = timestamp_utc();
    j["outputs"] = outputs;
    j["version"] = kVersion;
    write_text((fs::path(out_dir) / "run_manifest.json").string(), j.dump(2) + "\n");
}

NetworkConfig resolve_config(const std::string& config_arg, const std::string& fallback) {
    const std::string name = config_arg.empty() ? fallback : config_arg;
    if (name == "toy") return toy_config();
    if (name == "reference") return reference_config();
    return load_config(name);
}

std::uint64_t resolve_seed(std::uint64_t cli_seed) {
    if (const char* env = std::getenv("SCOD_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw std::runtime_error(std::string("SCOD_SEED is not an integer: ") + env);
        }
    }
    return cli_seed;
}

int class_id_for(const std::vector<std::string>& names, const std::string& name) {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<int>(i + 1);
    throw std::runtime_error("unknown class name '" + name + "'");
}

struct LoadedDataset {
    std::vector<TrainSample> samples;          // difficult objects excluded
    std::vector<std::string> image_ids;
    std::vector<Annotation> annotations;       // as parsed, difficult included
    std::vector<std::vector<std::pair<Box, int>>> difficult_gts; // per sample
};

Annotation parse_annotation_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open annotation " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".xml") == 0)
        return parse_voc_xml(bytes);
    return parse_exdark_bbgt(bytes);
}

LoadedDataset load_dataset(const std::string& data_dir, const NetworkConfig& cfg) {
    const Manifest manifest = load_manifest((fs::path(data_dir) / "manifest.csv").string());
    const auto names = class_names_for(cfg.class_count);
    LoadedDataset ds;
    for (const ManifestRow& row : manifest.rows) {
        const std::string img_path = (fs::path(data_dir) / row.image_path).string();
        const std::string ann_path = (fs::path(data_dir) / row.annotation_path).string();
        Tensor image = read_image_file(img_path);
        if (image.shape[1] != cfg.input_size || image.shape[2] != cfg.input_size)
            throw std::runtime_error("image " + row.image_path + " is " +
                                     std::to_string(image.shape[2]) + "x" +
                                     std::to_string(image.shape[1]) + ", config wants " +
                                     std::to_string(cfg.input_size) + "x" +
                                     std::to_string(cfg.input_size));
        Annotation ann = parse_annotation_file(ann_path);
        const double w = ann.width ? static_cast<double>(ann.width)
                                   : static_cast<double>(image.shape[2]);
        const double h = ann.height ? static_cast<double>(ann.height)
                                    : static_cast<double>(image.shape[1]);
        TrainSample sample;
        sample.image = std::move(image);
        std::vector<std::pair<Box, int>> difficult;
        for (const AnnotationObject& o : ann.objects) {
            const Box box = Box::from_corners(o.xmin / w, o.ymin / h, o.xmax / w, o.ymax / h);
            const int cls = class_id_for(names, o.class_name);
            if (o.difficult)
                difficult.emplace_back(box, cls);
            else
                sample.gts.emplace_back(box, cls);
        }
        ds.samples.push_back(std::move(sample));
        ds.difficult_gts.push_back(std::move(difficult));
        ds.image_ids.push_back(row.image_path);
        ds.annotations.push_back(std::move(ann));
    }
    if (ds.samples.empty()) throw std::runtime_error("dataset is empty: " + data_dir);
    return ds;
}

// formats doubles so two identical runs serialize identically
std::string num(double v) {
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

struct EvalOutcome {
    EvalReport report;
};

EvalOutcome evaluate_model(const Model& model, const LoadedDataset& ds, double conf_threshold,
                           double nms_threshold, std::size_t top_k, double iou_threshold,
                           ApProtocol protocol, std::size_t threads) {
    const auto names = class_names_for(model.cfg.class_count);
    std::vector<std::vector<Detection>> all(ds.samples.size());
    parallel_for(ds.samples.size(), threads, [&](std::size_t i) {
        all[i] = detect(model, ds.samples[i].image, conf_threshold, nms_threshold, top_k);
    });

    std::map<std::string, std::vector<ScoredBox>> dets;
    std::map<std::string, std::vector<GtBox>> gts;
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        for (const Detection& d : all[i]) {
            const std::string& cls = names[static_cast<std::size_t>(d.class_id - 1)];
            dets[cls].push_back(ScoredBox{ds.image_ids[i], d.box, d.score});
        }
        for (const auto& [box, cls_id] : ds.samples[i].gts)
            gts[names[static_cast<std::size_t>(cls_id - 1)]].push_back(
                GtBox{ds.image_ids[i], box, false});
        for (const auto& [box, cls_id] : ds.difficult_gts[i])
            gts[names[static_cast<std::size_t>(cls_id - 1)]].push_back(
                GtBox{ds.image_ids[i], box, true});
    }
    EvalOutcome out;
    out.report = mean_average_precision(dets, gts, iou_threshold, protocol);
    return out;
}

struct CommonFlags {
    std::string config;
    std::string data;
    std::string out;
    std::size_t epochs = 20;
    double lr = 0.005;
    std::uint64_t seed = 1;
    double iou = 0.5;
    double conf = 0.3;
    std::size_t topk = 100;
    std::size_t timesteps = 0; // 0 = config value
    std::string sa = "auto";
    std::string protocol = "allpoint";
    std::size_t threads = 1;
    double dark = 0.2;
    std::size_t n = 10;
    bool csv = false;
    bool dump_spikes = false;
};

ApProtocol protocol_from(const std::string& s) {
    if (s == "allpoint") return ApProtocol::AllPoint;
    if (s == "11point") return ApProtocol::ElevenPoint;
    throw std::runtime_error("unknown protocol '" + s + "' (allpoint|11point)");
}

int cmd_synth(const CommonFlags& f) {
    if (f.out.empty()) throw std::runtime_error("synth: --out is required");
    const std::string started = timestamp_utc();
    const std::uint64_t seed = resolve_seed(f.seed);
    const Manifest m = generate_synthetic_dataset(f.n, seed, f.dark, f.out);
    std::vector<std::string> outputs{"manifest.csv"};
    for (const ManifestRow& r : m.rows) {
        outputs.push_back(r.image_path);
        outputs.push_back(r.annotation_path);
    }
    write_run_manifest(f.out, "synth", "", seed, started, outputs);
    std::cout << "synth: wrote " << m.rows.size() << " images to " << f.out << "\n";
    return 0;
}

int cmd_train(const CommonFlags& f) {
    if (f.data.empty()) throw std::runtime_error("train: --data is required");
    if (f.out.empty()) throw std::runtime_error("train: --out is required");
    const std::string started = timestamp_utc();
    const std::uint64_t seed = resolve_seed(f.seed);
    NetworkConfig cfg = resolve_config(f.config, "toy");
    if (f.timesteps) cfg.timesteps = f.timesteps;

    const LoadedDataset ds = load_dataset(f.data, cfg);
    Model model = build_network(cfg, seed);

    fs::create_directories(f.out);
    std::ostringstream log;
    log << "epoch,loss,map\n";
    for (std::size_t e = 0; e < f.epochs; ++e) {
        const double loss = train_epoch(model, ds.samples, f.lr, mix_seed(seed, e + 1));
        double map = 0.0;
        try {
            map = evaluate_model(model, ds, f.conf, 0.45, f.topk, f.iou,
                                 protocol_from(f.protocol), f.threads)
                      .report.map;
        } catch (const std::invalid_argument&) {
            map = 0.0; // no detections yet
        }
        log << e + 1 << "," << num(loss) << "," << num(map) << "\n";
        std::cout << "epoch " << e + 1 << "/" << f.epochs << " loss " << loss << " map " << map
                  << "\n";
    }
    const std::string weights_path = (fs::path(f.out) / "weights.scodw").string();
    save_weights(weights_path, model.params);
    write_text((fs::path(f.out) / "loss_log.csv").string(), log.str());
    write_text((fs::path(f.out) / "config.json").string(), config_to_json(cfg));
    write_run_manifest(f.out, "train", f.config, seed, started,
                       {"weights.scodw", "loss_log.csv", "config.json"});
    return 0;
}

int cmd_eval(const CommonFlags& f, const std::string& weights_path) {
    if (f.data.empty()) throw std::runtime_error("eval: --data is required");
    const std::string started = timestamp_utc();
    const std::uint64_t seed = resolve_seed(f.seed);
    NetworkConfig cfg = resolve_config(f.config, "toy");
    if (f.timesteps) cfg.timesteps = f.timesteps;

    const LoadedDataset ds = load_dataset(f.data, cfg);
    Model model = weights_path.empty() ? build_network(cfg, seed)
                                       : build_network(cfg, load_weights(weights_path));
    const EvalOutcome oc = evaluate_model(model, ds, f.conf, 0.45, f.topk, f.iou,
                                          protocol_from(f.protocol), f.threads);
    const std::string body = f.csv ? report_to_csv(oc.report) : report_to_json(oc.report);
    std::cout << report_to_table(oc.report);
    if (!f.out.empty()) {
        fs::create_directories(f.out);
        const std::string name = f.csv ? "eval_report.csv" : "eval_report.json";
        write_text((fs::path(f.out) / name).string(), body);
        write_text((fs::path(f.out) / "eval_report.txt").string(),
                   report_to_table(oc.report));
        write_run_manifest(f.out, "eval", f.config, seed, started,
                           {name, "eval_report.txt"});
    }
    return 0;
}

int cmd_detect(const CommonFlags& f, const std::string& weights_path,
               const std::string& image_path) {
    if (image_path.empty()) throw std::runtime_error("detect: an image path is required");
    if (f.out.empty()) throw std::runtime_error("detect: --out is required");
    const std::string started = timestamp_utc();
    const std::uint64_t seed = resolve_seed(f.seed);
    NetworkConfig cfg = resolve_config(f.config, "toy");
    if (f.timesteps) cfg.timesteps = f.timesteps;

    Tensor image = read_image_file(image_path);
    if (image.shape[1] != cfg.input_size || image.shape[2] != cfg.input_size)
        throw std::runtime_error("detect: image is " + std::to_string(image.shape[2]) + "x" +
                                 std::to_string(image.shape[1]) + ", config wants " +
                                 std::to_string(cfg.input_size) + "x" +
                                 std::to_string(cfg.input_size));
    Model model = weights_path.empty() ? build_network(cfg, seed)
                                       : build_network(cfg, load_weights(weights_path));
    const std::vector<Detection> dets = detect(model, image, f.conf, 0.45, f.topk);

    fs::create_directories(f.out);
    const std::string csv =
        detections_to_csv(dets, fs::path(image_path).filename().string(), image.shape[2],
                          image.shape[1], class_names_for(cfg.class_count));
    write_text((fs::path(f.out) / "detections.csv").string(), csv);
    std::vector<std::string> outputs{"detections.csv"};
    if (f.dump_spikes) {
        const ForwardResult fr = forward(model, image);
        write_text((fs::path(f.out) / "spikes.csv").string(),
                   spike_events_to_csv(fr.head_trains));
        outputs.push_back("spikes.csv");
    }
    write_run_manifest(f.out, "detect", f.config, seed, started, outputs);
    std::cout << "detect: " << dets.size() << " detections\n";
    return 0;
}

int cmd_profile(const CommonFlags& f) {
    const std::string started = timestamp_utc();
    const std::uint64_t seed = resolve_seed(f.seed);
    NetworkConfig cfg = resolve_config(f.config, "reference");
    if (f.timesteps) cfg.timesteps = f.timesteps;

    ActivitySource activity = ActivitySource::fixed_value(1.0);
    if (f.sa == "auto") {
        // measure spiking activity with one forward pass on a seeded image
        Model model = build_network(cfg, seed);
        Rng rng(mix_seed(seed, 0x696d67));
        Tensor image = uniform_tensor({3, cfg.input_size, cfg.input_size}, 0.0, 1.0, rng);
        const ForwardResult fr = forward(model, image);
        std::map<std::string, double> measured;
        for (const auto& [name, s_a] : fr.head_activity) measured[name] = s_a;
        activity = ActivitySource::from_measurements(std::move(measured));
    } else {
        activity = ActivitySource::fixed_value(std::stod(f.sa));
    }

    const NetworkProfile profile = profile_network(cfg, activity);
    const std::string body = f.csv ? profile_to_csv(profile) : profile_to_json(profile);
    if (f.out.empty()) {
        std::cout << body;
    } else {
        fs::create_directories(f.out);
        const std::string name = f.csv ? "profile.csv" : "profile.json";
        write_text((fs::path(f.out) / name).string(), body);
        write_run_manifest(f.out, "profile", f.config, seed, started, {name});
        std::cout << "profile: total_flops_cnn " << profile.total_flops_cnn
                  << " backbone_share " << profile.backbone_share << "\n";
    }
    return 0;
}

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config,
                    "network config: a JSON path, 'toy', or 'reference'");
    cmd->add_option("--seed", f.seed, "random seed (SCOD_SEED overrides)");
    cmd->add_option("--threads", f.threads,
                    "worker threads; artifacts are identical for any count");
    cmd->add_flag("--csv", f.csv, "emit tabular reports as CSV instead of JSON");
}

} // namespace

int run_command(const std::vector<std::string>& args) {
    CLI::App app{"spiking/convolutional single-shot detector toolkit"};
    app.require_subcommand(1);

    CommonFlags f;

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic low-light dataset");
    add_common(synth, f);
    synth->add_option("--n", f.n, "number of images");
    synth->add_option("--dark", f.dark, "darkness scale in (0,1]");
    synth->add_option("--out", f.out, "output directory")->required();

    CLI::App* train = app.add_subcommand("train", "train on a dataset manifest");
    add_common(train, f);
    train->add_option("--data", f.data, "dataset directory (with manifest.csv)")->required();
    train->add_option("--out", f.out, "output directory")->required();
    train->add_option("--epochs", f.epochs, "training epochs");
    train->add_option("--lr", f.lr, "learning rate");
    train->add_option("--iou", f.iou, "mAP IoU threshold for the per-epoch log");
    train->add_option("--conf", f.conf, "confidence threshold for the per-epoch log");
    train->add_option("--topk", f.topk, "max detections per image");
    train->add_option("--timesteps", f.timesteps, "override config timesteps");
    train->add_option("--protocol", f.protocol, "AP protocol: allpoint|11point");

    CLI::App* eval = app.add_subcommand("eval", "evaluate mAP over a dataset manifest");
    add_common(eval, f);
    eval->add_option("--data", f.data, "dataset directory (with manifest.csv)")->required();
    eval->add_option("--out", f.out, "output directory for the report");
    eval->add_option("--iou", f.iou, "IoU threshold");
    eval->add_option("--conf", f.conf, "confidence threshold");
    eval->add_option("--topk", f.topk, "max detections per image");
    eval->add_option("--timesteps", f.timesteps, "override config timesteps");
    eval->add_option("--protocol", f.protocol, "AP protocol: allpoint|11point");
    std::string eval_weights;
    eval->add_option("weights", eval_weights, "SCODW1 weight file (seeded-random if absent)");

    CLI::App* detect_cmd = app.add_subcommand("detect", "detect objects in one PPM image");
    add_common(detect_cmd, f);
    detect_cmd->add_option("--out", f.out, "output directory")->required();
    detect_cmd->add_option("--conf", f.conf, "confidence threshold");
    detect_cmd->add_option("--topk", f.topk, "max detections");
    detect_cmd->add_option("--timesteps", f.timesteps, "override config timesteps");
    detect_cmd->add_flag("--dump-spikes", f.dump_spikes,
                         "also export head spike events as CSV (layer,neuron_id,timestep)");
    std::string det_weights, det_image;
    detect_cmd->add_option("image", det_image, "input PPM image")->required();
    detect_cmd->add_option("weights", det_weights,
                           "SCODW1 weight file (seeded-random if absent)");

    CLI::App* profile = app.add_subcommand("profile", "FLOPS and energy report");
    add_common(profile, f);
    profile->add_option("--timesteps", f.timesteps, "override config timesteps");
    profile->add_option("--sa", f.sa, "spiking activity: a value in [0,1] or 'auto'");
    profile->add_option("--out", f.out, "output directory (stdout if absent)");

    std::vector<std::string> argv(args.rbegin(), args.rend()); // CLI11 takes reversed args
    try {
        app.parse(argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n" << app.help() << "\n";
        return 2;
    }

    try {
        if (synth->parsed()) return cmd_synth(f);
        if (train->parsed()) return cmd_train(f);
        if (eval->parsed()) return cmd_eval(f, eval_weights);
        if (detect_cmd->parsed()) return cmd_detect(f, det_weights, det_image);
        if (profile->parsed()) return cmd_profile(f);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

} // namespace scod

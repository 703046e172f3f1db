#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "scod/cli.hpp"
#include "scod/data.hpp"

using namespace scod;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / name;
    fs::remove_all(p);
    return p;
}

} // namespace

TEST_CASE("unknown subcommand and missing flags exit 2") {
    CHECK(run_command({"bogus"}) == 2);
    CHECK(run_command({}) == 2);
    CHECK(run_command({"synth"}) == 2);                       // --out required
    CHECK(run_command({"profile", "--no-such-flag"}) == 2);
}

TEST_CASE("help exits 0 on the app and every subcommand") {
    CHECK(run_command({"--help"}) == 0);
    for (const char* sub : {"synth", "train", "eval", "detect", "profile"})
        CHECK(run_command({sub, "--help"}) == 0);
}

TEST_CASE("runtime failures exit 1") {
    CHECK(run_command({"profile", "--config", "/nonexistent/config.json"}) == 1);
    const fs::path out = fresh_dir("scod_cli_fail");
    CHECK(run_command({"train", "--data", "/nonexistent/dataset", "--out", out.string()}) == 1);
}

TEST_CASE("synth writes images, annotations and manifests") {
    const fs::path out = fresh_dir("scod_cli_synth");
    CHECK(run_command({"synth", "--n", "10", "--seed", "1", "--dark", "0.2", "--out",
                       out.string()}) == 0);
    std::size_t ppm = 0, txt = 0;
    for (const auto& e : fs::directory_iterator(out)) {
        if (e.path().extension() == ".ppm") ++ppm;
        if (e.path().extension() == ".txt") ++txt;
    }
    CHECK(ppm == 10);
    CHECK(txt == 10);
    CHECK(fs::exists(out / "manifest.csv"));
    CHECK(fs::exists(out / "run_manifest.json"));
    const std::string manifest = slurp(out / "run_manifest.json");
    CHECK(manifest.find("\"command\": \"synth\"") != std::string::npos);
    fs::remove_all(out);
}

TEST_CASE("synth output is byte-identical across runs with one seed") {
    const fs::path a = fresh_dir("scod_cli_synth_a");
    const fs::path b = fresh_dir("scod_cli_synth_b");
    REQUIRE(run_command({"synth", "--n", "4", "--seed", "9", "--dark", "0.3", "--out",
                         a.string()}) == 0);
    REQUIRE(run_command({"synth", "--n", "4", "--seed", "9", "--dark", "0.3", "--out",
                         b.string()}) == 0);
    for (const auto& e : fs::directory_iterator(a)) {
        if (e.path().filename() == "run_manifest.json") continue; // carries timestamps
        CHECK(slurp(e.path()) == slurp(b / e.path().filename()));
    }
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("SCOD_SEED overrides the seed flag") {
    const fs::path a = fresh_dir("scod_cli_env_a");
    const fs::path b = fresh_dir("scod_cli_env_b");
    setenv("SCOD_SEED", "123", 1);
    REQUIRE(run_command({"synth", "--n", "2", "--seed", "1", "--out", a.string()}) == 0);
    REQUIRE(run_command({"synth", "--n", "2", "--seed", "2", "--out", b.string()}) == 0);
    unsetenv("SCOD_SEED");
    CHECK(slurp(a / "img_00000.ppm") == slurp(b / "img_00000.ppm"));
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("profile emits the documented report keys") {
    const fs::path out = fresh_dir("scod_cli_profile");
    CHECK(run_command({"profile", "--config", "toy", "--timesteps", "32", "--sa", "0.05",
                       "--out", out.string()}) == 0);
    const std::string body = slurp(out / "profile.json");
    CHECK(body.find("\"total_flops_cnn\"") != std::string::npos);
    CHECK(body.find("\"total_energy\"") != std::string::npos);
    CHECK(body.find("\"backbone_share\"") != std::string::npos);
    fs::remove_all(out);

    // bad --sa value is a runtime failure
    CHECK(run_command({"profile", "--config", "toy", "--sa", "2.0"}) == 1);
}

TEST_CASE("profile --sa auto measures activity from a forward pass") {
    const fs::path out = fresh_dir("scod_cli_profile_auto");
    CHECK(run_command({"profile", "--config", "toy", "--sa", "auto", "--seed", "5", "--out",
                       out.string()}) == 0);
    const std::string body = slurp(out / "profile.json");
    CHECK(body.find("\"spiking\": true") != std::string::npos);
    fs::remove_all(out);
}

TEST_CASE("eval artifacts are identical for any thread count") {
    const fs::path data = fresh_dir("scod_cli_thr_data");
    REQUIRE(run_command({"synth", "--n", "6", "--seed", "2", "--dark", "0.4", "--out",
                         data.string()}) == 0);
    const fs::path a = fresh_dir("scod_cli_thr_a");
    const fs::path b = fresh_dir("scod_cli_thr_b");
    REQUIRE(run_command({"eval", "--config", "toy", "--data", data.string(), "--out",
                         a.string(), "--conf", "0.05", "--seed", "3", "--threads", "1"}) == 0);
    REQUIRE(run_command({"eval", "--config", "toy", "--data", data.string(), "--out",
                         b.string(), "--conf", "0.05", "--seed", "3", "--threads", "4"}) == 0);
    CHECK(slurp(a / "eval_report.json") == slurp(b / "eval_report.json"));
    fs::remove_all(data);
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("detect --dump-spikes exports spike events") {
    const fs::path data = fresh_dir("scod_cli_spk_data");
    REQUIRE(run_command({"synth", "--n", "1", "--seed", "6", "--dark", "0.5", "--out",
                         data.string()}) == 0);
    const fs::path out = fresh_dir("scod_cli_spk_out");
    REQUIRE(run_command({"detect", "--config", "toy", "--out", out.string(), "--conf", "0.05",
                         "--dump-spikes", (data / "img_00000.ppm").string()}) == 0);
    const std::string csv = slurp(out / "spikes.csv");
    CHECK(csv.rfind("layer,neuron_id,timestep\n", 0) == 0);
    CHECK(csv.find("conv4_loc") != std::string::npos);
    fs::remove_all(data);
    fs::remove_all(out);
}

TEST_CASE("train then eval and detect complete on a tiny dataset") {
    const fs::path data = fresh_dir("scod_cli_data");
    REQUIRE(run_command({"synth", "--n", "3", "--seed", "4", "--dark", "0.4", "--out",
                         data.string()}) == 0);

    const fs::path run = fresh_dir("scod_cli_run");
    CHECK(run_command({"train", "--config", "toy", "--data", data.string(), "--out",
                       run.string(), "--epochs", "1", "--lr", "0.003", "--seed", "7"}) == 0);
    CHECK(fs::exists(run / "weights.scodw"));
    CHECK(fs::exists(run / "loss_log.csv"));
    const std::string log = slurp(run / "loss_log.csv");
    CHECK(log.rfind("epoch,loss,map\n", 0) == 0);

    const fs::path evald = fresh_dir("scod_cli_eval");
    CHECK(run_command({"eval", "--config", "toy", "--data", data.string(), "--out",
                       evald.string(), "--conf", "0.1", (run / "weights.scodw").string()}) ==
          0);
    CHECK(fs::exists(evald / "eval_report.json"));

    const fs::path det = fresh_dir("scod_cli_detect");
    CHECK(run_command({"detect", "--config", "toy", "--out", det.string(), "--conf", "0.05",
                       (data / "img_00000.ppm").string(),
                       (run / "weights.scodw").string()}) == 0);
    CHECK(fs::exists(det / "detections.csv"));
    const std::string csv = slurp(det / "detections.csv");
    CHECK(csv.rfind("image_id,class_name,score,xmin,ymin,xmax,ymax\n", 0) == 0);

    fs::remove_all(data);
    fs::remove_all(run);
    fs::remove_all(evald);
    fs::remove_all(det);
}

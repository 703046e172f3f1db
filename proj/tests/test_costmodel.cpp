#include <doctest.h>

#include "scod/costmodel.hpp"

using namespace scod;

namespace {

// Instrumented direct convolution: counts one MAC per kernel-element visit
// over a dense output sweep.
std::uint64_t counted_macs(std::size_t O, std::size_t N, std::size_t k, std::size_t M) {
    std::uint64_t macs = 0;
    for (std::size_t m = 0; m < M; ++m)
        for (std::size_t oy = 0; oy < O; ++oy)
            for (std::size_t ox = 0; ox < O; ++ox)
                for (std::size_t n = 0; n < N; ++n)
                    for (std::size_t ky = 0; ky < k; ++ky)
                        for (std::size_t kx = 0; kx < k; ++kx) ++macs;
    return macs;
}

ConvSpec spec_of(std::size_t N, std::size_t M, std::size_t k) {
    return ConvSpec{N, M, k, 1, (k - 1) / 2};
}

} // namespace

TEST_CASE("flops_conv worked examples") {
    CHECK(flops_conv(spec_of(128, 256, 3), 10) == 29491200ULL);
    CHECK(flops_conv(spec_of(1, 1, 1), 1) == 1ULL);
    CHECK(flops_conv(spec_of(3, 4, 1), 2) == 48ULL);
    CHECK_THROWS_AS(flops_conv(spec_of(1, 1, 1), 0), std::invalid_argument);
}

TEST_CASE("flops_conv equals the instrumented MAC counter on a sweep") {
    for (std::size_t O : {1u, 2u, 3u, 5u})
        for (std::size_t N : {1u, 2u, 4u})
            for (std::size_t k : {1u, 3u, 5u})
                for (std::size_t M : {1u, 3u, 4u})
                    CHECK(flops_conv(spec_of(N, M, k), O) == counted_macs(O, N, k, M));
}

TEST_CASE("flops_conv is strictly monotone in each argument") {
    const std::uint64_t base = flops_conv(spec_of(4, 4, 3), 6);
    CHECK(flops_conv(spec_of(4, 4, 3), 7) > base);
    CHECK(flops_conv(spec_of(5, 4, 3), 6) > base);
    CHECK(flops_conv(spec_of(4, 5, 3), 6) > base);
    CHECK(flops_conv(spec_of(4, 4, 5), 6) > base);
}

TEST_CASE("flops_spiking_conv scales by activity") {
    CHECK(flops_spiking_conv(100, 1.0) == 100.0);
    CHECK(flops_spiking_conv(100, 0.0) == 0.0);
    CHECK(flops_spiking_conv(29491200ULL, 0.1) == doctest::Approx(2949120.0).epsilon(1e-12));
    for (double a : {0.0, 0.25, 0.5, 1.0})
        CHECK(flops_spiking_conv(12345, a) <= 12345.0);

    CHECK_THROWS_WITH_AS(flops_spiking_conv(10, 1.5), doctest::Contains("outside [0,1]"),
                         std::invalid_argument);
    // literal out-of-range values pass only with the override
    CHECK(flops_spiking_conv(10, 1.5, /*allow=*/true) == 15.0);
}

TEST_CASE("measure_spiking_activity counts spike fraction") {
    SpikeTrain zeros(10, 10);
    CHECK(measure_spiking_activity({&zeros}) == 0.0);

    SpikeTrain ones(4, 8);
    for (auto& e : ones.events) e = 1;
    CHECK(measure_spiking_activity({&ones}) == 1.0);

    SpikeTrain five(10, 10);
    for (std::size_t i = 0; i < 5; ++i) five.set(i, i, 1);
    CHECK(measure_spiking_activity({&five}) == doctest::Approx(0.05).epsilon(1e-15));

    CHECK_THROWS_WITH_AS(measure_spiking_activity(std::vector<const SpikeTrain*>{}),
                         doctest::Contains("empty"), std::invalid_argument);
}

TEST_CASE("energy_snn worked examples") {
    CHECK(energy_snn({100.0}, 10, 0.1) == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(energy_snn({100.0}, 0, 0.1) == 0.0);
    CHECK(energy_snn({100.0, 200.0}, 1, 0.1) == doctest::Approx(30.0).epsilon(1e-12));
    CHECK_THROWS_AS(energy_snn({1.0}, 1, 0.0), std::invalid_argument);
}

TEST_CASE("profile totals equal a per-layer recomputation") {
    const NetworkConfig cfg = toy_config();
    const NetworkProfile p = profile_network(cfg, ActivitySource::fixed_value(0.2));

    std::uint64_t cnn = 0;
    double snn = 0.0, energy = 0.0;
    for (const LayerCost& c : p.layers) {
        cnn += c.flops_cnn;
        snn += c.flops_snn;
        energy += c.energy;
        CHECK(c.flops_snn == doctest::Approx(static_cast<double>(c.flops_cnn) * c.s_a));
        CHECK(c.flops_snn <= static_cast<double>(c.flops_cnn));
    }
    CHECK(p.total_flops_cnn == cnn);
    CHECK(p.total_flops_snn == doctest::Approx(snn));
    CHECK(p.total_energy == doctest::Approx(energy));
    CHECK(p.total_energy ==
          doctest::Approx(p.total_flops_snn * 0.1 * static_cast<double>(cfg.timesteps)));
}

TEST_CASE("reference profile lands in the published cost band") {
    const NetworkProfile p =
        profile_network(reference_config(), ActivitySource::fixed_value(0.05));
    CHECK(p.total_flops_cnn >= 13'000'000'000ULL);
    CHECK(p.total_flops_cnn <= 16'000'000'000ULL);
    CHECK(p.backbone_share > 0.8);
}

TEST_CASE("measured activity source requires every spiking layer") {
    const NetworkConfig cfg = toy_config();
    ActivitySource missing = ActivitySource::from_measurements({{"conv4_loc", 0.1}});
    CHECK_THROWS_WITH_AS(profile_network(cfg, missing),
                         doctest::Contains("no measured activity"), std::invalid_argument);

    std::map<std::string, double> all;
    for (const char* n : {"conv4_loc", "conv5_loc", "conv6_loc"}) all[n] = 0.07;
    const NetworkProfile p = profile_network(cfg, ActivitySource::from_measurements(all));
    for (const LayerCost& c : p.layers)
        if (c.spiking) CHECK(c.s_a == 0.07);
}

TEST_CASE("profile report serializes the documented keys") {
    const NetworkProfile p = profile_network(toy_config(), ActivitySource::fixed_value(0.5));
    const std::string json = profile_to_json(p);
    for (const char* key : {"\"layers\"", "\"total_flops_cnn\"", "\"total_flops_snn\"",
                            "\"total_energy\"", "\"backbone_share\"", "\"s_a\"", "\"energy\""})
        CHECK(json.find(key) != std::string::npos);
    const std::string csv = profile_to_csv(p);
    CHECK(csv.rfind("name,backbone,spiking,flops_cnn,flops_snn,s_a,energy\n", 0) == 0);
}

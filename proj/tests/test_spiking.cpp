#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "scod/spiking.hpp"

using namespace scod;

TEST_CASE("periodic rate coding boundary values") {
    Tensor ones = Tensor::from({1}, {1.0});
    SpikeTrain all = encode_rate(ones, 16, RateCoding::Periodic);
    CHECK(all.spike_count(0) == 16);
    CHECK(all.decode_rate(0) == 1.0);

    Tensor zeros = Tensor::from({1}, {0.0});
    SpikeTrain none = encode_rate(zeros, 16, RateCoding::Periodic);
    CHECK(none.total_spikes() == 0);
    CHECK(none.decode_rate(0) == 0.0);
}

TEST_CASE("periodic rate coding half rate at T=8") {
    Tensor half = Tensor::from({1}, {0.5});
    SpikeTrain t = encode_rate(half, 8, RateCoding::Periodic);
    CHECK(t.spike_count(0) == 4);
    CHECK(t.decode_rate(0) == 0.5);
    // fires where floor((t+1)*v) increments: steps 1,3,5,7
    CHECK(t.firing_times(0) == std::vector<std::size_t>{1, 3, 5, 7});
}

TEST_CASE("rate fidelity bound holds on a value grid") {
    for (std::size_t T : {8u, 32u, 256u}) {
        for (int i = 0; i <= 100; ++i) {
            const double v = i / 100.0;
            Tensor val = Tensor::from({1}, {v});
            SpikeTrain t = encode_rate(val, T, RateCoding::Periodic);
            CHECK(std::abs(t.decode_rate(0) - v) <= 1.0 / static_cast<double>(T));
        }
    }
}

TEST_CASE("stochastic coding is seeded and approximately unbiased") {
    Tensor v = Tensor::from({1}, {0.3});
    SpikeTrain a = encode_rate(v, 4096, RateCoding::Stochastic, 17);
    SpikeTrain b = encode_rate(v, 4096, RateCoding::Stochastic, 17);
    CHECK(a.events == b.events);
    CHECK(a.decode_rate(0) == doctest::Approx(0.3).epsilon(0.1));
}

TEST_CASE("encode_rate rejects out-of-range values") {
    CHECK_THROWS_WITH_AS(encode_rate(Tensor::from({1}, {1.5}), 8, RateCoding::Periodic),
                         doctest::Contains("outside [0,1]"), std::invalid_argument);
    CHECK_THROWS_AS(encode_rate(Tensor::from({1}, {-0.1}), 8, RateCoding::Periodic),
                    std::invalid_argument);
}

TEST_CASE("lif constant sub-threshold input fires on the third step") {
    LifState st = LifState::make(1, 1.0);
    auto s1 = lif_step(st, {0.4});
    CHECK(s1[0] == 0);
    auto s2 = lif_step(st, {0.4});
    CHECK(s2[0] == 0);
    auto s3 = lif_step(st, {0.4});
    CHECK(s3[0] == 1);
    CHECK(st.membrane[0] == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("lif zero input leaves the membrane constant") {
    LifState st = LifState::make(3, 1.0);
    st.membrane = {0.1, 0.5, 0.9};
    for (int i = 0; i < 10; ++i) {
        auto s = lif_step(st, {0.0, 0.0, 0.0});
        CHECK(s == std::vector<std::uint8_t>{0, 0, 0});
    }
    CHECK(st.membrane == std::vector<double>{0.1, 0.5, 0.9});
}

TEST_CASE("lif threshold-sized input fires every step with exact reset") {
    LifState st = LifState::make(1, 0.75);
    for (int i = 0; i < 20; ++i) {
        auto s = lif_step(st, {0.75});
        CHECK(s[0] == 1);
        CHECK(st.membrane[0] == 0.0);
    }
}

TEST_CASE("lif rejects non-finite input") {
    LifState st = LifState::make(1, 1.0);
    CHECK_THROWS_WITH_AS(lif_step(st, {std::nan("")}), doctest::Contains("non-finite"),
                         std::invalid_argument);
}

TEST_CASE("membrane bookkeeping identity") {
    Rng rng(13);
    LifState st = LifState::make(4, 0.9);
    std::vector<double> total(4, 0.0);
    std::vector<std::size_t> fired(4, 0);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> in(4);
        for (double& v : in) v = rng.uniform(-0.2, 0.5);
        for (std::size_t j = 0; j < 4; ++j) total[j] += in[j];
        auto s = lif_step(st, in);
        for (std::size_t j = 0; j < 4; ++j) fired[j] += s[j];
    }
    for (std::size_t j = 0; j < 4; ++j)
        CHECK(std::abs(st.membrane[j] - (total[j] - 0.9 * static_cast<double>(fired[j]))) <=
              1e-9);
}

TEST_CASE("input trace decays and increments") {
    LifState st = LifState::make(1, 1.0, 2, 5.0);
    lif_trace_step(st, {1, 0});
    CHECK(st.trace[0] == 1.0);
    CHECK(st.trace[1] == 0.0);
    lif_trace_step(st, {0, 1});
    CHECK(st.trace[0] == doctest::Approx(std::exp(-1.0 / 5.0)).epsilon(1e-12));
    CHECK(st.trace[1] == 1.0);
}

TEST_CASE("spiking conv: one strong synapse relays a single spike") {
    SpikeTrain in(1, 8);
    in.set(0, 3, 1);
    Tensor w = Tensor::from({1, 1, 1, 1}, {1.2});
    ConvSpec spec{1, 1, 1, 1, 0};
    SpikingConvResult r = spiking_conv_forward(in, {1, 1, 1}, w, spec, 1.0);
    CHECK(r.output.total_spikes() == 1);
    CHECK(r.output.get(0, 3) == 1);
    CHECK(r.activity == doctest::Approx(1.0 / 8.0));
}

TEST_CASE("spiking conv: no input spikes means no output spikes") {
    SpikeTrain in(3 * 4 * 4, 16);
    Rng rng(5);
    Tensor w = uniform_tensor({2, 3, 3, 3}, -1.0, 1.0, rng);
    ConvSpec spec{3, 2, 3, 1, 1};
    SpikingConvResult r = spiking_conv_forward(in, {3, 4, 4}, w, spec, 1.0);
    CHECK(r.output.total_spikes() == 0);
    CHECK(r.activity == 0.0);
}

TEST_CASE("spiking conv outputs are binary and reset-isolated") {
    Rng rng(21);
    Tensor values = uniform_tensor({2, 5, 5}, 0.0, 1.0, rng);
    SpikeTrain in = encode_rate(values, 32, RateCoding::Periodic);
    Tensor w = uniform_tensor({3, 2, 3, 3}, -0.5, 0.5, rng);
    ConvSpec spec{2, 3, 3, 1, 1};
    SpikingConvResult a = spiking_conv_forward(in, {2, 5, 5}, w, spec, 1.0);
    SpikingConvResult b = spiking_conv_forward(in, {2, 5, 5}, w, spec, 1.0);
    CHECK(a.output.events == b.output.events); // no state leak across calls
    for (std::uint8_t e : a.output.events) CHECK((e == 0 || e == 1));
}

TEST_CASE("spiking conv decoded rates track the dense oracle") {
    // non-negative weights, T = 256: decoded rates approximate
    // min(1, conv(rates)/v_th)
    double total_err = 0.0;
    std::size_t count = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Rng rng(seed);
        Tensor values = uniform_tensor({2, 6, 6}, 0.0, 1.0, rng);
        Tensor w = uniform_tensor({3, 2, 3, 3}, 0.0, 0.25, rng);
        ConvSpec spec{2, 3, 3, 1, 1};
        const double v_th = 1.0;
        SpikeTrain in = encode_rate(values, 256, RateCoding::Periodic);
        SpikingConvResult r = spiking_conv_forward(in, {2, 6, 6}, w, spec, v_th);

        Tensor dense = conv2d_forward(values, w, Tensor({3}), spec);
        for (std::size_t j = 0; j < dense.numel(); ++j) {
            const double expect = std::clamp(dense.data[j] / v_th, 0.0, 1.0);
            total_err += std::abs(r.output.decode_rate(j) - expect);
            ++count;
        }
    }
    CHECK(total_err / static_cast<double>(count) < 0.1);
}

TEST_CASE("spiking conv monotonicity: extra input spikes never reduce output") {
    Rng rng(33);
    Tensor values = uniform_tensor({1, 5, 5}, 0.0, 0.6, rng);
    Tensor w = uniform_tensor({2, 1, 3, 3}, 0.0, 0.3, rng);
    ConvSpec spec{1, 2, 3, 1, 1};
    SpikeTrain base = encode_rate(values, 64, RateCoding::Periodic);
    SpikingConvResult r0 = spiking_conv_forward(base, {1, 5, 5}, w, spec, 1.0);

    SpikeTrain more = base;
    std::size_t added = 0;
    for (std::size_t n = 0; n < more.neurons && added < 40; ++n)
        for (std::size_t t = 0; t < more.timesteps && added < 40; ++t)
            if (!more.get(n, t) && rng.uniform() < 0.1) {
                more.set(n, t, 1);
                ++added;
            }
    REQUIRE(added > 0);
    SpikingConvResult r1 = spiking_conv_forward(more, {1, 5, 5}, w, spec, 1.0);
    CHECK(r1.output.total_spikes() >= r0.output.total_spikes());
}

TEST_CASE("spike traces follow the exponential recurrence") {
    SpikeTrain in(1, 5);
    in.set(0, 0, 1);
    in.set(0, 3, 1);
    const double tau = 5.0;
    Tensor tr = spike_traces(in, tau);
    const double d = std::exp(-1.0 / tau);
    CHECK(tr(0, 0) == doctest::Approx(1.0));
    CHECK(tr(0, 1) == doctest::Approx(d));
    CHECK(tr(0, 2) == doctest::Approx(d * d));
    CHECK(tr(0, 3) == doctest::Approx(d * d * d + 1.0));
    CHECK(tr(0, 4) == doctest::Approx((d * d * d + 1.0) * d));
}

TEST_CASE("spike_train_update: zero error leaves weights unchanged") {
    SpikeTrain s(2, 10);
    s.set(0, 1, 1);
    s.set(1, 7, 1);
    Tensor traces({3, 10}, 0.5);
    Tensor w({2, 3}, 0.25);
    Tensor out = spike_train_update(w, s, s, traces, 0.05);
    CHECK(out.data == w.data);
}

TEST_CASE("spike_train_update: unit single-step error moves weight by lr") {
    SpikeTrain target(1, 1);
    target.set(0, 0, 1);
    SpikeTrain output(1, 1);
    Tensor traces = Tensor::from({1, 1}, {1.0});
    Tensor w = Tensor::from({1}, {0.4});
    Tensor out = spike_train_update(w, target, output, traces, 0.05);
    CHECK(out.data[0] == doctest::Approx(0.45).epsilon(1e-15));
}

TEST_CASE("spike_train_update rejects length mismatch") {
    SpikeTrain a(1, 8), b(1, 9);
    Tensor traces({1, 8});
    Tensor w({1});
    CHECK_THROWS_WITH_AS(spike_train_update(w, a, b, traces, 0.1),
                         doctest::Contains("lengths differ"), std::invalid_argument);
}

TEST_CASE("single neuron task converges under the update rule") {
    auto res = testutil::run_single_neuron_task(4242);
    REQUIRE(res.initial > 0);
    CHECK(res.final < res.initial / 10 + (res.initial % 10 ? 1 : 0));
    CHECK(static_cast<double>(res.final) < 0.1 * static_cast<double>(res.initial));
}

TEST_CASE("spiking_conv_update distributes error over shared weights") {
    // one input neuron spiking every step, 1x1 kernel: the update reduces
    // to the dense rule summed over the single position
    SpikeTrain in(1, 4);
    for (std::size_t t = 0; t < 4; ++t) in.set(0, t, 1);
    Tensor traces = spike_traces(in, 5.0);
    SpikeTrain target(1, 4);
    for (std::size_t t = 0; t < 4; ++t) target.set(0, t, 1);
    SpikeTrain output(1, 4); // silent
    Tensor w = Tensor::from({1, 1, 1, 1}, {0.0});
    ConvSpec spec{1, 1, 1, 1, 0};
    Tensor out = spiking_conv_update(w, target, output, traces, {1, 1, 1}, spec, 0.1);
    double expect = 0.0;
    for (std::size_t t = 0; t < 4; ++t) expect += 0.1 * traces(0, t);
    CHECK(out.data[0] == doctest::Approx(expect).epsilon(1e-12));
}

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <cvmux/security.hpp>
#include <cvmux/source_sim.hpp>

#include "test_util.hpp"

using namespace cvmux;

TEST_CASE("spec validation") {
    SourceSpec spec;
    spec.n_pairs = 0;
    CHECK_THROWS_AS(spec.check(), input_error);
    spec.n_pairs = 2;
    spec.squeezing_db = {-1.0};
    CHECK_THROWS_AS(spec.check(), input_error);
    spec.squeezing_db = {3.0, 4.0};
    spec.crosstalk_strength = 1.5;
    CHECK_THROWS_AS(spec.check(), input_error);
    spec.crosstalk_strength = 0.5;
    spec.excess_noise = {0.1, 0.1, 0.1};
    CHECK_THROWS_AS(spec.check(), input_error);
    spec.excess_noise = {0.1};
    CHECK_NOTHROW(spec.check());
}

TEST_CASE("zero squeezing gives vacuum") {
    SourceSpec spec;
    spec.n_pairs = 3;
    spec.squeezing_db = {0.0};
    const auto state = generate_epr_array(spec);
    CHECK((state.matrix - Matrix::Identity(12, 12)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("one pair at V=2 is a pure TMSV") {
    // V = cosh(2r) = 2  <=>  squeezing_db = 20 log10(e) * (1/2) acosh... use
    // the dB value that gives cosh(2r) = 2: r = acosh(2)/2.
    const double r = std::acosh(2.0) / 2.0;
    SourceSpec spec;
    spec.n_pairs = 1;
    spec.squeezing_db = {20.0 * r / std::numbers::ln10};
    const auto state = generate_epr_array(spec);
    CHECK(state.matrix(0, 0) == Catch::Approx(2.0).margin(1e-12));
    CHECK(state.matrix(0, 2) == Catch::Approx(std::sqrt(3.0)).margin(1e-12));
    CHECK(state.matrix(1, 3) == Catch::Approx(-std::sqrt(3.0)).margin(1e-12));
    const auto nu = symplectic_spectrum(state);
    CHECK(nu[0] == Catch::Approx(1.0).margin(1e-10));
    CHECK(nu[1] == Catch::Approx(1.0).margin(1e-10));
}

TEST_CASE("per-pair MI of the array matches the single-pair formula") {
    SourceSpec spec;
    spec.n_pairs = 8;
    spec.squeezing_db = {3.0};
    const auto state = generate_epr_array(spec);
    const auto partition = ModePartition::split_half(16);
    const auto mi = pairwise_mutual_information(state, partition, Quadrature::P);

    const double r = 3.0 * std::numbers::ln10 / 20.0;
    const double v = std::cosh(2.0 * r);
    const double c = std::sinh(2.0 * r);
    const double expected = std::log2(v / (v - c * c / v));
    for (double m : mi.per_pair) CHECK(m == Catch::Approx(expected).margin(1e-12));
    CHECK(mi.total == Catch::Approx(8.0 * expected).margin(1e-12));
}

TEST_CASE("crosstalk at strength zero is the identity, bit for bit") {
    SourceSpec spec;
    spec.n_pairs = 2;
    spec.crosstalk_strength = 0.0;
    const auto state = generate_epr_array(spec);
    const auto out = inject_crosstalk(state, spec);
    CHECK(out.matrix == state.matrix);
}

TEST_CASE("generated states are physical and deterministic") {
    for (auto mode : {SourceSpec::Crosstalk::LocalOnly, SourceSpec::Crosstalk::Global}) {
        SourceSpec spec;
        spec.n_pairs = 4;
        spec.squeezing_db = {2.0, 3.0, 4.0, 5.0};
        spec.crosstalk_mode = mode;
        spec.crosstalk_strength = 0.4;
        spec.excess_noise = {0.05};
        spec.rng_seed = 31415;

        const auto a = simulate_source(spec);
        const auto b = simulate_source(spec);
        CHECK(a.matrix == b.matrix);  // bit identical under the same seed

        const auto report = validate(a);
        CHECK(report.pass);
        CHECK(report.min_symplectic_eigenvalue >= 1.0 - 1e-10);

        SourceSpec other = spec;
        other.rng_seed = 999;
        CHECK(simulate_source(other).matrix != a.matrix);
    }
}

TEST_CASE("crosstalk preserves the symplectic spectrum") {
    SourceSpec spec;
    spec.n_pairs = 3;
    spec.squeezing_db = {4.0};
    spec.crosstalk_strength = 0.7;
    spec.rng_seed = 7;
    const auto clean = generate_epr_array(spec);
    const auto nu_clean = symplectic_spectrum(clean);
    for (auto mode : {SourceSpec::Crosstalk::LocalOnly, SourceSpec::Crosstalk::Global}) {
        spec.crosstalk_mode = mode;
        const auto nu = symplectic_spectrum(inject_crosstalk(clean, spec));
        for (std::size_t i = 0; i < nu.size(); ++i)
            CHECK(nu[i] == Catch::Approx(nu_clean[i]).margin(1e-10));
    }
}

TEST_CASE("excess noise: vacuum plus noise 1 is a two-photon-equivalent thermal state") {
    SourceSpec spec;
    spec.n_pairs = 1;
    spec.squeezing_db = {0.0};
    spec.excess_noise = {1.0};
    const auto state = add_excess_noise(generate_epr_array(spec), spec);
    CHECK(state.matrix == 2.0 * Matrix::Identity(4, 4));
    CHECK(von_neumann_entropy(restrict(state, {0})) == Catch::Approx(g_function(0.5)).margin(1e-12));
}

TEST_CASE("property: excess noise strictly lowers the key at equal squeezing") {
    SourceSpec clean;
    clean.n_pairs = 2;
    clean.squeezing_db = {4.0};
    const auto partition = ModePartition::split_half(4);
    const auto channel = ChannelSpec::uniform(0.4);

    SourceSpec noisy = clean;
    noisy.excess_noise = {0.2};

    const auto k_clean =
        key_rate(generate_epr_array(clean), partition, channel, 0.96, Quadrature::P);
    const auto k_noisy =
        key_rate(add_excess_noise(generate_epr_array(noisy), noisy), partition, channel, 0.96, Quadrature::P);
    CHECK(k_clean.key_rate > 0.0);
    CHECK(k_noisy.key_rate < k_clean.key_rate);
}

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "covariance.hpp"
#include "network.hpp"
#include "rng.hpp"

namespace cvmux {

/// Recipe for synthetic multimode entangled states with controlled squeezing,
/// crosstalk and excess noise. Stands in for the unreleased measured data as
/// a ground-truth oracle: local-only crosstalk is exactly undoable by local
/// networks, global crosstalk is not.
struct SourceSpec {
    enum class Crosstalk { LocalOnly, Global };

    int n_pairs = 1;
    std::vector<double> squeezing_db = {3.0};  // one value broadcast, or one per pair
    Crosstalk crosstalk_mode = Crosstalk::LocalOnly;
    double crosstalk_strength = 0.0;  // in [0,1]; scales each t's deviation from 1
    // Mesh passes per side. Cavity-based sources couple the modes over many
    // round trips, so the crosstalk compounds; one pass of weak couplers
    // stays too close to the identity to emulate that.
    int crosstalk_passes = 4;
    std::vector<double> excess_noise = {};  // empty, one value, or one per mode
    std::uint64_t rng_seed = 0;

    void check() const {
        if (n_pairs < 1) throw input_error("source needs n_pairs >= 1");
        if (squeezing_db.empty() ||
            (squeezing_db.size() != 1 && squeezing_db.size() != static_cast<std::size_t>(n_pairs)))
            throw input_error("squeezing_db needs 1 or n_pairs entries");
        for (double s : squeezing_db)
            if (s < 0.0) throw input_error("squeezing_db must be >= 0");
        if (!(crosstalk_strength >= 0.0 && crosstalk_strength <= 1.0))
            throw input_error("crosstalk_strength must lie in [0,1]");
        if (crosstalk_passes < 1) throw input_error("crosstalk_passes must be >= 1");
        if (!excess_noise.empty() && excess_noise.size() != 1 &&
            excess_noise.size() != static_cast<std::size_t>(2 * n_pairs))
            throw input_error("excess_noise needs 0, 1 or n_modes entries");
        for (double e : excess_noise)
            if (e < 0.0) throw input_error("excess_noise must be >= 0");
    }

    double squeezing_for(int pair) const {
        return squeezing_db.size() == 1 ? squeezing_db.front()
                                        : squeezing_db[static_cast<std::size_t>(pair)];
    }

    double noise_for(int mode) const {
        if (excess_noise.empty()) return 0.0;
        return excess_noise.size() == 1 ? excess_noise.front()
                                        : excess_noise[static_cast<std::size_t>(mode)];
    }
};

/// Direct sum of two-mode squeezed states: pair i couples Alice mode i with
/// Bob mode n_pairs + i. Squeezing s dB gives r = s ln(10)/20, V = cosh 2r,
/// x-correlation +sinh 2r, p-correlation -sinh 2r.
inline CovarianceState generate_epr_array(const SourceSpec& spec) {
    spec.check();
    const int n = 2 * spec.n_pairs;
    Matrix g = Matrix::Identity(2 * n, 2 * n);
    for (int i = 0; i < spec.n_pairs; ++i) {
        const double r = spec.squeezing_for(i) * std::numbers::ln10 / 20.0;
        const double v = std::cosh(2.0 * r);
        const double c = std::sinh(2.0 * r);
        const int a = i;
        const int b = spec.n_pairs + i;
        g(2 * a, 2 * a) = g(2 * a + 1, 2 * a + 1) = v;
        g(2 * b, 2 * b) = g(2 * b + 1, 2 * b + 1) = v;
        g(2 * a, 2 * b) = g(2 * b, 2 * a) = c;
        g(2 * a + 1, 2 * b + 1) = g(2 * b + 1, 2 * a + 1) = -c;
    }
    return CovarianceState(n, std::move(g));
}

namespace detail {

inline std::vector<double> random_transmittances(std::size_t count, double strength,
                                                 std::uint64_t stream_seed) {
    SplitMix64 rng(stream_seed);
    std::vector<double> t(count);
    for (auto& v : t) v = 1.0 - strength * rng.uniform();
    return t;
}

}  // namespace detail

/// Seeded random crosstalk. Local-only mode mixes within Alice's half and
/// within Bob's half using the same network parameterization the decoupler
/// optimizes over, so it is exactly invertible by local operations; global
/// mode mixes across the boundary too. Strength 0 returns the input
/// unchanged (the t=1 network is a sign flip, not the identity).
inline CovarianceState inject_crosstalk(const CovarianceState& state, const SourceSpec& spec) {
    spec.check();
    if (spec.crosstalk_strength == 0.0) return state;

    Matrix g = state.matrix;
    if (spec.crosstalk_mode == SourceSpec::Crosstalk::LocalOnly) {
        const auto partition = ModePartition::split_half(state.n_modes);
        const auto alice_pairs = side_pair_order(partition.alice);
        const auto bob_pairs = side_pair_order(partition.bob);
        for (int pass = 0; pass < spec.crosstalk_passes; ++pass) {
            const auto ta = detail::random_transmittances(
                alice_pairs.size(), spec.crosstalk_strength,
                derive_stream_seed(spec.rng_seed, 0xA11CE00ULL + static_cast<std::uint64_t>(pass)));
            const auto tb = detail::random_transmittances(
                bob_pairs.size(), spec.crosstalk_strength,
                derive_stream_seed(spec.rng_seed, 0xB0B00ULL + static_cast<std::uint64_t>(pass)));
            for (std::size_t k = 0; k < alice_pairs.size(); ++k)
                detail::beamsplitter_inplace(g, alice_pairs[k].first, alice_pairs[k].second, ta[k]);
            for (std::size_t k = 0; k < bob_pairs.size(); ++k)
                detail::beamsplitter_inplace(g, bob_pairs[k].first, bob_pairs[k].second, tb[k]);
        }
        return CovarianceState(state.n_modes, std::move(g), state.labels);
    }

    // Global: passive network over all modes, Reck-style pair order.
    std::vector<int> all_modes(static_cast<std::size_t>(state.n_modes));
    for (int m = 0; m < state.n_modes; ++m) all_modes[static_cast<std::size_t>(m)] = m;
    const auto pairs = side_pair_order(all_modes);
    for (int pass = 0; pass < spec.crosstalk_passes; ++pass) {
        const auto t = detail::random_transmittances(
            pairs.size(), spec.crosstalk_strength,
            derive_stream_seed(spec.rng_seed, 0x61B4100ULL + static_cast<std::uint64_t>(pass)));
        for (std::size_t k = 0; k < pairs.size(); ++k)
            detail::beamsplitter_inplace(g, pairs[k].first, pairs[k].second, t[k]);
    }
    return CovarianceState(state.n_modes, std::move(g), state.labels);
}

/// Adds trusted preparation noise to the diagonal of every mode.
inline CovarianceState add_excess_noise(const CovarianceState& state, const SourceSpec& spec) {
    spec.check();
    Matrix g = state.matrix;
    for (int m = 0; m < state.n_modes; ++m) {
        g(2 * m, 2 * m) += spec.noise_for(m);
        g(2 * m + 1, 2 * m + 1) += spec.noise_for(m);
    }
    return CovarianceState(state.n_modes, std::move(g), state.labels);
}

/// EPR array -> crosstalk -> excess noise.
inline CovarianceState simulate_source(const SourceSpec& spec) {
    return add_excess_noise(inject_crosstalk(generate_epr_array(spec), spec), spec);
}

}  // namespace cvmux

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "covariance.hpp"

namespace cvmux {

/// Pure-loss channel acting on Bob's modes: a transmittance per mode, or one
/// scalar broadcast to all of them.
struct ChannelSpec {
    std::vector<double> transmittance;

    static ChannelSpec uniform(double t) { return ChannelSpec{{t}}; }

    static ChannelSpec from_db(double loss_db) {
        if (loss_db < 0.0) throw input_error("channel loss in dB must be >= 0");
        return uniform(std::pow(10.0, -loss_db / 10.0));
    }

    bool is_uniform() const { return transmittance.size() == 1; }

    double t_for(std::size_t bob_rank) const {
        return is_uniform() ? transmittance.front() : transmittance.at(bob_rank);
    }

    double loss_db(std::size_t bob_rank = 0) const { return -10.0 * std::log10(t_for(bob_rank)); }

    void check(std::size_t n_bob) const {
        if (transmittance.empty())
            throw input_error("channel spec has no transmittance");
        if (!is_uniform() && transmittance.size() != n_bob)
            throw input_error("channel needs 1 or " + std::to_string(n_bob) +
                              " transmittances, got " + std::to_string(transmittance.size()));
        for (double t : transmittance)
            if (!(t > 0.0 && t <= 1.0))
                throw input_error("channel transmittance must lie in (0,1], got " +
                                  std::to_string(t));
    }
};

/// Joint state over A, B' (transmitted) and E (reflected), with bookkeeping
/// for where Eve's modes ended up.
struct DilatedState {
    CovarianceState state;       // original modes first, then one ancilla per Bob mode
    ModePartition partition;     // unchanged; bob now indexes the transmitted modes
    std::vector<int> eve_modes;  // ancilla indices, aligned with partition.bob
};

/// Loss dilation: one vacuum ancilla per Bob mode, coupled by a beam splitter
/// of the channel transmittance. B' carries the transmitted modes, E the
/// reflected ones. Restricted to A and B' this is the usual attenuation map
/// V_B -> T V_B + (1-T) I, C_AB -> sqrt(T) C_AB.
inline DilatedState dilate_loss(const CovarianceState& state, const ModePartition& partition,
                                const ChannelSpec& channel) {
    check_partition(partition, state.n_modes);
    channel.check(partition.bob.size());
    const int n_bob = static_cast<int>(partition.bob.size());
    if (n_bob == 0) throw input_error("loss dilation needs at least one Bob mode");

    CovarianceState joint = embed_vacuum(state, n_bob);
    std::vector<int> eve;
    for (int k = 0; k < n_bob; ++k) {
        const int ancilla = state.n_modes + k;
        joint = apply_beamsplitter(joint, partition.bob[static_cast<std::size_t>(k)], ancilla,
                                   channel.t_for(static_cast<std::size_t>(k)));
        eve.push_back(ancilla);
    }
    return DilatedState{std::move(joint), partition, std::move(eve)};
}

/// Convenience wrapper: dilate, then keep only A and B'.
inline CovarianceState attenuate(const CovarianceState& state, const ModePartition& partition,
                                 const ChannelSpec& channel) {
    const auto dilated = dilate_loss(state, partition, channel);
    std::vector<int> keep(static_cast<std::size_t>(state.n_modes));
    for (int m = 0; m < state.n_modes; ++m) keep[static_cast<std::size_t>(m)] = m;
    return restrict(dilated.state, keep);
}

}  // namespace cvmux

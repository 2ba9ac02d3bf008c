#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "covariance.hpp"

namespace cvmux {

/// Transmittances of the local beam-splitter networks, one per ordered mode
/// pair within each party. The order is the product order of the network
/// definition: for modes (m0 < m1 < ... ) the pairs run (m0,m1), (m0,m2),
/// ..., (m0,mk), (m1,m2), ..., applied first to last.
struct NetworkParams {
    std::vector<double> alice_t;
    std::vector<double> bob_t;

    static std::size_t side_count(std::size_t n_side_modes) {
        return n_side_modes * (n_side_modes - 1) / 2;
    }

    static NetworkParams identity(const ModePartition& partition) {
        NetworkParams p;
        p.alice_t.assign(side_count(partition.alice.size()), 1.0);
        p.bob_t.assign(side_count(partition.bob.size()), 1.0);
        return p;
    }

    std::size_t size() const { return alice_t.size() + bob_t.size(); }
};

/// Pair sequence for one party's network, in application order.
inline std::vector<std::pair<int, int>> side_pair_order(const std::vector<int>& side_modes) {
    std::vector<std::pair<int, int>> pairs;
    const std::size_t n = side_modes.size();
    pairs.reserve(NetworkParams::side_count(n));
    for (std::size_t i = 0; i + 1 < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            pairs.emplace_back(side_modes[i], side_modes[j]);
    return pairs;
}

inline void check_network_params(const NetworkParams& params, const ModePartition& partition) {
    if (params.alice_t.size() != NetworkParams::side_count(partition.alice.size()))
        throw std::invalid_argument("alice network needs " +
                                    std::to_string(NetworkParams::side_count(partition.alice.size())) +
                                    " transmittances, got " + std::to_string(params.alice_t.size()));
    if (params.bob_t.size() != NetworkParams::side_count(partition.bob.size()))
        throw std::invalid_argument("bob network needs " +
                                    std::to_string(NetworkParams::side_count(partition.bob.size())) +
                                    " transmittances, got " + std::to_string(params.bob_t.size()));
    for (double t : params.alice_t)
        if (!(t >= 0.0 && t <= 1.0))
            throw std::invalid_argument("alice transmittance out of [0,1]: " + std::to_string(t));
    for (double t : params.bob_t)
        if (!(t >= 0.0 && t <= 1.0))
            throw std::invalid_argument("bob transmittance out of [0,1]: " + std::to_string(t));
}

namespace detail {

// In-place beam splitter congruence on a raw matrix; same convention as
// apply_beamsplitter. Kept separate so network application avoids one state
// copy per factor.
inline void beamsplitter_inplace(Matrix& g, int i, int j, double t) {
    const double a = std::sqrt(t);
    const double b = std::sqrt(1.0 - t);
    Eigen::Matrix<double, 2, Eigen::Dynamic> ri = g.middleRows(2 * i, 2);
    Eigen::Matrix<double, 2, Eigen::Dynamic> rj = g.middleRows(2 * j, 2);
    g.middleRows(2 * i, 2) = a * ri + b * rj;
    g.middleRows(2 * j, 2) = b * ri - a * rj;
    Eigen::Matrix<double, Eigen::Dynamic, 2> ci = g.middleCols(2 * i, 2);
    Eigen::Matrix<double, Eigen::Dynamic, 2> cj = g.middleCols(2 * j, 2);
    g.middleCols(2 * i, 2) = a * ci + b * cj;
    g.middleCols(2 * j, 2) = b * ci - a * cj;
}

}  // namespace detail

/// Applies Alice's beam-splitter network followed by Bob's. No factor ever
/// couples an Alice mode to a Bob mode, so the transform is local by
/// construction (the two products commute).
inline CovarianceState apply_network(const CovarianceState& state, const ModePartition& partition,
                                     const NetworkParams& params) {
    check_partition(partition, state.n_modes);
    check_network_params(params, partition);

    Matrix g = state.matrix;
    std::size_t k = 0;
    for (auto [i, j] : side_pair_order(partition.alice))
        detail::beamsplitter_inplace(g, i, j, params.alice_t[k++]);
    k = 0;
    for (auto [i, j] : side_pair_order(partition.bob))
        detail::beamsplitter_inplace(g, i, j, params.bob_t[k++]);

    return CovarianceState(state.n_modes, std::move(g), state.labels);
}

}  // namespace cvmux

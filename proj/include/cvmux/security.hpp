#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "channel.hpp"
#include "covariance.hpp"
#include "log.hpp"

namespace cvmux {

/// G(x) = (x+1) log2(x+1) - x log2 x, the bosonic entropy function.
/// Vanishes at x = 0 (vacuum) and is strictly increasing. Small negative
/// inputs (numerical noise from conditional states) are clamped to zero;
/// anything below -tol signals an unphysical state upstream.
inline double g_function(double x, double tol = 1e-9) {
    if (x < -tol)
        throw unphysical_state_error("g_function called with x = " + std::to_string(x) +
                                         " < -" + std::to_string(tol),
                                     2.0 * x + 1.0);
    if (x <= 0.0) return 0.0;
    return (x + 1.0) * std::log2(x + 1.0) - x * std::log2(x);
}

/// Von Neumann entropy in bits: sum of G((nu_i - 1)/2) over the symplectic
/// spectrum. Eigenvalues within clamp_tol below 1 are clamped to 1 (the
/// pessimistic adjustment can leave matrices marginally unphysical); lower
/// values raise unphysical_state_error carrying the offender.
inline double von_neumann_entropy(const CovarianceState& state, double clamp_tol = 1e-6) {
    double entropy = 0.0;
    for (double nu : symplectic_spectrum(state)) {
        if (nu < 1.0 - clamp_tol)
            throw unphysical_state_error(
                "entropy of an unphysical state: symplectic eigenvalue " + std::to_string(nu), nu);
        if (nu < 1.0) {
            if (1.0 - nu > 1e-9)
                log_warn("clamping symplectic eigenvalue " + std::to_string(nu) + " to 1");
            nu = 1.0;
        }
        entropy += g_function((nu - 1.0) / 2.0);
    }
    return entropy;
}

struct PairwiseMi {
    std::vector<double> per_pair;  // bits per multimode channel use
    double total = 0.0;
};

/// Mutual information per key pair in the chosen quadrature:
/// I = log2(V_A / (V_A - C^2 / V_B)), summed over the pairing.
inline PairwiseMi pairwise_mutual_information(const CovarianceState& state,
                                              const ModePartition& partition,
                                              Quadrature quadrature) {
    check_partition(partition, state.n_modes);
    PairwiseMi result;
    for (auto [a, b] : partition.pairing) {
        const double va = state.matrix(qindex(a, quadrature), qindex(a, quadrature));
        const double vb = state.matrix(qindex(b, quadrature), qindex(b, quadrature));
        const double c = state.matrix(qindex(a, quadrature), qindex(b, quadrature));
        if (vb <= 0.0 || va <= 0.0)
            throw numerical_error("non-positive variance in pair (" + std::to_string(a) + "," +
                                  std::to_string(b) + ")");
        if (c * c >= va * vb)
            throw numerical_error("correlation exceeds the physical bound in pair (" +
                                  std::to_string(a) + "," + std::to_string(b) + ")");
        const double mi = (c == 0.0) ? 0.0 : std::log2(va / (va - c * c / vb));
        result.per_pair.push_back(mi);
        result.total += mi;
    }
    return result;
}

/// Holevo bound chi_BE = S(E) - S(E|B) for the reflected-mode eavesdropper.
/// E is read off the loss dilation; S(E|B) conditions jointly on homodyne
/// outcomes of all transmitted Bob modes in the same quadrature used for the
/// key. Values in [-1e-9, 0) are numerical noise and floored at 0.
inline double holevo_bound(const CovarianceState& state, const ModePartition& partition,
                           const ChannelSpec& channel, Quadrature quadrature) {
    const auto dilated = dilate_loss(state, partition, channel);

    const double s_e = von_neumann_entropy(restrict(dilated.state, dilated.eve_modes));

    CovarianceState conditioned = [&] {
        try {
            return condition_on_homodyne(dilated.state, dilated.partition.bob, quadrature);
        } catch (const numerical_error& e) {
            throw numerical_error(std::string("conditioning Eve on Bob's homodyne failed: ") +
                                  e.what());
        }
    }();

    // Positions of the Eve modes after the Bob modes were removed.
    std::vector<int> eve_positions;
    for (int eve_mode : dilated.eve_modes) {
        int pos = eve_mode;
        for (int bob_mode : dilated.partition.bob)
            if (bob_mode < eve_mode) --pos;
        eve_positions.push_back(pos);
    }
    const double s_e_given_b = von_neumann_entropy(restrict(conditioned, eve_positions));

    const double chi = s_e - s_e_given_b;
    if (chi < -1e-9)
        throw numerical_error("Holevo bound came out negative (" + std::to_string(chi) +
                              "), indicating a numerical or modelling fault");
    return std::max(0.0, chi);
}

/// Statistical error model: the covariance matrix was estimated from
/// n_samples measurements. asymptotic() marks the infinite-measurement
/// limit, where the adjustment vanishes identically.
struct ErrorModel {
    std::int64_t n_samples;

    static constexpr std::int64_t kAsymptotic = std::numeric_limits<std::int64_t>::max();
    static ErrorModel asymptotic() { return ErrorModel{kAsymptotic}; }
    bool is_asymptotic() const { return n_samples == kAsymptotic; }
};

/// Lower bound on the key: K = max(0, beta * I_AB - chi_BE).
struct KeyRateReport {
    std::vector<double> per_pair_mi;
    double total_mi = 0.0;
    double holevo = 0.0;
    double beta = 1.0;
    double key_rate = 0.0;
    Quadrature quadrature = Quadrature::P;
    ChannelSpec channel;
    std::vector<std::pair<int, int>> pairing;
    std::optional<std::int64_t> pessimistic_n;  // set when the input was adjusted
};

/// Evaluates the key rate of `state` sent through `channel`: mutual
/// information on the attenuated state, Holevo bound from the dilation.
inline KeyRateReport key_rate(const CovarianceState& state, const ModePartition& partition,
                              const ChannelSpec& channel, double beta, Quadrature quadrature) {
    if (!(beta > 0.0 && beta <= 1.0))
        throw input_error("post-processing efficiency beta must lie in (0,1], got " +
                          std::to_string(beta));
    const auto received = attenuate(state, partition, channel);
    const auto mi = pairwise_mutual_information(received, partition, quadrature);
    const double chi = holevo_bound(state, partition, channel, quadrature);

    KeyRateReport report;
    report.per_pair_mi = mi.per_pair;
    report.total_mi = mi.total;
    report.holevo = chi;
    report.beta = beta;
    report.key_rate = std::max(0.0, beta * mi.total - chi);
    report.quadrature = quadrature;
    report.channel = channel;
    report.pairing = partition.pairing;
    return report;
}

/// Worst-case covariance compatible with the standard error after N
/// measurements: variances grow by sqrt(2) V / sqrt(N+1), correlation
/// magnitudes shrink by sqrt(V_i V_j + C^2) / sqrt(N+1), floored at zero so
/// the adjustment never flips a sign (that would be anti-pessimistic for the
/// mutual information). The output may be slightly unphysical; entropy
/// computations apply their own clamping.
inline CovarianceState pessimistic_adjust(const CovarianceState& state, const ErrorModel& err) {
    if (err.n_samples < 2) throw input_error("error model needs at least N = 2 samples");
    if (err.is_asymptotic()) return state;
    const double f = 1.0 / std::sqrt(static_cast<double>(err.n_samples) + 1.0);
    const Matrix& g = state.matrix;
    const int d = state.dim();

    Matrix adjusted(d, d);
    for (int i = 0; i < d; ++i)
        adjusted(i, i) = g(i, i) + std::sqrt(2.0) * g(i, i) * f;
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
            const double c = g(i, j);
            const double sigma = std::sqrt(std::max(0.0, g(i, i) * g(j, j)) + c * c) * f;
            const double shrunk = std::copysign(std::max(0.0, std::abs(c) - sigma), c);
            adjusted(i, j) = shrunk;
            adjusted(j, i) = shrunk;
        }
    return CovarianceState(state.n_modes, std::move(adjusted), state.labels);
}

}  // namespace cvmux

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "decoupler.hpp"
#include "security.hpp"

namespace cvmux {

struct RankedPair {
    int alice_mode = 0;
    int bob_mode = 0;
    double key_rate = 0.0;
    double mutual_information = 0.0;
    double holevo = 0.0;
};

namespace detail {

inline ChannelSpec channel_for_bob_subset(const ChannelSpec& channel,
                                          const std::vector<int>& bob_ranks) {
    if (channel.is_uniform()) return channel;
    ChannelSpec sub;
    for (int r : bob_ranks) sub.transmittance.push_back(channel.t_for(static_cast<std::size_t>(r)));
    return sub;
}

inline int bob_rank(const ModePartition& partition, int bob_mode) {
    const auto it = std::find(partition.bob.begin(), partition.bob.end(), bob_mode);
    return static_cast<int>(it - partition.bob.begin());
}

}  // namespace detail

/// Per-pair key rates computed in isolation: each pair's reduced two-mode
/// state is sent through its channel transmittance on its own, so crosstalk
/// correlations with excluded modes appear as excess noise. Descending by key
/// rate, ties broken by the lower Alice mode index.
inline std::vector<RankedPair> rank_pairs(const CovarianceState& state,
                                          const ModePartition& partition,
                                          const ChannelSpec& channel, double beta,
                                          Quadrature quadrature) {
    check_partition(partition, state.n_modes);
    channel.check(partition.bob.size());

    std::vector<RankedPair> ranked;
    for (auto [a, b] : partition.pairing) {
        const auto reduced = restrict(state, {a, b});
        ModePartition single;
        single.alice = {0};
        single.bob = {1};
        single.pairing = {{0, 1}};
        const ChannelSpec sub =
            detail::channel_for_bob_subset(channel, {detail::bob_rank(partition, b)});
        const auto report = key_rate(reduced, single, sub, beta, quadrature);
        ranked.push_back({a, b, report.key_rate, report.total_mi, report.holevo});
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const RankedPair& x, const RankedPair& y) {
        if (x.key_rate != y.key_rate) return x.key_rate > y.key_rate;
        return x.alice_mode < y.alice_mode;
    });
    return ranked;
}

/// One series of key rates (or any scalar) against a common axis.
struct SweepSeries {
    std::string variant;
    std::vector<double> values;
};

struct SweepResult {
    std::string axis_label;
    std::vector<double> axis;
    std::vector<SweepSeries> series;

    const SweepSeries* find(const std::string& variant) const {
        for (const auto& s : series)
            if (s.variant == variant) return &s;
        return nullptr;
    }
};

struct IncrementalOptions {
    bool decoupled = false;                    // also compute the optimized variant
    std::vector<std::int64_t> pessimistic_n;   // finite-size variants per base curve
    OptimizerConfig optimizer;                 // used when decoupled is set
};

struct IncrementalCurves {
    SweepResult key;     // key rate vs number of pairs, all variants
    SweepResult mi;      // mutual information vs pairs (asymptotic variants)
    SweepResult holevo;  // Holevo bound vs pairs (asymptotic variants)
    std::vector<RankedPair> ranking_original;
    std::vector<RankedPair> ranking_decoupled;  // empty unless decoupled
};

namespace detail {

struct IncrementalBase {
    std::string tag;
    const CovarianceState* state;
    std::vector<RankedPair> ranking;
};

// Key-rate curve over top-k restrictions of one base state.
inline void incremental_for_base(const IncrementalBase& base, const ModePartition& partition,
                                 const ChannelSpec& channel, double beta, Quadrature quadrature,
                                 const std::vector<std::int64_t>& pessimistic_n,
                                 IncrementalCurves& out) {
    const std::size_t n_pairs = base.ranking.size();
    SweepSeries key{base.tag, {}};
    SweepSeries mi{base.tag, {}};
    SweepSeries holevo{base.tag, {}};
    std::vector<SweepSeries> pess;
    for (std::int64_t n : pessimistic_n)
        pess.push_back({base.tag + "_pessimistic_" + std::to_string(n), {}});

    for (std::size_t k = 1; k <= n_pairs; ++k) {
        std::vector<int> modes;
        for (std::size_t i = 0; i < k; ++i) {
            modes.push_back(base.ranking[i].alice_mode);
            modes.push_back(base.ranking[i].bob_mode);
        }
        std::sort(modes.begin(), modes.end());
        auto position = [&](int mode) {
            return static_cast<int>(std::find(modes.begin(), modes.end(), mode) - modes.begin());
        };
        ModePartition sub;
        std::vector<int> bob_ranks;  // aligned with sub.bob (ascending mode order)
        for (std::size_t i = 0; i < k; ++i)
            sub.pairing.emplace_back(position(base.ranking[i].alice_mode),
                                     position(base.ranking[i].bob_mode));
        for (int m : modes) {
            const bool is_alice = std::find(partition.alice.begin(), partition.alice.end(), m) !=
                                  partition.alice.end();
            (is_alice ? sub.alice : sub.bob).push_back(position(m));
            if (!is_alice) bob_ranks.push_back(bob_rank(partition, m));
        }
        const auto restricted = restrict(*base.state, modes);
        const auto sub_channel = channel_for_bob_subset(channel, bob_ranks);

        const auto report = key_rate(restricted, sub, sub_channel, beta, quadrature);
        key.values.push_back(report.key_rate);
        mi.values.push_back(report.total_mi);
        holevo.values.push_back(report.holevo);
        for (std::size_t pi = 0; pi < pessimistic_n.size(); ++pi) {
            const auto adjusted = pessimistic_adjust(restricted, ErrorModel{pessimistic_n[pi]});
            const auto pr = key_rate(adjusted, sub, sub_channel, beta, quadrature);
            pess[pi].values.push_back(pr.key_rate);
        }
    }

    out.key.series.push_back(std::move(key));
    out.mi.series.push_back(std::move(mi));
    out.holevo.series.push_back(std::move(holevo));
    for (auto& p : pess) out.key.series.push_back(std::move(p));
}

}  // namespace detail

/// Fig.-2-style study: rank pairs, then report the key rate (and MI / Holevo
/// decomposition) of the top-k restriction for k = 1..n_pairs. The decoupled
/// variant optimizes the network once on the full state, re-ranks on the
/// transformed state, and restricts that.
inline IncrementalCurves incremental_key_curve(const CovarianceState& state,
                                               const ModePartition& partition,
                                               const ChannelSpec& channel, double beta,
                                               Quadrature quadrature,
                                               const IncrementalOptions& options = {}) {
    IncrementalCurves out;
    const std::size_t n_pairs = partition.pairing.size();
    out.key.axis_label = out.mi.axis_label = out.holevo.axis_label = "pairs";
    for (std::size_t k = 1; k <= n_pairs; ++k) {
        out.key.axis.push_back(static_cast<double>(k));
        out.mi.axis.push_back(static_cast<double>(k));
        out.holevo.axis.push_back(static_cast<double>(k));
    }

    out.ranking_original = rank_pairs(state, partition, channel, beta, quadrature);
    detail::incremental_for_base({"original", &state, out.ranking_original}, partition, channel,
                                 beta, quadrature, options.pessimistic_n, out);

    if (options.decoupled) {
        const auto search = basin_hop(state, partition, options.optimizer);
        const auto transformed = apply_network(state, partition, search.best_params);
        out.ranking_decoupled = rank_pairs(transformed, partition, channel, beta, quadrature);
        detail::incremental_for_base({"decoupled", &transformed, out.ranking_decoupled}, partition,
                                     channel, beta, quadrature, options.pessimistic_n, out);
    }
    return out;
}

struct LossSweepOptions {
    bool decoupled = false;
    OptimizerConfig optimizer;
};

struct LossSweepResult {
    SweepResult key;                          // key rate vs loss (dB)
    std::map<std::string, double> cutoff_db;  // largest dB with K > 0, interpolated
};

/// Fig.-3-style study: key rate against channel loss in dB, for the original
/// and optionally the once-decoupled state. The cutoff interpolates the
/// secret-key margin beta*I - chi linearly between the bracketing grid
/// points; when the key is still positive at the end of the grid the last
/// abscissa is reported.
inline LossSweepResult loss_sweep(const CovarianceState& state, const ModePartition& partition,
                                  double beta, Quadrature quadrature,
                                  const std::vector<double>& db_grid,
                                  const LossSweepOptions& options = {}) {
    if (db_grid.size() < 2) throw input_error("loss sweep needs at least two grid points");
    for (std::size_t i = 0; i < db_grid.size(); ++i) {
        if (db_grid[i] < 0.0) throw input_error("loss grid must be non-negative dB");
        if (i > 0 && db_grid[i] <= db_grid[i - 1])
            throw input_error("loss grid must be strictly ascending");
    }

    LossSweepResult out;
    out.key.axis_label = "loss_db";
    out.key.axis = db_grid;

    std::vector<std::pair<std::string, const CovarianceState*>> bases;
    bases.emplace_back("original", &state);
    CovarianceState transformed;
    if (options.decoupled) {
        const auto search = basin_hop(state, partition, options.optimizer);
        transformed = apply_network(state, partition, search.best_params);
        bases.emplace_back("decoupled", &transformed);
    }

    for (const auto& [tag, base] : bases) {
        SweepSeries series{tag, {}};
        std::vector<double> margins;
        for (double db : db_grid) {
            const auto report =
                key_rate(*base, partition, ChannelSpec::from_db(db), beta, quadrature);
            series.values.push_back(report.key_rate);
            margins.push_back(beta * report.total_mi - report.holevo);
        }

        double cutoff = std::numeric_limits<double>::quiet_NaN();
        for (std::size_t i = 0; i < margins.size(); ++i) {
            if (margins[i] <= 0.0) {
                if (i == 0) break;
                const double m0 = margins[i - 1], m1 = margins[i];
                cutoff = db_grid[i - 1] + (db_grid[i] - db_grid[i - 1]) * m0 / (m0 - m1);
                break;
            }
            cutoff = db_grid[i];  // still positive; keep the last positive abscissa
        }
        out.cutoff_db[tag] = cutoff;
        out.key.series.push_back(std::move(series));
    }
    return out;
}

/// Two-sided Student-t quantile at the given confidence level, computed via
/// the regularized incomplete beta inverse (Boost.Math), so any (df,
/// confidence) pair is supported.
inline double student_t_two_sided_quantile(int degrees_of_freedom, double confidence) {
    if (degrees_of_freedom < 1) throw input_error("Student-t needs df >= 1");
    if (!(confidence > 0.0 && confidence < 1.0))
        throw input_error("confidence must lie in (0,1)");
    const boost::math::students_t_distribution<double> dist(degrees_of_freedom);
    return boost::math::quantile(dist, 0.5 + confidence / 2.0);
}

/// Ordinary least squares K(x) = a + b x with prediction bands
/// K(x) +- t sqrt(s^2 + X Cov X^T).
struct FitResult {
    double a = 0.0;  // intercept
    double b = 0.0;  // slope
    Eigen::Matrix2d cov_ab = Eigen::Matrix2d::Zero();
    double s2 = 0.0;  // mean squared error of the residuals
    double t_quantile = 0.0;
    int n_points = 0;
    double confidence = 0.0;

    double predict(double x) const { return a + b * x; }

    double band_halfwidth(double x) const {
        const Eigen::Vector2d design(1.0, x);
        return t_quantile * std::sqrt(s2 + design.dot(cov_ab * design));
    }

    double lower(double x) const { return predict(x) - band_halfwidth(x); }
    double upper(double x) const { return predict(x) + band_halfwidth(x); }
};

inline FitResult linear_fit_prediction_bands(const std::vector<std::pair<double, double>>& points,
                                             double confidence) {
    const int n = static_cast<int>(points.size());
    if (n < 3) throw input_error("linear fit needs at least 3 points");

    Eigen::MatrixXd design(n, 2);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        design(i, 0) = 1.0;
        design(i, 1) = points[static_cast<std::size_t>(i)].first;
        y[i] = points[static_cast<std::size_t>(i)].second;
    }
    const Eigen::Matrix2d xtx = design.transpose() * design;
    // Degenerate abscissae make X^T X singular.
    if (std::abs(xtx.determinant()) <= 1e-12 * xtx.norm() * xtx.norm())
        throw input_error("linear fit is degenerate: abscissae are (nearly) identical");

    const Eigen::Matrix2d xtx_inv = xtx.inverse();
    const Eigen::Vector2d coef = xtx_inv * design.transpose() * y;
    const Eigen::VectorXd residuals = y - design * coef;

    FitResult fit;
    fit.a = coef[0];
    fit.b = coef[1];
    fit.n_points = n;
    fit.confidence = confidence;
    fit.s2 = residuals.squaredNorm() / static_cast<double>(n - 2);
    fit.cov_ab = fit.s2 * xtx_inv;
    fit.t_quantile = student_t_two_sided_quantile(n - 2, confidence);
    return fit;
}

/// Achieved total key over the perfect-multiplexing bound of n_pairs times
/// the best single pair.
inline double decoupling_efficiency(double total_key, double best_single_pair_key, int n_pairs) {
    if (n_pairs < 1) throw input_error("decoupling efficiency needs n_pairs >= 1");
    if (!(best_single_pair_key > 0.0))
        throw input_error("decoupling efficiency is undefined for a zero best-pair key");
    return total_key / (static_cast<double>(n_pairs) * best_single_pair_key);
}

}  // namespace cvmux

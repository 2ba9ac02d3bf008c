#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <deque>
#include <future>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "covariance.hpp"
#include "network.hpp"
#include "rng.hpp"
#include "security.hpp"

namespace cvmux {

enum class ObjectiveQuadrature { X, P, Sum };

inline const char* objective_quadrature_name(ObjectiveQuadrature q) {
    switch (q) {
        case ObjectiveQuadrature::X: return "x";
        case ObjectiveQuadrature::P: return "p";
        default: return "sum";
    }
}

struct OptimizerConfig {
    enum class Objective { TotalMi, SinglePairMi };

    Objective objective = Objective::TotalMi;
    int pair_index = 0;  // used by SinglePairMi
    ObjectiveQuadrature quadrature = ObjectiveQuadrature::P;
    int max_local_iterations = 300;
    double gradient_step = 1e-6;    // central finite-difference step
    double convergence_tol = 1e-10;  // on objective change
    int hops = 20;
    double hop_scale = 0.3;  // perturbation magnitude on t
    std::uint64_t rng_seed = 0;
    int parallel_restarts = 1;
    int lbfgs_memory = 10;

    void check(const ModePartition& partition) const {
        if (!(gradient_step > 0.0 && gradient_step <= 1e-2))
            throw input_error("gradient_step must lie in (0, 1e-2]");
        if (!(hop_scale > 0.0 && hop_scale <= 1.0))
            throw input_error("hop_scale must lie in (0, 1]");
        if (hops < 1) throw input_error("basin hopping needs hops >= 1");
        if (max_local_iterations < 1) throw input_error("max_local_iterations must be >= 1");
        if (parallel_restarts < 1) throw input_error("parallel_restarts must be >= 1");
        if (convergence_tol < 0.0) throw input_error("convergence_tol must be >= 0");
        if (objective == Objective::SinglePairMi &&
            (pair_index < 0 || pair_index >= static_cast<int>(partition.pairing.size())))
            throw input_error("pair index " + std::to_string(pair_index) +
                              " out of range for the pairing");
    }
};

namespace detail {

inline Vector pack_params(const NetworkParams& p) {
    Vector v(static_cast<Eigen::Index>(p.size()));
    Eigen::Index k = 0;
    for (double t : p.alice_t) v[k++] = t;
    for (double t : p.bob_t) v[k++] = t;
    return v;
}

inline NetworkParams unpack_params(const Vector& v, const ModePartition& partition) {
    NetworkParams p;
    const std::size_t na = NetworkParams::side_count(partition.alice.size());
    const std::size_t nb = NetworkParams::side_count(partition.bob.size());
    p.alice_t.resize(na);
    p.bob_t.resize(nb);
    for (std::size_t i = 0; i < na; ++i) p.alice_t[i] = v[static_cast<Eigen::Index>(i)];
    for (std::size_t i = 0; i < nb; ++i) p.bob_t[i] = v[static_cast<Eigen::Index>(na + i)];
    return p;
}

// In-place beam splitter congruence from the amplitude pair (a, b) with
// a^2 + b^2 = 1; equals beamsplitter_inplace at a = sqrt(t), b = sqrt(1-t).
inline void beamsplitter_amp_inplace(Matrix& g, int i, int j, double a, double b) {
    Eigen::Matrix<double, 2, Eigen::Dynamic> ri = g.middleRows(2 * i, 2);
    Eigen::Matrix<double, 2, Eigen::Dynamic> rj = g.middleRows(2 * j, 2);
    g.middleRows(2 * i, 2) = a * ri + b * rj;
    g.middleRows(2 * j, 2) = b * ri - a * rj;
    Eigen::Matrix<double, Eigen::Dynamic, 2> ci = g.middleCols(2 * i, 2);
    Eigen::Matrix<double, Eigen::Dynamic, 2> cj = g.middleCols(2 * j, 2);
    g.middleCols(2 * i, 2) = a * ci + b * cj;
    g.middleCols(2 * j, 2) = b * ci - a * cj;
}

// Objective evaluation context reused across many calls.
//
// The optimizer works on the mixing angles theta with t = sin^2(theta),
// theta in [0, pi/2]. The map is a bijection onto t in [0, 1], and the
// transformed covariance is analytic in theta on the closed box, whereas in
// t the amplitudes sqrt(t), sqrt(1-t) have square-root cusps at the bounds
// (where the default all-t=1 start sits), which wrecks finite-difference
// quasi-Newton steps.
struct ObjectiveContext {
    const CovarianceState& state;
    const ModePartition& partition;
    const OptimizerConfig& config;
    std::vector<std::pair<int, int>> bs_order;  // alice pairs then bob pairs

    static constexpr double kThetaMax = 1.5707963267948966;  // pi/2

    ObjectiveContext(const CovarianceState& s, const ModePartition& part,
                     const OptimizerConfig& cfg)
        : state(s), partition(part), config(cfg) {
        const auto alice = side_pair_order(part.alice);
        const auto bob = side_pair_order(part.bob);
        bs_order = alice;
        bs_order.insert(bs_order.end(), bob.begin(), bob.end());
    }

    double pair_mi(const Matrix& g, int a, int b, Quadrature q) const {
        const double va = g(qindex(a, q), qindex(a, q));
        const double vb = g(qindex(b, q), qindex(b, q));
        const double c = g(qindex(a, q), qindex(b, q));
        if (va <= 0.0 || vb <= 0.0 || c * c >= va * vb)
            return std::numeric_limits<double>::quiet_NaN();
        if (c == 0.0) return 0.0;
        return std::log2(va / (va - c * c / vb));
    }

    double evaluate_transformed(const Matrix& g) const {
        auto mi_in = [&](Quadrature q) {
            if (config.objective == OptimizerConfig::Objective::SinglePairMi) {
                const auto [a, b] = partition.pairing[static_cast<std::size_t>(config.pair_index)];
                return pair_mi(g, a, b, q);
            }
            double total = 0.0;
            for (auto [a, b] : partition.pairing) total += pair_mi(g, a, b, q);
            return total;
        };
        switch (config.quadrature) {
            case ObjectiveQuadrature::X: return mi_in(Quadrature::X);
            case ObjectiveQuadrature::P: return mi_in(Quadrature::P);
            default: return mi_in(Quadrature::X) + mi_in(Quadrature::P);
        }
    }

    double evaluate(const Vector& t) const {
        Matrix g = state.matrix;
        for (std::size_t k = 0; k < bs_order.size(); ++k)
            beamsplitter_inplace(g, bs_order[k].first, bs_order[k].second,
                                 t[static_cast<Eigen::Index>(k)]);
        return evaluate_transformed(g);
    }

    double evaluate_theta(const Vector& theta) const {
        Matrix g = state.matrix;
        for (std::size_t k = 0; k < bs_order.size(); ++k) {
            const double th = theta[static_cast<Eigen::Index>(k)];
            beamsplitter_amp_inplace(g, bs_order[k].first, bs_order[k].second, std::sin(th),
                                     std::cos(th));
        }
        return evaluate_transformed(g);
    }

    // Central finite differences in t; the stencil shifts inward at bounds.
    Vector gradient(const Vector& t, double step) const {
        Vector g(t.size());
        Vector probe = t;
        for (Eigen::Index i = 0; i < t.size(); ++i) {
            const double hi = std::min(t[i] + step, 1.0);
            const double lo = std::max(t[i] - step, 0.0);
            probe[i] = hi;
            const double f_hi = evaluate(probe);
            probe[i] = lo;
            const double f_lo = evaluate(probe);
            probe[i] = t[i];
            g[i] = (f_hi - f_lo) / (hi - lo);
        }
        return g;
    }

    // Central finite differences in theta.
    Vector gradient_theta(const Vector& theta, double step) const {
        Vector g(theta.size());
        Vector probe = theta;
        for (Eigen::Index i = 0; i < theta.size(); ++i) {
            const double hi = std::min(theta[i] + step, kThetaMax);
            const double lo = std::max(theta[i] - step, 0.0);
            probe[i] = hi;
            const double f_hi = evaluate_theta(probe);
            probe[i] = lo;
            const double f_lo = evaluate_theta(probe);
            probe[i] = theta[i];
            g[i] = (f_hi - f_lo) / (hi - lo);
        }
        return g;
    }
};

inline Vector clip_unit_box(Vector v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = std::clamp(v[i], 0.0, 1.0);
    return v;
}

inline Vector clip_theta_box(Vector v) {
    for (Eigen::Index i = 0; i < v.size(); ++i)
        v[i] = std::clamp(v[i], 0.0, ObjectiveContext::kThetaMax);
    return v;
}

inline Vector t_to_theta(const Vector& t) {
    Vector theta(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i)
        theta[i] = std::asin(std::sqrt(std::clamp(t[i], 0.0, 1.0)));
    return theta;
}

inline Vector theta_to_t(const Vector& theta) {
    Vector t(theta.size());
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        const double s = std::sin(theta[i]);
        t[i] = std::clamp(s * s, 0.0, 1.0);
    }
    return t;
}

}  // namespace detail

/// Mutual information of the network-transformed state in the configured
/// quadrature(s) — the quantity the optimizer maximizes. The Holevo bound is
/// left out on purpose: local passive networks cannot change it.
inline double objective(const NetworkParams& params, const CovarianceState& state,
                        const ModePartition& partition, const OptimizerConfig& config) {
    check_partition(partition, state.n_modes);
    check_network_params(params, partition);
    config.check(partition);
    const detail::ObjectiveContext ctx(state, partition, config);
    return ctx.evaluate(detail::pack_params(params));
}

/// Central finite-difference gradient of the objective at `params`.
inline std::vector<double> objective_gradient(const NetworkParams& params,
                                              const CovarianceState& state,
                                              const ModePartition& partition,
                                              const OptimizerConfig& config,
                                              std::optional<double> step = {}) {
    check_partition(partition, state.n_modes);
    check_network_params(params, partition);
    config.check(partition);
    const detail::ObjectiveContext ctx(state, partition, config);
    const Vector g = ctx.gradient(detail::pack_params(params), step.value_or(config.gradient_step));
    return {g.data(), g.data() + g.size()};
}

struct LocalResult {
    NetworkParams params;
    double objective = -std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
    bool failed = false;
    std::string diagnostics;
};

namespace detail {

// Bound-constrained quasi-Newton ascent, implemented as projected-gradient
// L-BFGS descent on the negated objective with an Armijo backtracking search
// along the clipped path. Works internally on the mixing angles (see
// ObjectiveContext); the returned transmittances never leave [0,1].
inline LocalResult lbfgs_box_maximize(const ObjectiveContext& ctx, const Vector& init_t) {
    const OptimizerConfig& cfg = ctx.config;
    const double c1 = 1e-4;
    const double pg_tol = 1e-9;
    const double theta_max = ObjectiveContext::kThetaMax;

    LocalResult result;
    Vector x = t_to_theta(clip_unit_box(init_t));

    auto eval = [&](const Vector& v) { return -ctx.evaluate_theta(v); };  // minimize f = -MI

    double fx = eval(x);
    if (!std::isfinite(fx)) {
        result.failed = true;
        result.diagnostics = "objective not finite at the start point";
        result.params = unpack_params(theta_to_t(x), ctx.partition);
        return result;
    }
    Vector grad = -ctx.gradient_theta(x, cfg.gradient_step);

    auto projected_gradient_norm = [&](const Vector& xx, const Vector& gg) {
        double norm = 0.0;
        for (Eigen::Index i = 0; i < xx.size(); ++i) {
            double pg = gg[i];
            if (xx[i] <= 0.0) pg = std::min(gg[i], 0.0);
            if (xx[i] >= theta_max) pg = std::max(gg[i], 0.0);
            norm = std::max(norm, std::abs(pg));
        }
        return norm;
    };

    std::deque<Vector> s_hist, y_hist;
    std::deque<double> rho_hist;
    int small_steps = 0;  // consecutive iterations with negligible improvement

    int iter = 0;
    for (; iter < cfg.max_local_iterations; ++iter) {
        if (projected_gradient_norm(x, grad) <= pg_tol) {
            result.converged = true;
            break;
        }

        // Two-loop recursion.
        Vector d = -grad;
        if (!s_hist.empty()) {
            std::vector<double> alpha(s_hist.size());
            for (std::size_t k = s_hist.size(); k-- > 0;) {
                alpha[k] = rho_hist[k] * s_hist[k].dot(d);
                d -= alpha[k] * y_hist[k];
            }
            const double gamma =
                s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
            d *= gamma;
            for (std::size_t k = 0; k < s_hist.size(); ++k) {
                const double beta_k = rho_hist[k] * y_hist[k].dot(d);
                d += (alpha[k] - beta_k) * s_hist[k];
            }
        }
        if (d.dot(grad) > -1e-14 * d.norm() * grad.norm()) {
            // Not a descent direction; drop the history and fall back.
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            d = -grad;
        }

        Vector x_new = x;
        double f_new = fx;
        bool accepted = false;
        bool aborted = false;
        auto line_search = [&](const Vector& dir, double step) {
            for (int ls = 0; ls < 50 && !aborted; ++ls) {
                Vector candidate = clip_theta_box(x + step * dir);
                if ((candidate - x).lpNorm<Eigen::Infinity>() == 0.0) return;  // pinned
                const double f_cand = eval(candidate);
                if (!std::isfinite(f_cand)) {
                    aborted = true;
                    result.diagnostics = "objective not finite during line search at iteration " +
                                         std::to_string(iter);
                    return;
                }
                if (f_cand <= fx + c1 * grad.dot(candidate - x)) {
                    x_new = std::move(candidate);
                    f_new = f_cand;
                    accepted = true;
                    return;
                }
                step *= 0.5;
            }
        };

        line_search(d, s_hist.empty() ? std::min(1.0, 1.0 / std::max(1e-12, grad.norm())) : 1.0);
        if (!accepted && !aborted && !s_hist.empty()) {
            // The quasi-Newton direction failed; retry along the projected
            // gradient with a fresh memory before giving up.
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            line_search(-grad, std::min(1.0, 1.0 / std::max(1e-12, grad.norm())));
        }
        if (aborted) {
            result.failed = true;
            result.params = unpack_params(theta_to_t(x), ctx.partition);
            result.objective = -fx;
            result.iterations = iter;
            return result;
        }
        if (!accepted) {
            // No admissible step along the gradient either: a (boundary)
            // stationary point at line-search resolution.
            result.converged = true;
            break;
        }

        Vector grad_new = -ctx.gradient_theta(x_new, cfg.gradient_step);
        Vector s = x_new - x;
        Vector y = grad_new - grad;
        const double sy = s.dot(y);
        if (sy > 1e-10 * s.norm() * y.norm()) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > cfg.lbfgs_memory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }

        const double improvement = fx - f_new;
        x = std::move(x_new);
        fx = f_new;
        grad = std::move(grad_new);
        small_steps = improvement <= cfg.convergence_tol ? small_steps + 1 : 0;
        if (small_steps >= 2) {
            ++iter;
            result.converged = true;
            break;
        }
    }

    result.params = unpack_params(theta_to_t(x), ctx.partition);
    result.objective = -fx;
    result.iterations = iter;
    return result;
}

}  // namespace detail

/// Bound-constrained quasi-Newton ascent from `init`.
inline LocalResult local_optimize(const CovarianceState& state, const ModePartition& partition,
                                  const NetworkParams& init, const OptimizerConfig& config) {
    check_partition(partition, state.n_modes);
    check_network_params(init, partition);
    config.check(partition);
    const detail::ObjectiveContext ctx(state, partition, config);
    return detail::lbfgs_box_maximize(ctx, detail::pack_params(init));
}

/// Start point of basin-hopping restart `hop_index` (1-based): the initial
/// params perturbed by uniform noise of magnitude hop_scale from the stream
/// derived from (rng_seed, hop_index), clipped to the bounds. Exposed so the
/// determinism contract is testable.
inline NetworkParams hop_start(const NetworkParams& init, const ModePartition& partition,
                               const OptimizerConfig& config, int hop_index) {
    SplitMix64 rng(derive_stream_seed(config.rng_seed, static_cast<std::uint64_t>(hop_index)));
    Vector v = detail::pack_params(init);
    for (Eigen::Index i = 0; i < v.size(); ++i)
        v[i] += config.hop_scale * rng.uniform(-1.0, 1.0);
    return detail::unpack_params(detail::clip_unit_box(std::move(v)), partition);
}

struct HopTrace {
    int hop = 0;  // 0 is the unoptimized baseline at the initial params
    double achieved = 0.0;
    bool kept = false;
    bool failed = false;
    int iterations = 0;
    double best_so_far = 0.0;
};

struct BasinHopResult {
    NetworkParams best_params;
    double best_objective = 0.0;
    std::vector<HopTrace> trace;
};

/// Global search: independent seeded restarts around the initial params, each
/// locally optimized; the best result is kept. Deterministic for a given
/// seed, and invariant to the number of worker threads because every restart
/// draws from its own (seed, index)-derived stream and aggregation is an
/// associative max with lowest-index tie-break.
inline BasinHopResult basin_hop(const CovarianceState& state, const ModePartition& partition,
                                const OptimizerConfig& config,
                                std::optional<NetworkParams> initial = {}) {
    check_partition(partition, state.n_modes);
    config.check(partition);
    const NetworkParams init = initial.value_or(NetworkParams::identity(partition));
    check_network_params(init, partition);

    const detail::ObjectiveContext ctx(state, partition, config);

    BasinHopResult result;
    result.best_params = init;
    result.best_objective = ctx.evaluate(detail::pack_params(init));
    if (!std::isfinite(result.best_objective))
        throw numerical_error("objective not finite at the initial network parameters");
    result.trace.push_back({0, result.best_objective, true, false, 0, result.best_objective});

    std::vector<LocalResult> hops(static_cast<std::size_t>(config.hops));
    const int n_workers = std::min(config.parallel_restarts, config.hops);
    if (n_workers <= 1) {
        for (int h = 0; h < config.hops; ++h) {
            const auto start = hop_start(init, partition, config, h + 1);
            hops[static_cast<std::size_t>(h)] =
                detail::lbfgs_box_maximize(ctx, detail::pack_params(start));
        }
    } else {
        std::atomic<int> next{0};
        auto worker = [&] {
            for (int h = next.fetch_add(1); h < config.hops; h = next.fetch_add(1)) {
                const auto start = hop_start(init, partition, config, h + 1);
                hops[static_cast<std::size_t>(h)] =
                    detail::lbfgs_box_maximize(ctx, detail::pack_params(start));
            }
        };
        std::vector<std::future<void>> futures;
        for (int w = 0; w < n_workers; ++w)
            futures.push_back(std::async(std::launch::async, worker));
        for (auto& f : futures) f.get();
    }

    int n_failed = 0;
    std::string failure_notes;
    for (int h = 0; h < config.hops; ++h) {
        const auto& r = hops[static_cast<std::size_t>(h)];
        HopTrace t;
        t.hop = h + 1;
        t.achieved = r.objective;
        t.failed = r.failed;
        t.iterations = r.iterations;
        if (r.failed) {
            ++n_failed;
            failure_notes += "hop " + std::to_string(h + 1) + ": " + r.diagnostics + "; ";
        } else if (r.objective > result.best_objective) {
            result.best_objective = r.objective;
            result.best_params = r.params;
            t.kept = true;
        }
        t.best_so_far = result.best_objective;
        result.trace.push_back(t);
    }
    if (n_failed == config.hops)
        throw numerical_error("every basin-hopping restart failed: " + failure_notes);
    return result;
}

struct DecoupleResult {
    CovarianceState transformed;
    NetworkParams params;
    KeyRateReport before;
    KeyRateReport after;
    BasinHopResult search;
    // Final-state mutual information in both quadratures (the x and p optima
    // need not coincide; both are reported rather than reconciled silently).
    double mi_x_before = 0.0, mi_p_before = 0.0;
    double mi_x_after = 0.0, mi_p_after = 0.0;
    double key_improvement = 0.0;  // after/before, +inf when before == 0 < after
};

/// Full decoupling pipeline: basin-hopping search, application of the best
/// network, and before/after key-rate reports under the same channel and
/// beta. For a uniform channel the Holevo bound must be unchanged by the
/// local network; drift beyond 1e-8 signals a symplecticity bug and is a
/// hard error.
inline DecoupleResult decouple(const CovarianceState& state, const ModePartition& partition,
                               const ChannelSpec& channel, double beta,
                               const OptimizerConfig& config,
                               std::optional<Quadrature> report_quadrature = {}) {
    const Quadrature rq = report_quadrature.value_or(
        config.quadrature == ObjectiveQuadrature::X ? Quadrature::X : Quadrature::P);

    DecoupleResult result;
    result.search = basin_hop(state, partition, config);
    result.params = result.search.best_params;
    result.transformed = apply_network(state, partition, result.params);
    result.before = key_rate(state, partition, channel, beta, rq);
    result.after = key_rate(result.transformed, partition, channel, beta, rq);

    if (channel.is_uniform()) {
        const double drift = std::abs(result.after.holevo - result.before.holevo);
        if (drift > 1e-8)
            throw numerical_error("Holevo bound drifted by " + std::to_string(drift) +
                                  " under a local network; this indicates a symplecticity bug");
    } else {
        log_info("per-mode channel transmittances: local networks need not preserve the Holevo "
                 "bound, skipping the invariance assertion");
    }

    const auto received_before = attenuate(state, partition, channel);
    const auto received_after = attenuate(result.transformed, partition, channel);
    result.mi_x_before = pairwise_mutual_information(received_before, partition, Quadrature::X).total;
    result.mi_p_before = pairwise_mutual_information(received_before, partition, Quadrature::P).total;
    result.mi_x_after = pairwise_mutual_information(received_after, partition, Quadrature::X).total;
    result.mi_p_after = pairwise_mutual_information(received_after, partition, Quadrature::P).total;

    if (result.before.key_rate > 0.0)
        result.key_improvement = result.after.key_rate / result.before.key_rate;
    else
        result.key_improvement = result.after.key_rate > 0.0
                                     ? std::numeric_limits<double>::infinity()
                                     : 1.0;
    return result;
}

}  // namespace cvmux

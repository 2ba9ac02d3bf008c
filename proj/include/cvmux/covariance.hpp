#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "log.hpp"

namespace cvmux {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Quadrature { X, P };

inline const char* quadrature_name(Quadrature q) { return q == Quadrature::X ? "x" : "p"; }

// Row/column of mode `m` for quadrature `q` in the canonical interleaved
// ordering (x1, p1, x2, p2, ...).
inline int qindex(int mode, Quadrature q) { return 2 * mode + (q == Quadrature::P ? 1 : 0); }

/// Covariance matrix of an N-mode Gaussian state in shot-noise units
/// (vacuum variance 1), stored in the interleaved quadrature ordering.
struct CovarianceState {
    int n_modes = 0;
    Matrix matrix;                    // 2N x 2N, real symmetric
    std::vector<std::string> labels;  // optional, empty or one per mode

    CovarianceState() = default;

    CovarianceState(int n, Matrix m, std::vector<std::string> mode_labels = {})
        : n_modes(n), matrix(std::move(m)), labels(std::move(mode_labels)) {
        if (n_modes <= 0)
            throw input_error("covariance state needs at least one mode");
        if (matrix.rows() != 2 * n_modes || matrix.cols() != 2 * n_modes)
            throw input_error("covariance matrix must be 2N x 2N with N = " +
                              std::to_string(n_modes) + ", got " +
                              std::to_string(matrix.rows()) + " x " + std::to_string(matrix.cols()));
        if (!labels.empty() && static_cast<int>(labels.size()) != n_modes)
            throw input_error("labels must be empty or have one entry per mode");
    }

    int dim() const { return 2 * n_modes; }

    static CovarianceState vacuum(int n) {
        return CovarianceState(n, Matrix::Identity(2 * n, 2 * n));
    }
};

/// Index sets assigning modes to Alice and Bob plus the pairing used for key
/// extraction.
struct ModePartition {
    std::vector<int> alice;                    // sorted
    std::vector<int> bob;                      // sorted
    std::vector<std::pair<int, int>> pairing;  // (alice_mode, bob_mode)

    // Lower half to Alice, upper half to Bob, paired by rank.
    static ModePartition split_half(int n_modes) {
        if (n_modes < 2 || n_modes % 2 != 0)
            throw input_error("split_half needs an even mode count >= 2");
        ModePartition p;
        for (int i = 0; i < n_modes / 2; ++i) {
            p.alice.push_back(i);
            p.bob.push_back(n_modes / 2 + i);
            p.pairing.emplace_back(i, n_modes / 2 + i);
        }
        return p;
    }

    // Pair the given index sets by rank.
    static ModePartition paired(std::vector<int> alice_modes, std::vector<int> bob_modes) {
        ModePartition p;
        p.alice = std::move(alice_modes);
        p.bob = std::move(bob_modes);
        std::sort(p.alice.begin(), p.alice.end());
        std::sort(p.bob.begin(), p.bob.end());
        const std::size_t n = std::min(p.alice.size(), p.bob.size());
        for (std::size_t i = 0; i < n; ++i) p.pairing.emplace_back(p.alice[i], p.bob[i]);
        return p;
    }
};

inline void check_partition(const ModePartition& partition, int n_modes) {
    std::vector<char> seen(static_cast<std::size_t>(n_modes), 0);
    auto check_side = [&](const std::vector<int>& side, const char* name) {
        for (int m : side) {
            if (m < 0 || m >= n_modes)
                throw input_error(std::string(name) + " mode index " + std::to_string(m) +
                                  " out of range for " + std::to_string(n_modes) + " modes");
            if (seen[static_cast<std::size_t>(m)])
                throw input_error("mode " + std::to_string(m) + " assigned twice in partition");
            seen[static_cast<std::size_t>(m)] = 1;
        }
    };
    check_side(partition.alice, "alice");
    check_side(partition.bob, "bob");
    std::vector<char> paired_mode(static_cast<std::size_t>(n_modes), 0);
    for (auto [a, b] : partition.pairing) {
        if (std::find(partition.alice.begin(), partition.alice.end(), a) == partition.alice.end())
            throw input_error("paired mode " + std::to_string(a) + " is not an Alice mode");
        if (std::find(partition.bob.begin(), partition.bob.end(), b) == partition.bob.end())
            throw input_error("paired mode " + std::to_string(b) + " is not a Bob mode");
        if (paired_mode[static_cast<std::size_t>(a)] || paired_mode[static_cast<std::size_t>(b)])
            throw input_error("a mode appears twice in the pairing");
        paired_mode[static_cast<std::size_t>(a)] = paired_mode[static_cast<std::size_t>(b)] = 1;
    }
}

/// Block-diagonal symplectic form with per-mode blocks [[0,1],[-1,0]].
struct SymplecticForm {
    int n_modes;
    Matrix matrix;

    explicit SymplecticForm(int n) : n_modes(n), matrix(Matrix::Zero(2 * n, 2 * n)) {
        for (int m = 0; m < n; ++m) {
            matrix(2 * m, 2 * m + 1) = 1.0;
            matrix(2 * m + 1, 2 * m) = -1.0;
        }
    }
};

inline Matrix symplectic_form(int n_modes) { return SymplecticForm(n_modes).matrix; }

namespace detail {

// Symmetric pseudo-inverse with a relative singular-value cutoff.
inline Matrix pseudo_inverse_sym(const Matrix& m, double rel_cutoff = 1e-12) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    if (es.info() != Eigen::Success)
        throw numerical_error("eigen decomposition failed in pseudo-inverse");
    const Vector& ev = es.eigenvalues();
    const double cutoff = rel_cutoff * std::max(1e-300, ev.cwiseAbs().maxCoeff());
    Vector inv = Vector::Zero(ev.size());
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        if (std::abs(ev[i]) > cutoff) inv[i] = 1.0 / ev[i];
    return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

inline Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

}  // namespace detail

/// Symplectic eigenvalues, sorted ascending, one entry per mode.
///
/// For (numerically) positive semidefinite matrices the values are obtained
/// as singular values of g^{1/2} O g^{1/2} (O the symplectic form), which is
/// mathematically the |eigenvalue| spectrum of iOg with each value doubled;
/// the doubled spectrum is collapsed by pairing adjacent sorted values. An
/// eigensolver on -(Og)^2 covers indefinite inputs, which can arise from
/// aggressive pessimistic adjustments.
inline std::vector<double> symplectic_spectrum(const CovarianceState& state) {
    const int n = state.n_modes;
    const Matrix g = detail::symmetrized(state.matrix);
    const Matrix omega = symplectic_form(n);

    Eigen::SelfAdjointEigenSolver<Matrix> es(g);
    if (es.info() != Eigen::Success)
        throw numerical_error("eigen decomposition of the covariance matrix failed; matrix may be "
                              "ill-conditioned (norm " + std::to_string(g.norm()) + ")");
    const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());

    std::vector<double> doubled(static_cast<std::size_t>(2 * n));
    if (es.eigenvalues().minCoeff() >= -1e-10 * scale) {
        Vector sq = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        Matrix root = es.eigenvectors() * sq.asDiagonal() * es.eigenvectors().transpose();
        Matrix w = root * omega * root;
        Eigen::JacobiSVD<Matrix> svd(w);
        for (int i = 0; i < 2 * n; ++i) doubled[static_cast<std::size_t>(i)] = svd.singularValues()[i];
    } else {
        // Indefinite input: fall back to the eigenvalues of -(Og)^2.
        Matrix og = omega * g;
        Matrix p = -(og * og);
        Eigen::EigenSolver<Matrix> gs(p);
        if (gs.info() != Eigen::Success)
            throw numerical_error("eigen decomposition of -(Omega*gamma)^2 failed");
        for (int i = 0; i < 2 * n; ++i) {
            const std::complex<double> lam = gs.eigenvalues()[i];
            doubled[static_cast<std::size_t>(i)] = std::sqrt(std::max(0.0, lam.real()));
        }
    }

    std::sort(doubled.begin(), doubled.end());
    std::vector<double> nu(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        nu[static_cast<std::size_t>(i)] = 0.5 * (doubled[static_cast<std::size_t>(2 * i)] +
                                                 doubled[static_cast<std::size_t>(2 * i + 1)]);
    return nu;
}

struct ValidationOptions {
    double physicality_tol = 1e-6;
    double xp_warn_tol = 1e-6;  // warn when |<x_i p_j>| exceeds this; never reject
};

struct ValidationReport {
    double symmetry_residual = 0.0;
    double min_symplectic_eigenvalue = 0.0;
    std::vector<std::string> violations;
    std::vector<std::string> warnings;
    bool pass = false;
};

/// Checks symmetry and physicality; reports every violated invariant.
/// Dimension inconsistencies are a hard error (thrown by the state
/// constructor); an unphysical spectrum is a listed violation only, since
/// pessimistically adjusted matrices are allowed to be slightly unphysical.
inline ValidationReport validate(const CovarianceState& state, const ValidationOptions& opts = {}) {
    ValidationReport report;
    const Matrix& g = state.matrix;
    const int d = state.dim();

    double residual = 0.0;
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
            const double denom = std::max(1.0, std::abs(g(i, j)));
            residual = std::max(residual, std::abs(g(i, j) - g(j, i)) / denom);
        }
    report.symmetry_residual = residual;
    if (residual > 1e-12)
        report.violations.push_back("matrix is asymmetric: max relative residual " +
                                    std::to_string(residual));

    const auto nu = symplectic_spectrum(state);
    report.min_symplectic_eigenvalue = nu.front();
    if (nu.front() < 1.0 - opts.physicality_tol)
        report.violations.push_back("unphysical spectrum: min symplectic eigenvalue " +
                                    std::to_string(nu.front()));

    double max_xp = 0.0;
    for (int i = 0; i < state.n_modes; ++i)
        for (int j = 0; j < state.n_modes; ++j)
            max_xp = std::max(max_xp, std::abs(g(qindex(i, Quadrature::X), qindex(j, Quadrature::P))));
    if (max_xp > opts.xp_warn_tol)
        report.warnings.push_back("x-p cross correlations up to " + std::to_string(max_xp) +
                                  " present; downstream analysis assumes quadrature-diagonal blocks");

    report.pass = report.violations.empty();
    return report;
}

/// Two-mode beam splitter congruence T g T^T with the convention
///   sqrt(t) on mode i, -sqrt(t) on mode j, sqrt(1-t) coupling blocks.
/// Transmittance t=1 flips the signs of mode j; t=0 swaps the modes up to
/// the same sign convention.
inline CovarianceState apply_beamsplitter(const CovarianceState& state, int i, int j, double t) {
    const int n = state.n_modes;
    if (i < 0 || i >= n || j < 0 || j >= n)
        throw std::invalid_argument("beam splitter mode index out of range");
    if (i == j) throw std::invalid_argument("beam splitter needs two distinct modes");
    if (!(t >= 0.0 && t <= 1.0))
        throw std::invalid_argument("beam splitter transmittance must lie in [0,1], got " +
                                    std::to_string(t));

    const double a = std::sqrt(t);
    const double b = std::sqrt(1.0 - t);

    Matrix g = state.matrix;
    // Row update: rows of modes i and j (both quadratures share coefficients).
    Eigen::Matrix<double, 2, Eigen::Dynamic> ri = g.middleRows(2 * i, 2);
    Eigen::Matrix<double, 2, Eigen::Dynamic> rj = g.middleRows(2 * j, 2);
    g.middleRows(2 * i, 2) = a * ri + b * rj;
    g.middleRows(2 * j, 2) = b * ri - a * rj;
    // Column update.
    Eigen::Matrix<double, Eigen::Dynamic, 2> ci = g.middleCols(2 * i, 2);
    Eigen::Matrix<double, Eigen::Dynamic, 2> cj = g.middleCols(2 * j, 2);
    g.middleCols(2 * i, 2) = a * ci + b * cj;
    g.middleCols(2 * j, 2) = b * ci - a * cj;

    return CovarianceState(n, std::move(g), state.labels);
}

/// Conditional covariance over the retained modes after a joint homodyne
/// measurement of one quadrature on `measured_modes`: the Schur complement
/// with a pseudo-inverse of the measured quadrature block.
inline CovarianceState condition_on_homodyne(const CovarianceState& state,
                                             const std::vector<int>& measured_modes,
                                             Quadrature quadrature) {
    const int n = state.n_modes;
    if (measured_modes.empty())
        throw std::invalid_argument("condition_on_homodyne needs at least one measured mode");
    std::vector<char> measured(static_cast<std::size_t>(n), 0);
    for (int m : measured_modes) {
        if (m < 0 || m >= n) throw std::invalid_argument("measured mode index out of range");
        if (measured[static_cast<std::size_t>(m)])
            throw std::invalid_argument("measured mode listed twice");
        measured[static_cast<std::size_t>(m)] = 1;
    }

    std::vector<int> retained;
    for (int m = 0; m < n; ++m)
        if (!measured[static_cast<std::size_t>(m)]) retained.push_back(m);
    if (retained.empty())
        throw std::invalid_argument("conditioning on every mode leaves no state");

    const int r = static_cast<int>(retained.size());
    const int m = static_cast<int>(measured_modes.size());
    const Matrix& g = state.matrix;

    // Measured-quadrature covariance block and its cross block with the
    // retained modes.
    Matrix meas(m, m);
    for (int row = 0; row < m; ++row)
        for (int col = 0; col < m; ++col)
            meas(row, col) = g(qindex(measured_modes[static_cast<std::size_t>(row)], quadrature),
                               qindex(measured_modes[static_cast<std::size_t>(col)], quadrature));

    Matrix cross(2 * r, m);
    Matrix rem(2 * r, 2 * r);
    for (int row = 0; row < r; ++row) {
        const int mode_row = retained[static_cast<std::size_t>(row)];
        for (int q = 0; q < 2; ++q) {
            const int gr = 2 * mode_row + q;
            for (int col = 0; col < m; ++col)
                cross(2 * row + q, col) =
                    g(gr, qindex(measured_modes[static_cast<std::size_t>(col)], quadrature));
            for (int col = 0; col < r; ++col) {
                const int mode_col = retained[static_cast<std::size_t>(col)];
                rem(2 * row + q, 2 * col) = g(gr, 2 * mode_col);
                rem(2 * row + q, 2 * col + 1) = g(gr, 2 * mode_col + 1);
            }
        }
    }

    Matrix conditional = rem - cross * detail::pseudo_inverse_sym(meas) * cross.transpose();
    conditional = detail::symmetrized(conditional);

    std::vector<std::string> labels;
    if (!state.labels.empty())
        for (int mode : retained) labels.push_back(state.labels[static_cast<std::size_t>(mode)]);
    return CovarianceState(r, std::move(conditional), std::move(labels));
}

/// Direct sum with k vacuum ancillas appended after the existing modes.
inline CovarianceState embed_vacuum(const CovarianceState& state, int k) {
    if (k < 1) throw std::invalid_argument("embed_vacuum needs k >= 1 ancilla modes");
    const int n = state.n_modes;
    Matrix g = Matrix::Identity(2 * (n + k), 2 * (n + k));
    g.topLeftCorner(2 * n, 2 * n) = state.matrix;
    std::vector<std::string> labels;
    if (!state.labels.empty()) {
        labels = state.labels;
        for (int i = 0; i < k; ++i) labels.push_back("vacuum");
    }
    return CovarianceState(n + k, std::move(g), std::move(labels));
}

/// Principal submatrix on the kept modes, preserving the order of `keep`.
inline CovarianceState restrict(const CovarianceState& state, const std::vector<int>& keep) {
    if (keep.empty()) throw std::invalid_argument("restrict needs at least one kept mode");
    for (int m : keep)
        if (m < 0 || m >= state.n_modes)
            throw std::invalid_argument("restrict: mode index " + std::to_string(m) +
                                        " out of range");
    const int r = static_cast<int>(keep.size());
    Matrix g(2 * r, 2 * r);
    for (int row = 0; row < r; ++row)
        for (int col = 0; col < r; ++col)
            g.block<2, 2>(2 * row, 2 * col) =
                state.matrix.block<2, 2>(2 * keep[static_cast<std::size_t>(row)],
                                         2 * keep[static_cast<std::size_t>(col)]);
    std::vector<std::string> labels;
    if (!state.labels.empty())
        for (int m : keep) labels.push_back(state.labels[static_cast<std::size_t>(m)]);
    return CovarianceState(r, std::move(g), std::move(labels));
}

/// Direct sum of two states, modes of `b` appended after those of `a`.
inline CovarianceState direct_sum(const CovarianceState& a, const CovarianceState& b) {
    const int n = a.n_modes + b.n_modes;
    Matrix g = Matrix::Zero(2 * n, 2 * n);
    g.topLeftCorner(a.dim(), a.dim()) = a.matrix;
    g.bottomRightCorner(b.dim(), b.dim()) = b.matrix;
    std::vector<std::string> labels;
    if (!a.labels.empty() || !b.labels.empty()) {
        labels = a.labels.empty() ? std::vector<std::string>(a.n_modes, "") : a.labels;
        const auto bl = b.labels.empty() ? std::vector<std::string>(b.n_modes, "") : b.labels;
        labels.insert(labels.end(), bl.begin(), bl.end());
    }
    return CovarianceState(n, std::move(g), std::move(labels));
}

}  // namespace cvmux

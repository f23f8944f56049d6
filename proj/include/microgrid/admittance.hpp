#pragma once

// Susceptance Laplacian, Kron reduction onto inverter buses, and the
// (1 + rho^2) scaling that turns the reduced susceptance into B'.

#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "microgrid/errors.hpp"
#include "microgrid/netmodel.hpp"

namespace microgrid {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct SusceptanceSet {
    MatrixXd full;     // n x n over all buses
    MatrixXd reduced;  // m x m over inverter buses
    MatrixXd prime;    // (1 + rho^2) * reduced
    std::map<std::string, Index> bus_index;
};

/// B[i][i] = sum of 1/X over incident lines, B[i][k] = -1/X per line.
inline MatrixXd build_susceptance(const NetworkModel& model) {
    const auto n = static_cast<Index>(model.bus_count());
    MatrixXd B = MatrixXd::Zero(n, n);
    for (const auto& line : model.lines) {
        const auto i = model.bus_index(line.from);
        const auto k = model.bus_index(line.to);
        if (!i || !k) throw ValidationError("UNKNOWN_BUS", "line " + line.id() + " references an undeclared bus");
        const double b = 1.0 / line.X;
        const auto a = static_cast<Index>(*i);
        const auto c = static_cast<Index>(*k);
        B(a, a) += b;
        B(c, c) += b;
        B(a, c) -= b;
        B(c, a) -= b;
    }
    return B;
}

namespace detail {

inline bool has_zero_row_sums(const MatrixXd& B) {
    const double scale = B.cwiseAbs().maxCoeff();
    if (scale == 0.0) return true;
    return B.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-10 * scale;
}

// Symmetrize and pin each diagonal entry to minus its off-diagonal row sum.
inline void restore_laplacian(MatrixXd& B) {
    B = 0.5 * (B + B.transpose()).eval();
    for (Index i = 0; i < B.rows(); ++i) {
        double off = 0.0;
        for (Index j = 0; j < B.cols(); ++j)
            if (j != i) off += B(i, j);
        B(i, i) = -off;
    }
}

}  // namespace detail

/// Schur complement B_kk - B_kc B_cc^-1 B_ck over the kept rows. B_cc is
/// factored with Cholesky; it is SPD for a connected network with positive
/// susceptances. When the input is a Laplacian the result is re-projected onto
/// exact symmetry and zero row sums.
inline MatrixXd kron_reduce(const MatrixXd& B_full, std::span<const Index> keep) {
    const Index n = B_full.rows();
    if (B_full.cols() != n) throw NumericalError("kron_reduce: matrix is not square");

    std::vector<bool> kept(static_cast<std::size_t>(n), false);
    for (Index i : keep) {
        if (i < 0 || i >= n) throw NumericalError("kron_reduce: kept index out of range");
        kept[static_cast<std::size_t>(i)] = true;
    }
    std::vector<Index> drop;
    for (Index i = 0; i < n; ++i)
        if (!kept[static_cast<std::size_t>(i)]) drop.push_back(i);

    const auto m = static_cast<Index>(keep.size());
    MatrixXd Bkk(m, m);
    for (Index a = 0; a < m; ++a)
        for (Index b = 0; b < m; ++b) Bkk(a, b) = B_full(keep[a], keep[b]);
    if (drop.empty()) return Bkk;

    const auto c = static_cast<Index>(drop.size());
    MatrixXd Bkc(m, c);
    MatrixXd Bcc(c, c);
    for (Index a = 0; a < m; ++a)
        for (Index b = 0; b < c; ++b) Bkc(a, b) = B_full(keep[a], drop[b]);
    for (Index a = 0; a < c; ++a)
        for (Index b = 0; b < c; ++b) Bcc(a, b) = B_full(drop[a], drop[b]);

    Eigen::LLT<MatrixXd> llt(Bcc);
    if (llt.info() != Eigen::Success) {
        std::string names;
        for (Index d : drop) names += (names.empty() ? "" : ",") + std::to_string(d);
        throw NumericalError("kron_reduce: passive block is singular (bus rows {" + names + "})");
    }
    MatrixXd reduced = Bkk - Bkc * llt.solve(Bkc.transpose());
    if (detail::has_zero_row_sums(B_full)) detail::restore_laplacian(reduced);
    return reduced;
}

inline MatrixXd scale_to_bprime(const MatrixXd& B_reduced, double rho) { return (1.0 + rho * rho) * B_reduced; }

/// Full pipeline for a model: full Laplacian, reduction onto inverter buses, B'.
inline SusceptanceSet susceptance_set(const NetworkModel& model) {
    SusceptanceSet out;
    out.full = build_susceptance(model);
    for (std::size_t i = 0; i < model.bus_count(); ++i) out.bus_index[model.buses[i].id] = static_cast<Index>(i);

    std::vector<Index> keep;
    for (std::size_t i = 0; i < model.inverter_count(); ++i) keep.push_back(static_cast<Index>(i));
    try {
        out.reduced = kron_reduce(out.full, keep);
    } catch (const NumericalError&) {
        std::string names;
        for (std::size_t i = model.inverter_count(); i < model.bus_count(); ++i)
            names += (names.empty() ? "" : ",") + model.buses[i].id;
        throw NumericalError("kron reduction failed: passive bus set {" + names + "} is singular");
    }
    out.prime = scale_to_bprime(out.reduced, model.rho);
    return out;
}

}  // namespace microgrid

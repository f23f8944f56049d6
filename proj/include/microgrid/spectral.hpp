#pragma once

// Spectrum of the droop-weighted Laplacian C = M B'.
//
// C is not symmetric, but D^-1 C D with D = M^1/2 equals D B' D, which is. The
// eigenpairs are computed on the symmetric form and mapped back with u = D u'.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "microgrid/admittance.hpp"
#include "microgrid/errors.hpp"
#include "microgrid/netmodel.hpp"

namespace microgrid {

inline constexpr double kTrivialEigenTolerance = 1e-9;
inline constexpr double kDegeneracyTolerance = 1e-8;
inline constexpr double kDefaultClusterThreshold = 0.1;

struct WeightedSpectrum {
    MatrixXd C;
    VectorXd mu;      // ascending
    MatrixXd U;       // column i belongs to mu(i); unit 2-norm, largest entry positive
    VectorXd m_diag;  // droop gains used as weights
    std::vector<int> multiplicity;  // eigenspace dimension of mu(i)

    [[nodiscard]] Index size() const { return mu.size(); }
    [[nodiscard]] double max_mu() const { return mu.size() ? mu(mu.size() - 1) : 0.0; }
    [[nodiscard]] double trivial_tolerance() const {
        return kTrivialEigenTolerance * std::max(std::abs(max_mu()), 1e-300);
    }
    [[nodiscard]] bool is_trivial(Index i) const { return std::abs(mu(i)) < trivial_tolerance(); }
};

/// Flips the sign so the largest-magnitude entry is positive (first index wins ties).
inline void fix_sign(Eigen::Ref<VectorXd> v) {
    Index best = 0;
    for (Index j = 1; j < v.size(); ++j)
        if (std::abs(v(j)) > std::abs(v(best)) * (1.0 + 1e-12)) best = j;
    if (v(best) < 0.0) v = -v;
}

inline WeightedSpectrum weighted_spectrum(const MatrixXd& B_prime, const VectorXd& m_diag) {
    const Index m = B_prime.rows();
    if (B_prime.cols() != m || m_diag.size() != m) throw NumericalError("weighted_spectrum: dimension mismatch");
    for (Index i = 0; i < m; ++i)
        if (!(m_diag(i) > 0.0)) throw ValidationError("NONPOSITIVE_DROOP", "droop weight must be positive");

    WeightedSpectrum s;
    s.m_diag = m_diag;
    s.C = m_diag.asDiagonal() * B_prime;

    const VectorXd d = m_diag.cwiseSqrt();
    const MatrixXd sym = d.asDiagonal() * (0.5 * (B_prime + B_prime.transpose())) * d.asDiagonal();
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(sym);
    if (eig.info() != Eigen::Success) throw NumericalError("weighted_spectrum: symmetric eigensolver failed");

    s.mu = eig.eigenvalues();
    s.U = d.asDiagonal() * eig.eigenvectors();
    for (Index i = 0; i < m; ++i) {
        s.U.col(i).normalize();
        fix_sign(s.U.col(i));
    }

    const double tol = kDegeneracyTolerance * std::max(std::abs(s.max_mu()), 1e-300);
    s.multiplicity.assign(static_cast<std::size_t>(m), 1);
    for (Index i = 0; i < m;) {
        Index j = i + 1;
        while (j < m && s.mu(j) - s.mu(j - 1) <= tol) ++j;
        for (Index t = i; t < j; ++t) s.multiplicity[static_cast<std::size_t>(t)] = static_cast<int>(j - i);
        i = j;
    }
    return s;
}

/// Spectrum of a validated model, with droops on the omega0-scaled footing.
inline WeightedSpectrum weighted_spectrum(const NetworkModel& model, const SusceptanceSet& sus) {
    const auto droops = model.frequency_droops();
    return weighted_spectrum(sus.prime, Eigen::Map<const VectorXd>(droops.data(), static_cast<Index>(droops.size())));
}

/// Edge of the reduced inverter graph. `id` is the physical line id when a line
/// joins the two buses directly, otherwise "a~b" for a coupling through passive buses.
struct Coupling {
    Index a = 0;
    Index b = 0;
    std::string id;
};

inline std::vector<Coupling> inverter_couplings(const NetworkModel& model, const MatrixXd& B_reduced) {
    std::vector<Coupling> out;
    const double scale = B_reduced.cwiseAbs().maxCoeff();
    const auto ids = model.inverter_ids();
    for (Index a = 0; a < B_reduced.rows(); ++a) {
        for (Index b = a + 1; b < B_reduced.cols(); ++b) {
            if (std::abs(B_reduced(a, b)) <= 1e-12 * scale) continue;
            const auto& ia = ids[static_cast<std::size_t>(a)];
            const auto& ib = ids[static_cast<std::size_t>(b)];
            std::string id = ia + "~" + ib;
            for (const auto& line : model.lines)
                if (line.joins(ia, ib)) id = line.id();
            out.push_back({a, b, std::move(id)});
        }
    }
    return out;
}

struct ClusterMember {
    std::string bus_id;
    double component = 0.0;
};

struct ClusterDescriptor {
    double mu = 0.0;
    int rank = 0;  // 1 = largest mu
    std::vector<ClusterMember> members;
    std::vector<std::string> critical_lines;
    bool degenerate = false;
    int eigenspace_dim = 1;
};

/// One descriptor per nontrivial eigenvalue, largest mu first. Members are the
/// components with |u_j| >= threshold * max |u|. If every member shares one sign,
/// the largest opposite-sign component is added so the cluster names both
/// coherent groups.
inline std::vector<ClusterDescriptor> extract_clusters(const WeightedSpectrum& spectrum,
                                                       std::span<const std::string> bus_ids,
                                                       std::span<const Coupling> couplings,
                                                       double threshold = kDefaultClusterThreshold) {
    if (static_cast<Index>(bus_ids.size()) != spectrum.size())
        throw NumericalError("extract_clusters: bus id count does not match spectrum size");

    std::vector<ClusterDescriptor> out;
    int rank = 0;
    for (Index i = spectrum.size() - 1; i >= 0; --i) {
        if (spectrum.is_trivial(i)) continue;
        const VectorXd u = spectrum.U.col(i);
        const double cut = threshold * u.cwiseAbs().maxCoeff();

        std::vector<bool> member(static_cast<std::size_t>(u.size()), false);
        bool pos = false, neg = false;
        for (Index j = 0; j < u.size(); ++j) {
            if (std::abs(u(j)) >= cut) {
                member[static_cast<std::size_t>(j)] = true;
                (u(j) > 0.0 ? pos : neg) = true;
            }
        }
        if (pos != neg) {
            Index best = -1;
            for (Index j = 0; j < u.size(); ++j) {
                const bool opposite = pos ? u(j) < 0.0 : u(j) > 0.0;
                if (opposite && (best < 0 || std::abs(u(j)) > std::abs(u(best)))) best = j;
            }
            if (best >= 0) member[static_cast<std::size_t>(best)] = true;
        }

        ClusterDescriptor c;
        c.mu = spectrum.mu(i);
        c.rank = ++rank;
        c.eigenspace_dim = spectrum.multiplicity[static_cast<std::size_t>(i)];
        c.degenerate = c.eigenspace_dim > 1;
        for (Index j = 0; j < u.size(); ++j)
            if (member[static_cast<std::size_t>(j)]) c.members.push_back({bus_ids[static_cast<std::size_t>(j)], u(j)});
        for (const auto& cp : couplings) {
            if (member[static_cast<std::size_t>(cp.a)] && member[static_cast<std::size_t>(cp.b)] &&
                u(cp.a) * u(cp.b) < 0.0)
                c.critical_lines.push_back(cp.id);
        }
        out.push_back(std::move(c));
    }
    return out;
}

struct WeylCheck {
    VectorXd old_mu;
    VectorXd new_mu;
    double bound = 0.0;  // (m_a + m_b) * b_e
};

/// Adds susceptance b_e between reduced rows a and b and checks
/// mu_i <= new_mu_i <= mu_i + (m_a + m_b) b_e for every i. A violation means the
/// eigen pipeline is broken and raises ConsistencyError.
inline WeylCheck weyl_bound_check(const MatrixXd& B_prime, const VectorXd& m_diag, Index a, Index b, double b_e) {
    if (a == b || a < 0 || b < 0 || a >= B_prime.rows() || b >= B_prime.rows())
        throw ValidationError("BAD_LINE", "added line needs two distinct inverter buses");
    if (b_e < 0.0) throw ValidationError("BAD_LINE", "added susceptance must be nonnegative");

    MatrixXd updated = B_prime;
    updated(a, a) += b_e;
    updated(b, b) += b_e;
    updated(a, b) -= b_e;
    updated(b, a) -= b_e;

    WeylCheck out;
    out.old_mu = weighted_spectrum(B_prime, m_diag).mu;
    out.new_mu = weighted_spectrum(updated, m_diag).mu;
    out.bound = (m_diag(a) + m_diag(b)) * b_e;

    const double tol = 1e-9 * std::max({out.new_mu.cwiseAbs().maxCoeff(), out.bound, 1.0});
    for (Index i = 0; i < out.old_mu.size(); ++i) {
        if (out.new_mu(i) < out.old_mu(i) - tol || out.new_mu(i) > out.old_mu(i) + out.bound + tol)
            throw ConsistencyError("Weyl bound violated at index " + std::to_string(i) + ": mu=" +
                                   std::to_string(out.old_mu(i)) + " new=" + std::to_string(out.new_mu(i)) +
                                   " bound=" + std::to_string(out.bound));
    }
    return out;
}

/// Model-level form: the added line (or the extra parallel susceptance on an
/// existing line) joins two inverter buses and has reactance X_pu.
inline WeylCheck weyl_bound_check(const NetworkModel& model, std::string_view from, std::string_view to, double X_pu) {
    const auto a = model.bus_index(from);
    const auto b = model.bus_index(to);
    if (!a || !b || *a >= model.inverter_count() || *b >= model.inverter_count())
        throw ValidationError("BAD_LINE", "added line must join two inverter buses");
    if (!(X_pu > 0.0)) throw ValidationError("BAD_LINE", "added line needs X > 0");
    const auto sus = susceptance_set(model);
    const auto droops = model.frequency_droops();
    const VectorXd m = Eigen::Map<const VectorXd>(droops.data(), static_cast<Index>(droops.size()));
    const double b_e = std::isinf(X_pu) ? 0.0 : (1.0 + model.rho * model.rho) / X_pu;
    return weyl_bound_check(sus.prime, m, static_cast<Index>(*a), static_cast<Index>(*b), b_e);
}

}  // namespace microgrid

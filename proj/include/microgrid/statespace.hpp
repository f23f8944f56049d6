#pragma once

// Full linearized state matrix over x = [theta, omega, V, Id, Iq] (blocks of m)
//
//     [ 0       I       0       0        0     ]
//     [ 0     -wc I     0     -wc M      0     ]
//     [ 0       0     -wc I     0       wc N   ]
//     [ 0       0     w0 B'  -w0 rho I  w0 I   ]
//     [ w0 B'   0       0     -w0 I  -w0 rho I ]
//
// Its spectrum is the ground truth the mu / mu_cr shortcut is checked against.

#include <algorithm>
#include <cmath>
#include <complex>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "microgrid/admittance.hpp"
#include "microgrid/charpoly.hpp"
#include "microgrid/errors.hpp"
#include "microgrid/matching.hpp"
#include "microgrid/netmodel.hpp"
#include "microgrid/spectral.hpp"

namespace microgrid {

struct StateSpaceModel {
    MatrixXd A;
    Index m = 0;  // inverters; A is 5m x 5m
};

inline StateSpaceModel assemble_state_matrix(const MatrixXd& B_prime, const VectorXd& M, const VectorXd& N,
                                             double rho, double omega_c, double omega0) {
    const Index m = B_prime.rows();
    if (B_prime.cols() != m || M.size() != m || N.size() != m)
        throw NumericalError("assemble_state_matrix: dimension mismatch");

    StateSpaceModel ss;
    ss.m = m;
    ss.A = MatrixXd::Zero(5 * m, 5 * m);
    const MatrixXd I = MatrixXd::Identity(m, m);
    auto blk = [&](Index r, Index c) { return ss.A.block(r * m, c * m, m, m); };

    blk(0, 1) = I;
    blk(1, 1) = -omega_c * I;
    blk(1, 3) = -omega_c * MatrixXd(M.asDiagonal());
    blk(2, 2) = -omega_c * I;
    blk(2, 4) = omega_c * MatrixXd(N.asDiagonal());
    blk(3, 2) = omega0 * B_prime;
    blk(3, 3) = -omega0 * rho * I;
    blk(3, 4) = omega0 * I;
    blk(4, 0) = omega0 * B_prime;
    blk(4, 3) = -omega0 * I;
    blk(4, 4) = -omega0 * rho * I;
    return ss;
}

inline StateSpaceModel assemble_state_matrix(const NetworkModel& model, const MatrixXd& B_prime) {
    const auto m = model.frequency_droops();
    const auto n = model.voltage_droops();
    const auto size = static_cast<Index>(m.size());
    return assemble_state_matrix(B_prime, Eigen::Map<const VectorXd>(m.data(), size),
                                 Eigen::Map<const VectorXd>(n.data(), size), model.rho, model.omega_c,
                                 model.omega0());
}

/// All 5m eigenvalues, descending real part (positive imaginary first on ties).
inline std::vector<cplx> oracle_eigenvalues(const StateSpaceModel& ss) {
    Eigen::EigenSolver<MatrixXd> eig(ss.A, false);
    if (eig.info() != Eigen::Success) throw NumericalError("oracle_eigenvalues: eigensolver failed");
    std::vector<cplx> out(eig.eigenvalues().begin(), eig.eigenvalues().end());
    sort_by_real_desc(out);
    return out;
}

inline double max_real_part(const std::vector<cplx>& eigs) {
    double best = -INFINITY;
    for (const auto& z : eigs) best = std::max(best, z.real());
    return best;
}

enum class CheckStatus { pass, fail, skipped };

inline const char* to_string(CheckStatus s) {
    switch (s) {
        case CheckStatus::pass: return "PASS";
        case CheckStatus::fail: return "FAIL";
        case CheckStatus::skipped: return "SKIPPED";
    }
    return "?";
}

struct MatchedPair {
    cplx quintic_root;
    cplx state_eigenvalue;
    double mu = 0.0;
};

struct EquivalenceReport {
    CheckStatus status = CheckStatus::skipped;
    std::string notice;
    double max_distance = 0.0;
    double spectral_radius = 0.0;
    double tolerance = 0.0;
    double max_eigenvector_distance = 0.0;  // 1 - |cos| between u_i and theta-blocks
    int eigenvectors_checked = 0;
    double max_real_eigenvalue = 0.0;
    std::vector<MatchedPair> pairs;
};

inline constexpr double kEquivalenceRelTolerance = 1e-6;

namespace detail {

// Compares u_i with the theta-block of A-eigenvectors whose eigenvalue is a
// well-separated root of the mode's quintic.
inline void compare_eigenvectors(const StateSpaceModel& ss, const WeightedSpectrum& spectrum,
                                 const CharPolyModel& cp, EquivalenceReport& report) {
    Eigen::EigenSolver<MatrixXd> eig(ss.A, true);
    if (eig.info() != Eigen::Success) throw NumericalError("equivalence_check: eigensolver failed");
    const auto& values = eig.eigenvalues();
    const auto vectors = eig.eigenvectors();
    const double gap_min = 1e-3 * report.spectral_radius;
    const Index m = ss.m;

    for (Index i = 0; i < spectrum.size(); ++i) {
        if (spectrum.multiplicity[static_cast<std::size_t>(i)] > 1) continue;
        const double mu = spectrum.is_trivial(i) ? 0.0 : spectrum.mu(i);
        const VectorXd u = spectrum.U.col(i);
        for (const auto& root : quintic_roots(cp, mu)) {
            Index nearest = 0;
            for (Index j = 1; j < values.size(); ++j)
                if (std::abs(values(j) - root) < std::abs(values(nearest) - root)) nearest = j;
            bool isolated = true;
            for (Index j = 0; j < values.size(); ++j)
                if (j != nearest && std::abs(values(j) - values(nearest)) < gap_min) isolated = false;
            if (!isolated) continue;

            const Eigen::VectorXcd theta = vectors.col(nearest).head(m);
            const double tn = theta.norm();
            if (tn < 1e-6 * vectors.col(nearest).norm()) continue;
            const double cosine = std::abs(theta.dot(u.cast<cplx>())) / (tn * u.norm());
            report.max_eigenvector_distance = std::max(report.max_eigenvector_distance, 1.0 - cosine);
            ++report.eigenvectors_checked;
        }
    }
}

}  // namespace detail

/// Matches the union of quintic roots over every mu_i against eig(A). PASS iff
/// the largest pairwise distance is below 1e-6 times the spectral radius of A
/// and every checked C-eigenvector agrees with the theta-block (1 - |cos| < 1e-6).
/// Skipped when rho or k is not uniform.
inline EquivalenceReport equivalence_check(const NetworkModel& model, const WeightedSpectrum& spectrum,
                                     const CharPolyModel& cp) {
    EquivalenceReport report;
    for (const auto& v : validate(model)) {
        if (v.code == "NONUNIFORM_K" || v.code == "NONUNIFORM_RHO") {
            report.status = CheckStatus::skipped;
            report.notice = v.code + ": uniform-ratio hypothesis violated, comparison skipped";
            return report;
        }
    }

    const auto sus = susceptance_set(model);
    const auto ss = assemble_state_matrix(model, sus.prime);
    const auto eigs = oracle_eigenvalues(ss);
    report.max_real_eigenvalue = max_real_part(eigs);
    for (const auto& z : eigs) report.spectral_radius = std::max(report.spectral_radius, std::abs(z));
    report.tolerance = kEquivalenceRelTolerance * report.spectral_radius;

    std::vector<cplx> roots;
    std::vector<double> root_mu;
    for (Index i = 0; i < spectrum.size(); ++i) {
        const double mu = spectrum.is_trivial(i) ? 0.0 : spectrum.mu(i);
        for (const auto& r : quintic_roots(cp, mu)) {
            roots.push_back(r);
            root_mu.push_back(mu);
        }
    }

    const auto match = match_multisets(roots, eigs, report.tolerance);
    report.max_distance = match.max_distance;
    for (std::size_t i = 0; i < roots.size() && i < match.pair.size(); ++i)
        report.pairs.push_back({roots[i], eigs[match.pair[i]], root_mu[i]});

    detail::compare_eigenvectors(ss, spectrum, cp, report);
    const bool ok = report.max_distance < report.tolerance &&
                    report.max_eigenvector_distance < kEquivalenceRelTolerance;
    report.status = ok ? CheckStatus::pass : CheckStatus::fail;
    return report;
}

struct TraceTable {
    std::vector<double> t;
    MatrixXd states;  // rows = time steps, cols = 5m states
    Index m = 0;
    std::string method;
    bool truncated = false;
};

inline constexpr std::size_t kMaxTraceRows = 1'000'000;

/// x(t) for xdot = A x. Uses the eigendecomposition when its basis is well
/// conditioned, otherwise steps with exp(A dt).
inline TraceTable time_response(const StateSpaceModel& ss, const VectorXd& x0, double horizon, double dt) {
    if (!(dt > 0.0) || !(horizon >= dt)) throw ValidationError("BAD_HORIZON", "need dt > 0 and horizon >= dt");
    if (x0.size() != ss.A.rows()) throw NumericalError("time_response: initial state has wrong dimension");

    TraceTable out;
    out.m = ss.m;
    auto rows = static_cast<std::size_t>(std::floor(horizon / dt + 1e-9)) + 1;
    if (rows > kMaxTraceRows) {
        rows = kMaxTraceRows;
        out.truncated = true;
    }
    out.states.resize(static_cast<Index>(rows), ss.A.rows());
    for (std::size_t r = 0; r < rows; ++r) out.t.push_back(static_cast<double>(r) * dt);

    Eigen::EigenSolver<MatrixXd> eig(ss.A, true);
    bool use_modes = eig.info() == Eigen::Success;
    Eigen::MatrixXcd V, Vinv;
    if (use_modes) {
        V = eig.eigenvectors();
        Eigen::PartialPivLU<Eigen::MatrixXcd> lu(V);
        const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(V);
        const auto& sv = svd.singularValues();
        const double cond = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : INFINITY;
        use_modes = cond < 1e8;
        if (use_modes) Vinv = lu.inverse();
    }

    if (use_modes) {
        out.method = "eigendecomposition";
        const Eigen::VectorXcd c = Vinv * x0.cast<cplx>();
        const Eigen::VectorXcd lambda = eig.eigenvalues();
        for (std::size_t r = 0; r < rows; ++r) {
            const Eigen::VectorXcd w = (lambda * out.t[r]).array().exp() * c.array();
            out.states.row(static_cast<Index>(r)) = (V * w).real().transpose();
        }
    } else {
        out.method = "stepwise matrix exponential (near-defective state matrix)";
        const MatrixXd step = (ss.A * dt).exp();
        VectorXd x = x0;
        for (std::size_t r = 0; r < rows; ++r) {
            out.states.row(static_cast<Index>(r)) = x.transpose();
            x = step * x;
        }
    }
    return out;
}

inline void write_trace_csv(std::ostream& os, const TraceTable& trace) {
    static const char* names[] = {"theta", "omega", "V", "Id", "Iq"};
    os << 't';
    for (const char* name : names)
        for (Index i = 1; i <= trace.m; ++i) os << ',' << name << '_' << i;
    os << '\n';
    os.precision(12);
    for (Index r = 0; r < trace.states.rows(); ++r) {
        os << trace.t[static_cast<std::size_t>(r)];
        for (Index c = 0; c < trace.states.cols(); ++c) os << ',' << trace.states(r, c);
        os << '\n';
    }
}

}  // namespace microgrid

#pragma once

// Per-mode characteristic polynomial
//
//     k g(l)^2 (h(l)^2 + 1) l + g(l) (k + l) mu + mu^2 = 0,
//     g(l) = 1 + tau l,   h(l) = rho + l / omega0,
//
// whose five roots are the state-matrix eigenvalues belonging to one eigenvalue
// mu of C. Here k = m/n, with both droops on the same (omega0-scaled) footing as
// the state matrix, and l is in rad/s.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "microgrid/errors.hpp"
#include "microgrid/netmodel.hpp"

namespace microgrid {

using cplx = std::complex<double>;
using QuinticRoots = std::array<cplx, 5>;

struct CharPolyModel {
    double rho = 0.0;
    double k = 1.0;
    double tau = 1.0 / kDefaultCutoffRadPerSec;
    double omega0 = 0.0;

    static CharPolyModel from_network(const NetworkModel& model) {
        return {model.rho, model.k, model.tau(), model.omega0()};
    }
};

namespace poly {

using Coeffs = std::vector<double>;  // ascending powers

inline Coeffs mul(const Coeffs& a, const Coeffs& b) {
    Coeffs out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    return out;
}

inline Coeffs add(Coeffs a, const Coeffs& b) {
    if (a.size() < b.size()) a.resize(b.size(), 0.0);
    for (std::size_t i = 0; i < b.size(); ++i) a[i] += b[i];
    return a;
}

inline Coeffs scale(Coeffs a, double s) {
    for (auto& c : a) c *= s;
    return a;
}

inline cplx eval(const Coeffs& c, cplx x) {
    cplx acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
    return acc;
}

// Sum of |c_i| |x|^i, the natural scale for a residual at x.
inline double magnitude(const Coeffs& c, cplx x) {
    double acc = 0.0;
    const double r = std::abs(x);
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * r + std::abs(*it);
    return acc;
}

}  // namespace poly

/// Six coefficients in ascending powers of lambda.
inline std::array<double, 6> quintic_coefficients(const CharPolyModel& cp, double mu) {
    const poly::Coeffs g{1.0, cp.tau};
    const poly::Coeffs h{cp.rho, 1.0 / cp.omega0};
    const poly::Coeffs lam{0.0, 1.0};
    const poly::Coeffs h2p1 = poly::add(poly::mul(h, h), {1.0});

    poly::Coeffs p = poly::scale(poly::mul(poly::mul(poly::mul(g, g), h2p1), lam), cp.k);
    p = poly::add(p, poly::scale(poly::mul(g, {cp.k, 1.0}), mu));
    p = poly::add(p, {mu * mu});

    std::array<double, 6> out{};
    std::copy_n(p.begin(), 6, out.begin());
    return out;
}

/// |p(root)| / sum |c_i| |root|^i.
inline double relative_residual(const std::array<double, 6>& c, cplx root) {
    const poly::Coeffs v(c.begin(), c.end());
    const double mag = poly::magnitude(v, root);
    return mag == 0.0 ? 0.0 : std::abs(poly::eval(v, root)) / mag;
}

inline void sort_by_real_desc(std::span<cplx> roots) {
    std::sort(roots.begin(), roots.end(), [](cplx a, cplx b) {
        if (a.real() != b.real()) return a.real() > b.real();
        return a.imag() > b.imag();
    });
}

/// Roots from the eigenvalues of the companion matrix of the monic polynomial
/// in z = lambda / s, where s balances the coefficient magnitudes.
inline QuinticRoots quintic_roots(const CharPolyModel& cp, double mu) {
    if (mu < 0.0) throw ValidationError("NEGATIVE_MU", "mu must be nonnegative");
    if (!(cp.k > 0.0) || !(cp.tau > 0.0) || !(cp.omega0 > 0.0))
        throw ValidationError("BAD_CHARPOLY", "k, tau and omega0 must be positive");

    const auto c = quintic_coefficients(cp, mu);
    // Geometric mean root magnitude; keeps the scaled companion well balanced.
    const double s = c[0] != 0.0 ? std::pow(std::abs(c[0] / c[5]), 0.2)
                                 : std::pow(std::abs(c[1] / c[5]), 0.25);

    std::array<double, 6> scaled{};
    double pw = 1.0;
    for (int i = 0; i < 6; ++i, pw *= s) scaled[static_cast<std::size_t>(i)] = c[static_cast<std::size_t>(i)] * pw;

    Eigen::Matrix<double, 5, 5> companion = Eigen::Matrix<double, 5, 5>::Zero();
    for (int i = 1; i < 5; ++i) companion(i, i - 1) = 1.0;
    for (int i = 0; i < 5; ++i) companion(i, 4) = -scaled[static_cast<std::size_t>(i)] / scaled[5];

    Eigen::EigenSolver<Eigen::Matrix<double, 5, 5>> eig(companion, false);
    if (eig.info() != Eigen::Success) throw NumericalError("quintic_roots: companion eigensolve failed");

    QuinticRoots roots;
    for (int i = 0; i < 5; ++i) roots[static_cast<std::size_t>(i)] = eig.eigenvalues()(i) * s;
    sort_by_real_desc(roots);
    return roots;
}

/// Largest real part. At mu = 0 the structural root at the origin (rigid
/// angle rotation) is left out.
inline double dominant_real_part(const QuinticRoots& roots, double mu) {
    if (mu != 0.0) return roots.front().real();
    std::size_t origin = 0;
    for (std::size_t i = 1; i < roots.size(); ++i)
        if (std::abs(roots[i]) < std::abs(roots[origin])) origin = i;
    double best = -INFINITY;
    for (std::size_t i = 0; i < roots.size(); ++i)
        if (i != origin) best = std::max(best, roots[i].real());
    return best;
}

inline bool is_stable_mode(const CharPolyModel& cp, double mu) {
    if (mu == 0.0) return true;
    return quintic_roots(cp, mu).front().real() < 0.0;
}

struct MuCriticalOptions {
    double lower = 1.0;
    double upper = 1e5;
    int prescan_points = 32;
    double rel_tol = 1e-12;
};

/// Threshold on mu where the dominant root crosses the imaginary axis.
///
/// A log-spaced pre-scan must show exactly one stable-to-unstable transition, and
/// a finer scan of the bracketing interval must show the same; anything else is
/// reported, not bisected through.
inline double mu_critical(const CharPolyModel& cp, const MuCriticalOptions& opt = {}) {
    if (!(cp.rho >= 0.0) || !(cp.k > 0.0) || !(cp.tau > 0.0))
        throw ValidationError("BAD_CHARPOLY", "need rho >= 0, k > 0, tau > 0");

    const int n = std::max(opt.prescan_points, 2);
    std::vector<double> mus(static_cast<std::size_t>(n));
    std::vector<double> re(static_cast<std::size_t>(n));
    const double a = std::log(opt.lower), b = std::log(opt.upper);
    for (int i = 0; i < n; ++i) {
        mus[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (n - 1));
        re[static_cast<std::size_t>(i)] = quintic_roots(cp, mus[static_cast<std::size_t>(i)]).front().real();
    }

    if (re.front() >= 0.0)
        throw NumericalError("mu_critical: already unstable at mu=" + std::to_string(opt.lower) +
                             " (max Re = " + std::to_string(re.front()) + ")");
    if (re.back() < 0.0)
        throw NumericalError("mu_critical: still stable at mu=" + std::to_string(opt.upper) +
                             " (max Re = " + std::to_string(re.back()) + ")");

    std::size_t last_stable = 0;
    int transitions = 0;
    for (std::size_t i = 1; i < re.size(); ++i) {
        if ((re[i] < 0.0) != (re[i - 1] < 0.0)) ++transitions;
        if (re[i] < 0.0) last_stable = i;
    }
    if (transitions != 1)
        throw NumericalError("mu_critical: pre-scan shows " + std::to_string(transitions) +
                             " stability transitions; root locus is not monotone");
    // The maximum over all roots is not monotone in general: a nearly flat
    // damped pair can sag while a faster pair rises and crosses. Bisection only
    // needs the crossing to be unique, so the bracket is re-scanned for it.
    const double ratio = mus[last_stable + 1] / mus[last_stable];
    int bracket_changes = 0;
    bool prev_stable = true;
    for (int i = 1; i <= 16; ++i) {
        const double mu = mus[last_stable] * std::pow(ratio, i / 16.0);
        const bool now_stable = quintic_roots(cp, mu).front().real() < 0.0;
        if (now_stable != prev_stable) ++bracket_changes;
        prev_stable = now_stable;
    }
    if (bracket_changes != 1)
        throw NumericalError("mu_critical: " + std::to_string(bracket_changes) +
                             " sign changes inside the bracket near mu=" + std::to_string(mus[last_stable]));

    double lo = mus[last_stable];
    double hi = mus[last_stable + 1];
    for (int it = 0; it < 200 && hi / lo - 1.0 > opt.rel_tol; ++it) {
        const double mid = std::sqrt(lo * hi);
        (quintic_roots(cp, mid).front().real() < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

struct RootLocusResult {
    std::vector<double> mu;
    std::vector<QuinticRoots> roots;
    std::vector<double> dominant;  // dominant real part per mu
    bool dominant_monotone = true;
};

/// Evenly spaced mu in [mu_lo, mu_hi]; a degenerate range gives a single row.
inline RootLocusResult root_locus(const CharPolyModel& cp, double mu_lo, double mu_hi, int count) {
    if (mu_lo < 0.0 || mu_hi < mu_lo || mu_hi > 1e5)
        throw ValidationError("BAD_RANGE", "mu range must lie within [0, 1e5] with lo <= hi");
    if (count < 1) throw ValidationError("BAD_RANGE", "count must be positive");
    if (mu_lo == mu_hi) count = 1;

    RootLocusResult out;
    for (int i = 0; i < count; ++i) {
        const double mu = count == 1 ? mu_lo : mu_lo + (mu_hi - mu_lo) * i / (count - 1);
        out.mu.push_back(mu);
        out.roots.push_back(quintic_roots(cp, mu));
        out.dominant.push_back(dominant_real_part(out.roots.back(), mu));
    }
    for (std::size_t i = 1; i < out.dominant.size(); ++i)
        if (out.dominant[i] < out.dominant[i - 1] - 1e-9 * std::max(1.0, std::abs(out.dominant[i - 1])))
            out.dominant_monotone = false;
    return out;
}

inline void write_root_locus_csv(std::ostream& os, const RootLocusResult& rl) {
    os << "mu";
    for (int i = 1; i <= 5; ++i) os << ",re" << i << ",im" << i;
    os << '\n';
    os.precision(12);
    for (std::size_t r = 0; r < rl.mu.size(); ++r) {
        os << rl.mu[r];
        for (const auto& z : rl.roots[r]) os << ',' << z.real() << ',' << z.imag();
        os << '\n';
    }
}

}  // namespace microgrid

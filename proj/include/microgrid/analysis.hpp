#pragma once

// End-to-end stability assessment, parameter sweeps and mu_cr surfaces.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "microgrid/admittance.hpp"
#include "microgrid/charpoly.hpp"
#include "microgrid/errors.hpp"
#include "microgrid/netmodel.hpp"
#include "microgrid/parallel.hpp"
#include "microgrid/spectral.hpp"
#include "microgrid/statespace.hpp"

namespace microgrid {

inline constexpr std::string_view kToolVersion = "1.0.0";

inline constexpr std::string_view kUnitConvention =
    "mu = eig(M B'), M = diag(m * omega0) in rad/s per pu power, B' = (1 + rho^2) B in pu; "
    "k = m/n; state matrix droops M, N both carry omega0; lambda in rad/s";

inline std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

/// Copy with every inverter's filter cutoff set to omega_c.
inline NetworkModel with_cutoff(NetworkModel model, double omega_c) {
    model.omega_c = omega_c;
    for (auto& inv : model.inverters) inv.tau = 1.0 / omega_c;
    return model;
}

struct AnalyzeOptions {
    double cluster_threshold = kDefaultClusterThreshold;
    std::string input_text;  // hashed for provenance
};

struct ClusterVerdict {
    ClusterDescriptor cluster;
    bool unstable = false;
};

struct StabilityReport {
    NetworkModel model;
    double mu_cr = 0.0;
    WeightedSpectrum spectrum;
    std::vector<ClusterVerdict> clusters;
    bool unstable = false;
    EquivalenceReport oracle;
    bool oracle_unstable = false;
    bool oracle_agrees = true;
    std::string input_hash;
};

/// Sign of max Re eig(A) with the global angle-rotation zero eigenvalue
/// treated as marginal.
inline bool state_matrix_unstable(const EquivalenceReport& r) {
    return r.max_real_eigenvalue > 1e-8 * std::max(r.spectral_radius, 1.0);
}

inline StabilityReport analyze(const NetworkModel& model, const AnalyzeOptions& opt = {}) {
    if (auto v = validate(model); !v.empty()) throw ValidationError(std::move(v));

    StabilityReport rep;
    rep.model = model;
    rep.input_hash = hex64(fnv1a64(opt.input_text));

    const auto sus = susceptance_set(model);
    rep.spectrum = weighted_spectrum(model, sus);
    const auto cp = CharPolyModel::from_network(model);
    rep.mu_cr = mu_critical(cp);

    const auto ids = model.inverter_ids();
    const auto couplings = inverter_couplings(model, sus.reduced);
    for (auto& c : extract_clusters(rep.spectrum, ids, couplings, opt.cluster_threshold)) {
        const bool bad = c.mu > rep.mu_cr;
        rep.unstable = rep.unstable || bad;
        rep.clusters.push_back({std::move(c), bad});
    }

    rep.oracle = equivalence_check(model, rep.spectrum, cp);
    rep.oracle_unstable = state_matrix_unstable(rep.oracle);
    rep.oracle_agrees = rep.oracle_unstable == rep.unstable;
    return rep;
}

inline json report_to_json(const StabilityReport& rep) {
    json j;
    const auto& m = rep.model;
    j["network"] = {{"buses", m.bus_count()},
                    {"inverters", m.inverter_count()},
                    {"lines", m.lines.size()},
                    {"rho", m.rho},
                    {"k", m.k},
                    {"omega0_rad_s", m.omega0()},
                    {"omega_c_rad_s", m.omega_c},
                    {"tau_s", m.tau()}};
    j["unit_convention"] = kUnitConvention;
    j["mu_cr"] = rep.mu_cr;

    const auto ids = m.inverter_ids();
    json spec = json::array();
    for (Index i = 0; i < rep.spectrum.size(); ++i) {
        json vec = json::object();
        for (Index r = 0; r < rep.spectrum.U.rows(); ++r) vec[ids[static_cast<std::size_t>(r)]] = rep.spectrum.U(r, i);
        spec.push_back({{"mu", rep.spectrum.mu(i)}, {"trivial", rep.spectrum.is_trivial(i)}, {"eigenvector", vec}});
    }
    j["spectrum"] = spec;

    json clusters = json::array();
    for (const auto& cv : rep.clusters) {
        const auto& c = cv.cluster;
        json members = json::array();
        for (const auto& mem : c.members) members.push_back({{"bus", mem.bus_id}, {"component", mem.component}});
        clusters.push_back({{"rank", c.rank},
                            {"mu", c.mu},
                            {"members", members},
                            {"critical_lines", c.critical_lines},
                            {"degenerate", c.degenerate},
                            {"eigenspace_dim", c.eigenspace_dim},
                            {"verdict", cv.unstable ? "unstable" : "stable"}});
    }
    j["clusters"] = clusters;
    j["verdict"] = rep.unstable ? "unstable" : "stable";
    j["oracle"] = {{"equivalence", to_string(rep.oracle.status)},
                   {"notice", rep.oracle.notice},
                   {"max_distance", rep.oracle.max_distance},
                   {"tolerance", rep.oracle.tolerance},
                   {"max_eigenvector_distance", rep.oracle.max_eigenvector_distance},
                   {"max_real_eigenvalue", rep.oracle.max_real_eigenvalue},
                   {"verdict", rep.oracle_unstable ? "unstable" : "stable"},
                   {"agrees", rep.oracle_agrees}};
    j["provenance"] = {{"input_fnv1a64", rep.input_hash}, {"tool_version", kToolVersion}};
    return j;
}

inline void write_report_text(std::ostream& os, const StabilityReport& rep) {
    const auto& m = rep.model;
    os << std::fixed << std::setprecision(4);
    os << "network: " << m.bus_count() << " buses, " << m.inverter_count() << " inverters, " << m.lines.size()
       << " lines; rho=" << m.rho << " k=" << m.k << " omega_c=" << m.omega_c << " rad/s\n";
    os << "units:   " << kUnitConvention << "\n";
    os << "mu_cr:   " << rep.mu_cr << "\n";
    os << "mu:     ";
    for (Index i = 0; i < rep.spectrum.size(); ++i) os << ' ' << rep.spectrum.mu(i);
    os << "\n\nclusters (largest mu first):\n";
    for (const auto& cv : rep.clusters) {
        const auto& c = cv.cluster;
        os << "  #" << c.rank << " mu=" << c.mu << (cv.unstable ? "  UNSTABLE" : "  stable") << "  members:";
        for (const auto& mem : c.members) os << ' ' << mem.bus_id << '(' << mem.component << ')';
        if (!c.critical_lines.empty()) {
            os << "  lines:";
            for (const auto& l : c.critical_lines) os << ' ' << l;
        }
        if (c.degenerate) os << "  [degenerate, dim " << c.eigenspace_dim << "]";
        os << '\n';
    }
    os << "\nverdict: " << (rep.unstable ? "UNSTABLE" : "stable") << "\n";
    os << "oracle:  equivalence " << to_string(rep.oracle.status) << ", max Re eig(A) = " << std::scientific
       << rep.oracle.max_real_eigenvalue << std::fixed << " -> " << (rep.oracle_unstable ? "unstable" : "stable")
       << (rep.oracle_agrees ? "" : "  ** DISAGREES WITH mu/mu_cr VERDICT **") << "\n";
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepSpec {
    enum class Kind { line_length, droop_m } kind = Kind::line_length;
    std::string target;  // line id or bus id

    [[nodiscard]] std::string name() const {
        return (kind == Kind::line_length ? "line-length:" : "droop-m:") + target;
    }
};

/// "line-length:<line-id>" or "droop-m:<bus-id>".
inline SweepSpec parse_sweep_spec(std::string_view text) {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos)
        throw ValidationError("BAD_PARAMETER", "parameter must look like line-length:<id> or droop-m:<bus>");
    const auto kind = text.substr(0, colon);
    SweepSpec spec;
    spec.target = std::string(text.substr(colon + 1));
    if (kind == "line-length")
        spec.kind = SweepSpec::Kind::line_length;
    else if (kind == "droop-m")
        spec.kind = SweepSpec::Kind::droop_m;
    else
        throw ValidationError("BAD_PARAMETER", "unknown sweep parameter '" + std::string(kind) + "'");
    return spec;
}

/// Model at one sweep value: km for line lengths, percent for droops.
inline NetworkModel apply_sweep(const NetworkModel& model, const SweepSpec& spec, double value) {
    if (spec.kind == SweepSpec::Kind::line_length) return with_line_length(model, spec.target, value);
    return with_frequency_droop(model, spec.target, value / 100.0);
}

inline VectorXd sweep_point_mu(const NetworkModel& model, const SweepSpec& spec, double value) {
    const auto m = apply_sweep(model, spec, value);
    return weighted_spectrum(m, susceptance_set(m)).mu;
}

struct SweepCrossing {
    double value = 0.0;
    int mode = -1;  // ascending index into the spectrum; -1 = overall stability (max mu)
    bool stabilizing = false;  // true when increasing the parameter moves below mu_cr
};

struct SweepResult {
    std::string parameter;
    std::vector<double> values;
    std::vector<VectorXd> mu;  // full spectrum, ascending, per value
    std::vector<bool> stable;
    double mu_cr = 0.0;
    std::vector<SweepCrossing> stability_crossings;
    std::vector<SweepCrossing> mode_crossings;
};

namespace detail {

// Bisects f(x) = selector(mu(x)) - mu_cr between grid points a < b, where f
// changes sign. Each midpoint must stay between the endpoint values.
template <typename Select>
double refine_crossing(const NetworkModel& model, const SweepSpec& spec, double mu_cr, double a, double b,
                       Select select) {
    double fa = select(sweep_point_mu(model, spec, a)) - mu_cr;
    double fb = select(sweep_point_mu(model, spec, b)) - mu_cr;
    for (int it = 0; it < 100 && (b - a) > 1e-6 * std::max(std::abs(a), std::abs(b)); ++it) {
        const double mid = 0.5 * (a + b);
        const double fm = select(sweep_point_mu(model, spec, mid)) - mu_cr;
        const double slack = 1e-9 * mu_cr;
        if (fm < std::min(fa, fb) - slack || fm > std::max(fa, fb) + slack)
            throw NumericalError("sweep: mu is not monotone between " + std::to_string(a) + " and " +
                                 std::to_string(b));
        if ((fm > 0.0) == (fa > 0.0)) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
            fb = fm;
        }
    }
    return 0.5 * (a + b);
}

}  // namespace detail

/// Linear grid over [lo, hi]. mu_cr is computed once: it depends on rho and k,
/// which neither sweep changes.
inline SweepResult sweep(const NetworkModel& model, const SweepSpec& spec, double lo, double hi, int count) {
    if (!(lo > 0.0) || !(hi >= lo) || count < 1)
        throw ValidationError("BAD_RANGE", "sweep range must be positive with lo <= hi and count >= 1");
    if (auto v = validate(model); !v.empty()) throw ValidationError(std::move(v));
    apply_sweep(model, spec, lo);  // surfaces unknown ids before any work

    SweepResult out;
    out.parameter = spec.name();
    out.mu_cr = mu_critical(CharPolyModel::from_network(model));
    if (lo == hi) count = 1;
    for (int i = 0; i < count; ++i) out.values.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
    out.mu.resize(out.values.size());
    parallel_for(out.values.size(), [&](std::size_t i) { out.mu[i] = sweep_point_mu(model, spec, out.values[i]); });

    for (const auto& mu : out.mu) out.stable.push_back(mu(mu.size() - 1) <= out.mu_cr);

    const Index modes = out.mu.front().size();
    for (std::size_t i = 1; i < out.values.size(); ++i) {
        const double a = out.values[i - 1], b = out.values[i];
        if (out.stable[i] != out.stable[i - 1]) {
            const double x = detail::refine_crossing(model, spec, out.mu_cr, a, b,
                                                     [](const VectorXd& mu) { return mu(mu.size() - 1); });
            out.stability_crossings.push_back({x, -1, out.stable[i]});
        }
        for (Index j = 1; j < modes; ++j) {
            const bool above_a = out.mu[i - 1](j) > out.mu_cr;
            const bool above_b = out.mu[i](j) > out.mu_cr;
            if (above_a == above_b) continue;
            const double x =
                detail::refine_crossing(model, spec, out.mu_cr, a, b, [j](const VectorXd& mu) { return mu(j); });
            out.mode_crossings.push_back({x, static_cast<int>(j), !above_b});
        }
    }
    return out;
}

inline void write_sweep_csv(std::ostream& os, const SweepResult& sr) {
    os << "value";
    const Index modes = sr.mu.empty() ? 0 : sr.mu.front().size();
    for (Index j = 0; j < modes; ++j) os << ",mu" << j;
    os << ",mu_cr,stable\n";
    os.precision(12);
    for (std::size_t i = 0; i < sr.values.size(); ++i) {
        os << sr.values[i];
        for (Index j = 0; j < modes; ++j) os << ',' << sr.mu[i](j);
        os << ',' << sr.mu_cr << ',' << (sr.stable[i] ? 1 : 0) << '\n';
    }
}

inline json sweep_to_json(const SweepResult& sr) {
    auto crossings = [](const std::vector<SweepCrossing>& cs) {
        json arr = json::array();
        for (const auto& c : cs)
            arr.push_back({{"value", c.value}, {"mode", c.mode}, {"stabilizing", c.stabilizing}});
        return arr;
    };
    return {{"parameter", sr.parameter},
            {"points", sr.values.size()},
            {"mu_cr", sr.mu_cr},
            {"stability_crossings", crossings(sr.stability_crossings)},
            {"mode_crossings", crossings(sr.mode_crossings)}};
}

// ---------------------------------------------------------------------------
// mu_cr surface

struct MuCrRow {
    double rho = 0.0;
    double k = 0.0;
    double mu_cr = std::numeric_limits<double>::quiet_NaN();
};

struct MuCrSurface {
    std::vector<MuCrRow> rows;  // rho-major
    int failures = 0;
    double minimum = std::numeric_limits<double>::quiet_NaN();
};

inline std::vector<double> linspace(double lo, double hi, int count) {
    std::vector<double> out;
    for (int i = 0; i < count; ++i) out.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
    return out;
}

inline MuCrSurface mu_critical_surface(double rho_lo, double rho_hi, int rho_count, double k_lo, double k_hi,
                                       int k_count, double tau, double omega0) {
    if (rho_lo < 0.0 || rho_hi < rho_lo || !(k_lo > 0.0) || k_hi < k_lo || rho_count < 1 || k_count < 1)
        throw ValidationError("BAD_RANGE", "need 0 <= rho_lo <= rho_hi, 0 < k_lo <= k_hi, counts >= 1");
    MuCrSurface out;
    for (double rho : linspace(rho_lo, rho_hi, rho_count))
        for (double k : linspace(k_lo, k_hi, k_count)) out.rows.push_back({rho, k});

    parallel_for(out.rows.size(), [&](std::size_t i) {
        auto& row = out.rows[i];
        try {
            row.mu_cr = mu_critical({row.rho, row.k, tau, omega0});
        } catch (const NumericalError&) {
            row.mu_cr = std::numeric_limits<double>::quiet_NaN();
        }
    });
    for (const auto& row : out.rows) {
        if (std::isnan(row.mu_cr))
            ++out.failures;
        else if (std::isnan(out.minimum) || row.mu_cr < out.minimum)
            out.minimum = row.mu_cr;
    }
    return out;
}

inline void write_surface_csv(std::ostream& os, const MuCrSurface& s) {
    os << "rho,k,mu_cr\n";
    os.precision(12);
    for (const auto& r : s.rows) {
        os << r.rho << ',' << r.k << ',';
        if (std::isnan(r.mu_cr))
            os << "nan";
        else
            os << r.mu_cr;
        os << '\n';
    }
}

}  // namespace microgrid

#pragma once

// Microgrid network description: per-unit normalization, parsing, validation
// and canonical serialization.
//
// Bus order is fixed at construction: inverter-bearing buses first (document
// order), then passive buses (document order). Every matrix in the library
// indexes buses in this order.

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "microgrid/errors.hpp"

namespace microgrid {

using json = nlohmann::json;

inline constexpr double kDefaultCutoffRadPerSec = 14.0;
inline constexpr double kUniformityTolerance = 1e-6;

struct BaseSystem {
    double voltage_V = 0.0;
    double power_VA = 0.0;
    double frequency_Hz = 0.0;

    [[nodiscard]] double omega0() const { return 2.0 * std::numbers::pi * frequency_Hz; }
    [[nodiscard]] double impedance_base() const { return voltage_V * voltage_V / power_VA; }

    [[nodiscard]] double ohm_to_pu(double ohm) const { return ohm / impedance_base(); }
    [[nodiscard]] double pu_to_ohm(double pu) const { return pu * impedance_base(); }

    bool operator==(const BaseSystem&) const = default;
};

/// Droop record of one grid-forming inverter. Gains are fractions (1 % -> 0.01).
struct InverterRecord {
    std::string bus_id;
    double m = 0.0;    // frequency droop, pu frequency per pu active power
    double n = 0.0;    // voltage droop, pu voltage per pu reactive power
    double tau = 0.0;  // power filter time constant [s]

    [[nodiscard]] double droop_ratio() const { return m / n; }
};

/// Line with per-unit impedance on the model base. `length_km` is kept when the
/// document supplied it, so length sweeps can rescale the impedance.
struct LineRecord {
    std::string from;
    std::string to;
    double R = 0.0;
    double X = 0.0;
    std::optional<double> length_km;

    [[nodiscard]] std::string id() const { return from + "-" + to; }
    [[nodiscard]] double inductance(double omega0) const { return X / omega0; }
    [[nodiscard]] double rx_ratio() const { return R / X; }

    [[nodiscard]] bool joins(std::string_view a, std::string_view b) const {
        return (from == a && to == b) || (from == b && to == a);
    }
};

enum class BusKind { inverter, passive };

struct Bus {
    std::string id;
    BusKind kind = BusKind::passive;
};

struct NetworkModel {
    BaseSystem base;
    double omega_c = kDefaultCutoffRadPerSec;
    std::vector<Bus> buses;
    std::vector<InverterRecord> inverters;  // same order as the leading inverter buses
    std::vector<LineRecord> lines;
    double rho = 0.0;
    double k = 0.0;

    [[nodiscard]] std::size_t bus_count() const { return buses.size(); }
    [[nodiscard]] std::size_t inverter_count() const { return inverters.size(); }
    [[nodiscard]] double omega0() const { return base.omega0(); }
    [[nodiscard]] double tau() const { return 1.0 / omega_c; }

    [[nodiscard]] std::optional<std::size_t> bus_index(std::string_view id) const {
        for (std::size_t i = 0; i < buses.size(); ++i)
            if (buses[i].id == id) return i;
        return std::nullopt;
    }

    [[nodiscard]] std::vector<std::string> inverter_ids() const {
        std::vector<std::string> ids;
        for (const auto& inv : inverters) ids.push_back(inv.bus_id);
        return ids;
    }

    /// Looks a line up by "a-b" in either orientation.
    [[nodiscard]] std::optional<std::size_t> line_index(std::string_view line_id) const {
        const auto dash = line_id.find('-');
        if (dash == std::string_view::npos) return std::nullopt;
        const auto a = line_id.substr(0, dash);
        const auto b = line_id.substr(dash + 1);
        for (std::size_t i = 0; i < lines.size(); ++i)
            if (lines[i].joins(a, b)) return i;
        return std::nullopt;
    }

    /// Frequency droop gains in rad/s per pu power (fraction times omega0).
    [[nodiscard]] std::vector<double> frequency_droops() const {
        std::vector<double> out;
        for (const auto& inv : inverters) out.push_back(inv.m * omega0());
        return out;
    }

    /// Voltage droop gains on the same omega0-scaled footing as frequency_droops().
    [[nodiscard]] std::vector<double> voltage_droops() const {
        std::vector<double> out;
        for (const auto& inv : inverters) out.push_back(inv.n * omega0());
        return out;
    }
};

namespace detail {

inline bool nearly_equal(double a, double b, double rel) {
    if (a == b) return true;
    return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b));
}

inline int line_of_offset(std::string_view text, std::size_t offset) {
    offset = std::min(offset, text.size());
    return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(offset), '\n'));
}

inline std::string id_of(const json& v, const std::string& path) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    throw ParseError("identifier must be a string or integer", 0, path);
}

inline double number_at(const json& obj, const char* key, const std::string& path) {
    if (!obj.contains(key)) throw ParseError("missing required number", 0, path + "." + key);
    const auto& v = obj.at(key);
    if (!v.is_number()) throw ParseError("expected a number", 0, path + "." + key);
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ParseError("non-finite number", 0, path + "." + key);
    return x;
}

inline std::optional<double> optional_number(const json& obj, const char* key, const std::string& path) {
    if (!obj.contains(key)) return std::nullopt;
    return number_at(obj, key, path);
}

// Connected components of the bus graph, as lists of bus ids.
inline std::vector<std::vector<std::string>> components(const NetworkModel& model) {
    const std::size_t n = model.bus_count();
    std::vector<std::size_t> parent(n);
    for (std::size_t i = 0; i < n; ++i) parent[i] = i;
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const auto& line : model.lines) {
        const auto a = model.bus_index(line.from);
        const auto b = model.bus_index(line.to);
        if (a && b) parent[find(*a)] = find(*b);
    }
    std::map<std::size_t, std::vector<std::string>> groups;
    for (std::size_t i = 0; i < n; ++i) groups[find(i)].push_back(model.buses[i].id);
    std::vector<std::vector<std::string>> out;
    for (auto& [root, ids] : groups) out.push_back(std::move(ids));
    return out;
}

}  // namespace detail

/// Every invariant violation of the model. Empty iff the model is usable by the
/// downstream analysis (uniform rho, uniform k, connected, positive data).
inline std::vector<Violation> validate(const NetworkModel& model) {
    std::vector<Violation> out;
    auto add = [&](const char* code, std::string msg) { out.push_back({code, std::move(msg)}); };

    const auto& b = model.base;
    if (!(b.voltage_V > 0.0) || !(b.power_VA > 0.0) || !(b.frequency_Hz > 0.0))
        add("BAD_BASE", "base voltage, rating and frequency must be strictly positive");
    if (!(model.omega_c > 0.0)) add("NONPOSITIVE_TAU", "power filter cutoff must be strictly positive");

    std::map<std::string, int> seen;
    for (const auto& bus : model.buses)
        if (++seen[bus.id] == 2) add("DUPLICATE_BUS", "bus '" + bus.id + "' declared more than once");

    for (const auto& bus : model.buses) {
        const auto count = std::count_if(model.inverters.begin(), model.inverters.end(),
                                         [&](const InverterRecord& r) { return r.bus_id == bus.id; });
        if (bus.kind == BusKind::inverter && count != 1)
            add("INVERTER_MISMATCH", "inverter bus '" + bus.id + "' must carry exactly one inverter record");
        if (bus.kind == BusKind::passive && count != 0)
            add("INVERTER_MISMATCH", "passive bus '" + bus.id + "' carries an inverter record");
    }

    if (model.inverter_count() < 2)
        add("TOO_FEW_INVERTERS", "at least two inverters are needed for nontrivial dynamics");

    for (const auto& inv : model.inverters) {
        if (!(inv.m > 0.0) || !(inv.n > 0.0))
            add("NONPOSITIVE_DROOP", "inverter at bus '" + inv.bus_id + "' has a non-positive droop gain");
        if (!(inv.tau > 0.0))
            add("NONPOSITIVE_TAU", "inverter at bus '" + inv.bus_id + "' has a non-positive time constant");
    }
    if (!model.inverters.empty()) {
        const double k_ref = model.inverters.front().droop_ratio();
        for (const auto& inv : model.inverters)
            if (!detail::nearly_equal(inv.droop_ratio(), k_ref, kUniformityTolerance))
                add("NONUNIFORM_K", "inverter at bus '" + inv.bus_id + "' has m/n = " +
                                        std::to_string(inv.droop_ratio()) + ", expected " + std::to_string(k_ref));
    }

    for (std::size_t i = 0; i < model.lines.size(); ++i) {
        const auto& line = model.lines[i];
        if (!model.bus_index(line.from) || !model.bus_index(line.to))
            add("UNKNOWN_BUS", "line " + line.id() + " references an undeclared bus");
        if (line.from == line.to) add("SELF_LOOP", "line " + line.id() + " joins a bus to itself");
        if (!(line.X > 0.0)) add("NONPOSITIVE_REACTANCE", "line " + line.id() + " must have X > 0");
        if (line.R < 0.0) add("NEGATIVE_RESISTANCE", "line " + line.id() + " has R < 0");
        for (std::size_t j = 0; j < i; ++j)
            if (model.lines[j].joins(line.from, line.to))
                add("DUPLICATE_LINE", "line " + line.id() + " duplicates line " + model.lines[j].id());
    }
    if (!model.lines.empty() && model.lines.front().X > 0.0) {
        const double rho_ref = model.lines.front().rx_ratio();
        for (const auto& line : model.lines)
            if (line.X > 0.0 && !detail::nearly_equal(line.rx_ratio(), rho_ref, kUniformityTolerance))
                add("NONUNIFORM_RHO", "line " + line.id() + " has R/X = " + std::to_string(line.rx_ratio()) +
                                          ", expected " + std::to_string(rho_ref));
    }

    const auto comps = detail::components(model);
    if (comps.size() > 1) {
        std::string msg = "network is disconnected; components:";
        for (const auto& c : comps) {
            msg += " {";
            for (std::size_t i = 0; i < c.size(); ++i) msg += (i ? "," : "") + c[i];
            msg += "}";
        }
        add("DISCONNECTED", msg);
    }
    return out;
}

/// Recomputes rho and k from the records (first line / first inverter as reference).
inline void refresh_ratios(NetworkModel& model) {
    model.rho = (!model.lines.empty() && model.lines.front().X > 0.0) ? model.lines.front().rx_ratio() : 0.0;
    model.k = (!model.inverters.empty() && model.inverters.front().n > 0.0) ? model.inverters.front().droop_ratio()
                                                                           : 0.0;
}

/// Builds a model from a parsed JSON document without checking the model
/// invariants. Structural problems (missing keys, wrong types, mixed units)
/// raise ParseError.
inline NetworkModel network_from_json(const json& doc) {
    if (!doc.is_object()) throw ParseError("document root must be an object");
    NetworkModel model;

    if (!doc.contains("base") || !doc["base"].is_object()) throw ParseError("missing object", 0, "base");
    const auto& base = doc["base"];
    model.base.voltage_V = detail::number_at(base, "voltage_V", "base");
    model.base.power_VA = detail::number_at(base, "rating_VA", "base");
    model.base.frequency_Hz = detail::number_at(base, "frequency_Hz", "base");
    model.omega_c = detail::optional_number(doc, "power_filter_cutoff_rad_s", "").value_or(kDefaultCutoffRadPerSec);

    if (!doc.contains("buses") || !doc["buses"].is_array()) throw ParseError("missing array", 0, "buses");
    std::vector<Bus> inverter_buses;
    std::vector<Bus> passive_buses;
    const auto& buses = doc["buses"];
    for (std::size_t i = 0; i < buses.size(); ++i) {
        const std::string path = "buses[" + std::to_string(i) + "]";
        const auto& entry = buses[i];
        if (!entry.is_object() || !entry.contains("id")) throw ParseError("bus needs an 'id'", 0, path);
        Bus bus{detail::id_of(entry["id"], path + ".id"), BusKind::passive};
        if (entry.contains("inverter") && !entry["inverter"].is_null()) {
            const auto& inv = entry["inverter"];
            if (!inv.is_object()) throw ParseError("expected an object", 0, path + ".inverter");
            bus.kind = BusKind::inverter;
            model.inverters.push_back({bus.id, detail::number_at(inv, "m_pct", path + ".inverter") / 100.0,
                                       detail::number_at(inv, "n_pct", path + ".inverter") / 100.0,
                                       1.0 / model.omega_c});
            inverter_buses.push_back(bus);
        } else {
            passive_buses.push_back(bus);
        }
    }
    model.buses = std::move(inverter_buses);
    model.buses.insert(model.buses.end(), passive_buses.begin(), passive_buses.end());

    if (!doc.contains("lines") || !doc["lines"].is_array()) throw ParseError("missing array", 0, "lines");
    const auto& lines = doc["lines"];
    const double zb = model.base.impedance_base();
    const double w0 = model.base.omega0();
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string path = "lines[" + std::to_string(i) + "]";
        const auto& entry = lines[i];
        if (!entry.is_object() || !entry.contains("from") || !entry.contains("to"))
            throw ParseError("line needs 'from' and 'to'", 0, path);
        LineRecord line;
        line.from = detail::id_of(entry["from"], path + ".from");
        line.to = detail::id_of(entry["to"], path + ".to");
        const bool si = entry.contains("R_ohm_per_km") || entry.contains("L_H_per_km");
        const bool pu = entry.contains("R_pu") || entry.contains("X_pu");
        if (si && pu) throw ParseError("line mixes SI and per-unit impedance", 0, path);
        line.length_km = detail::optional_number(entry, "length_km", path);
        if (si) {
            if (!line.length_km) throw ParseError("SI impedance requires a length", 0, path + ".length_km");
            line.R = detail::number_at(entry, "R_ohm_per_km", path) * *line.length_km / zb;
            line.X = w0 * detail::number_at(entry, "L_H_per_km", path) * *line.length_km / zb;
        } else if (pu) {
            line.R = detail::number_at(entry, "R_pu", path);
            line.X = detail::number_at(entry, "X_pu", path);
        } else {
            throw ParseError("line needs either R_ohm_per_km/L_H_per_km/length_km or R_pu/X_pu", 0, path);
        }
        model.lines.push_back(std::move(line));
    }

    refresh_ratios(model);
    return model;
}

/// Parses the document text without enforcing model invariants.
inline NetworkModel parse_network_document(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ParseError(e.what(), detail::line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1));
    }
    return network_from_json(doc);
}

/// Parses and validates; throws ValidationError listing every violation.
inline NetworkModel parse_network(std::string_view text) {
    auto model = parse_network_document(text);
    if (auto violations = validate(model); !violations.empty()) throw ValidationError(std::move(violations));
    return model;
}

/// Canonical per-unit serialization; object keys come out sorted.
inline json network_to_json(const NetworkModel& model) {
    json doc;
    doc["base"] = {{"voltage_V", model.base.voltage_V},
                   {"rating_VA", model.base.power_VA},
                   {"frequency_Hz", model.base.frequency_Hz}};
    doc["power_filter_cutoff_rad_s"] = model.omega_c;
    doc["buses"] = json::array();
    for (const auto& bus : model.buses) {
        json entry = {{"id", bus.id}};
        if (bus.kind == BusKind::inverter) {
            for (const auto& inv : model.inverters)
                if (inv.bus_id == bus.id) entry["inverter"] = {{"m_pct", inv.m * 100.0}, {"n_pct", inv.n * 100.0}};
        }
        doc["buses"].push_back(std::move(entry));
    }
    doc["lines"] = json::array();
    for (const auto& line : model.lines) {
        json entry = {{"from", line.from}, {"to", line.to}, {"R_pu", line.R}, {"X_pu", line.X}};
        if (line.length_km) entry["length_km"] = *line.length_km;
        doc["lines"].push_back(std::move(entry));
    }
    return doc;
}

inline std::string serialize_network(const NetworkModel& model) { return network_to_json(model).dump(2); }

/// Field-wise comparison with relative tolerance on every real quantity.
inline bool approx_equal(const NetworkModel& a, const NetworkModel& b, double rel = 1e-12) {
    using detail::nearly_equal;
    auto eq = [&](double x, double y) { return nearly_equal(x, y, rel); };
    if (!eq(a.base.voltage_V, b.base.voltage_V) || !eq(a.base.power_VA, b.base.power_VA) ||
        !eq(a.base.frequency_Hz, b.base.frequency_Hz) || !eq(a.omega_c, b.omega_c) || !eq(a.rho, b.rho) ||
        !eq(a.k, b.k))
        return false;
    if (a.buses.size() != b.buses.size() || a.inverters.size() != b.inverters.size() ||
        a.lines.size() != b.lines.size())
        return false;
    for (std::size_t i = 0; i < a.buses.size(); ++i)
        if (a.buses[i].id != b.buses[i].id || a.buses[i].kind != b.buses[i].kind) return false;
    for (std::size_t i = 0; i < a.inverters.size(); ++i) {
        const auto &x = a.inverters[i], &y = b.inverters[i];
        if (x.bus_id != y.bus_id || !eq(x.m, y.m) || !eq(x.n, y.n) || !eq(x.tau, y.tau)) return false;
    }
    for (std::size_t i = 0; i < a.lines.size(); ++i) {
        const auto &x = a.lines[i], &y = b.lines[i];
        if (x.from != y.from || x.to != y.to || !eq(x.R, y.R) || !eq(x.X, y.X)) return false;
        if (x.length_km.has_value() != y.length_km.has_value()) return false;
        if (x.length_km && !eq(*x.length_km, *y.length_km)) return false;
    }
    return true;
}

/// Copy of the model with one line's length changed; impedance scales linearly.
inline NetworkModel with_line_length(const NetworkModel& model, std::string_view line_id, double length_km) {
    const auto idx = model.line_index(line_id);
    if (!idx) throw ValidationError("UNKNOWN_LINE", "no line '" + std::string(line_id) + "'");
    const auto& old = model.lines[*idx];
    if (!old.length_km || !(*old.length_km > 0.0))
        throw ValidationError("NO_LENGTH", "line " + old.id() + " was not given with a length");
    NetworkModel out = model;
    const double scale = length_km / *old.length_km;
    out.lines[*idx].R *= scale;
    out.lines[*idx].X *= scale;
    out.lines[*idx].length_km = length_km;
    return out;
}

/// Copy of the model with one inverter's frequency droop changed. The voltage
/// droop follows so that m/n stays at the system ratio k.
inline NetworkModel with_frequency_droop(const NetworkModel& model, std::string_view bus_id, double m_fraction) {
    NetworkModel out = model;
    for (auto& inv : out.inverters) {
        if (inv.bus_id == bus_id) {
            inv.m = m_fraction;
            inv.n = m_fraction / model.k;
            return out;
        }
    }
    throw ValidationError("UNKNOWN_BUS", "no inverter at bus '" + std::string(bus_id) + "'");
}

}  // namespace microgrid

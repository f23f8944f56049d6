#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "microgrid/microgrid.hpp"

namespace fixtures {

inline std::string read_text(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string four_bus_path() { return std::string(MICROGRID_DATA_DIR) + "/kundur_4bus.json"; }

inline microgrid::NetworkModel four_bus() { return microgrid::parse_network(read_text(four_bus_path())); }

// Minimal pu document builder for small hand-made networks.
inline std::string pu_network(const std::string& buses, const std::string& lines) {
    return R"({"base":{"voltage_V":230,"rating_VA":10000,"frequency_Hz":50},"buses":[)" + buses +
           R"(],"lines":[)" + lines + "]}";
}

inline std::string inverter_bus(int id, double m_pct = 1.0, double n_pct = 1.0) {
    return R"({"id":)" + std::to_string(id) + R"(,"inverter":{"m_pct":)" + std::to_string(m_pct) +
           R"(,"n_pct":)" + std::to_string(n_pct) + "}}";
}

inline std::string passive_bus(int id) { return R"({"id":)" + std::to_string(id) + "}"; }

inline std::string pu_line(int a, int b, double R, double X) {
    std::ostringstream os;
    os.precision(17);
    os << R"({"from":)" << a << R"(,"to":)" << b << R"(,"R_pu":)" << R << R"(,"X_pu":)" << X << "}";
    return os.str();
}

}  // namespace fixtures

#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"

using namespace microgrid;
using fixtures::inverter_bus;
using fixtures::passive_bus;
using fixtures::pu_line;
using fixtures::pu_network;

namespace {

bool has_code(const std::vector<Violation>& vs, const std::string& code) {
    for (const auto& v : vs)
        if (v.code == code) return true;
    return false;
}

}  // namespace

TEST(NetModel, FourBusPerUnitConversion) {
    const auto model = fixtures::four_bus();
    EXPECT_EQ(model.bus_count(), 4u);
    EXPECT_EQ(model.inverter_count(), 4u);
    EXPECT_NEAR(model.base.impedance_base(), 5.29, 1e-12);

    // X = w0 L len / Zb, computed by hand for the 3 km line.
    const double x34 = 2.0 * std::numbers::pi * 50.0 * 0.00051 * 3.0 / 5.29;
    const auto idx = model.line_index("3-4");
    ASSERT_TRUE(idx);
    EXPECT_NEAR(model.lines[*idx].X, x34, 1e-12);
    EXPECT_NEAR(model.lines[*idx].X, 0.09086, 1e-4);
    EXPECT_NEAR(model.lines[*idx].R, 0.2222 * 3.0 / 5.29, 1e-12);

    EXPECT_NEAR(model.rho, 0.2222 / (2.0 * std::numbers::pi * 50.0 * 0.00051), 1e-12);
    EXPECT_NEAR(model.rho, 1.4, 0.014);
    EXPECT_DOUBLE_EQ(model.k, 1.0);
    EXPECT_DOUBLE_EQ(model.omega_c, kDefaultCutoffRadPerSec);
    for (const auto& inv : model.inverters) EXPECT_DOUBLE_EQ(inv.tau, 1.0 / kDefaultCutoffRadPerSec);
}

TEST(NetModel, LineIndexAcceptsEitherOrientation) {
    const auto model = fixtures::four_bus();
    EXPECT_EQ(model.line_index("4-3"), model.line_index("3-4"));
    EXPECT_FALSE(model.line_index("1-4"));
    EXPECT_FALSE(model.line_index("nonsense"));
}

TEST(NetModel, DroopVectorsCarryNominalFrequency) {
    const auto model = fixtures::four_bus();
    const double w0 = model.omega0();
    for (double m : model.frequency_droops()) EXPECT_NEAR(m, 0.01 * w0, 1e-12);
    for (double n : model.voltage_droops()) EXPECT_NEAR(n, 0.01 * w0, 1e-12);
}

TEST(NetModel, NoLinesIsDisconnected) {
    const auto model = parse_network_document(pu_network(inverter_bus(1) + "," + inverter_bus(2), ""));
    const auto vs = validate(model);
    EXPECT_TRUE(has_code(vs, "DISCONNECTED"));
    try {
        parse_network(pu_network(inverter_bus(1) + "," + inverter_bus(2), ""));
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_TRUE(e.has("DISCONNECTED"));
    }
}

TEST(NetModel, DisconnectedMessageListsComponents) {
    const auto text = pu_network(inverter_bus(1) + "," + inverter_bus(2) + "," + inverter_bus(3) + "," + inverter_bus(4),
                                 pu_line(1, 2, 0.1, 0.1) + "," + pu_line(3, 4, 0.1, 0.1));
    const auto vs = validate(parse_network_document(text));
    ASSERT_TRUE(has_code(vs, "DISCONNECTED"));
    for (const auto& v : vs) {
        if (v.code != "DISCONNECTED") continue;
        EXPECT_NE(v.message.find('1'), std::string::npos);
        EXPECT_NE(v.message.find('3'), std::string::npos);
    }
}

TEST(NetModel, NonuniformRatiosAreReported) {
    const auto rho_text = pu_network(inverter_bus(1) + "," + inverter_bus(2) + "," + inverter_bus(3),
                                     pu_line(1, 2, 0.14, 0.1) + "," + pu_line(2, 3, 0.2, 0.1));
    EXPECT_TRUE(has_code(validate(parse_network_document(rho_text)), "NONUNIFORM_RHO"));

    const auto k_text = pu_network(inverter_bus(1, 1.0, 1.0) + "," + inverter_bus(2, 1.0, 2.0),
                                   pu_line(1, 2, 0.14, 0.1));
    EXPECT_TRUE(has_code(validate(parse_network_document(k_text)), "NONUNIFORM_K"));
}

TEST(NetModel, StructuralViolations) {
    const auto one_inverter = pu_network(inverter_bus(1) + "," + passive_bus(2), pu_line(1, 2, 0.1, 0.1));
    EXPECT_TRUE(has_code(validate(parse_network_document(one_inverter)), "TOO_FEW_INVERTERS"));

    const auto dup_bus = pu_network(inverter_bus(1) + "," + inverter_bus(1), pu_line(1, 1, 0.1, 0.1));
    const auto vs = validate(parse_network_document(dup_bus));
    EXPECT_TRUE(has_code(vs, "DUPLICATE_BUS"));
    EXPECT_TRUE(has_code(vs, "SELF_LOOP"));

    const auto unknown = pu_network(inverter_bus(1) + "," + inverter_bus(2), pu_line(1, 9, 0.1, 0.1));
    EXPECT_TRUE(has_code(validate(parse_network_document(unknown)), "UNKNOWN_BUS"));

    const auto bad_x = pu_network(inverter_bus(1) + "," + inverter_bus(2), pu_line(1, 2, 0.1, -0.1));
    EXPECT_TRUE(has_code(validate(parse_network_document(bad_x)), "NONPOSITIVE_REACTANCE"));

    const auto neg_r = pu_network(inverter_bus(1) + "," + inverter_bus(2), pu_line(1, 2, -0.1, 0.1));
    EXPECT_TRUE(has_code(validate(parse_network_document(neg_r)), "NEGATIVE_RESISTANCE"));

    const auto dup_line = pu_network(inverter_bus(1) + "," + inverter_bus(2),
                                     pu_line(1, 2, 0.1, 0.1) + "," + pu_line(2, 1, 0.1, 0.1));
    EXPECT_TRUE(has_code(validate(parse_network_document(dup_line)), "DUPLICATE_LINE"));

    const auto zero_droop = pu_network(inverter_bus(1, 0.0, 1.0) + "," + inverter_bus(2), pu_line(1, 2, 0.1, 0.1));
    EXPECT_TRUE(has_code(validate(parse_network_document(zero_droop)), "NONPOSITIVE_DROOP"));

    EXPECT_TRUE(validate(fixtures::four_bus()).empty());
}

TEST(NetModel, MixedUnitsOnOneLineIsAParseError) {
    const auto text = pu_network(inverter_bus(1) + "," + inverter_bus(2),
                                 R"({"from":1,"to":2,"R_pu":0.1,"L_H_per_km":0.0005,"length_km":2})");
    try {
        parse_network_document(text);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.field(), "lines[0]");
    }
}

TEST(NetModel, SiWithoutLengthIsAParseError) {
    const auto text = pu_network(inverter_bus(1) + "," + inverter_bus(2),
                                 R"({"from":1,"to":2,"R_ohm_per_km":0.2,"L_H_per_km":0.0005})");
    EXPECT_THROW(parse_network_document(text), ParseError);
}

TEST(NetModel, SyntaxErrorReportsLine) {
    const std::string text = "{\n  \"base\": {\n    \"voltage_V\": 230,,\n  }\n}\n";
    try {
        parse_network_document(text);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3);
    }
}

TEST(NetModel, SiAndPerUnitRoundTrip) {
    const BaseSystem base{230.0, 10000.0, 50.0};
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ohms(1e-3, 50.0);
    for (int i = 0; i < 200; ++i) {
        const double z = ohms(rng);
        EXPECT_NEAR(base.pu_to_ohm(base.ohm_to_pu(z)), z, 1e-12 * z);
    }
}

TEST(NetModel, SerializeParseRoundTrip) {
    const auto original = fixtures::four_bus();
    const auto again = parse_network(serialize_network(original));
    EXPECT_TRUE(approx_equal(original, again));

    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        RandomNetworkOptions opt;
        opt.inverters = 2 + static_cast<int>(seed % 6);
        opt.passive_buses = static_cast<int>(seed % 3);
        const auto model = random_network(seed, opt);
        EXPECT_TRUE(approx_equal(model, parse_network(serialize_network(model)))) << "seed " << seed;
    }
}

TEST(NetModel, CutoffOverrideFromDocument) {
    auto doc = nlohmann::json::parse(fixtures::read_text(fixtures::four_bus_path()));
    doc["power_filter_cutoff_rad_s"] = 31.42;
    const auto model = parse_network(doc.dump());
    EXPECT_DOUBLE_EQ(model.omega_c, 31.42);
    EXPECT_DOUBLE_EQ(model.inverters[0].tau, 1.0 / 31.42);
}

TEST(NetModel, LineLengthScalesImpedance) {
    const auto model = fixtures::four_bus();
    const auto longer = with_line_length(model, "3-4", 6.0);
    const auto i = *model.line_index("3-4");
    EXPECT_NEAR(longer.lines[i].X, 2.0 * model.lines[i].X, 1e-15);
    EXPECT_NEAR(longer.lines[i].R, 2.0 * model.lines[i].R, 1e-15);
    EXPECT_THROW(with_line_length(model, "1-4", 2.0), ValidationError);

    const auto pu = parse_network(pu_network(inverter_bus(1) + "," + inverter_bus(2), pu_line(1, 2, 0.1, 0.1)));
    EXPECT_THROW(with_line_length(pu, "1-2", 2.0), ValidationError);
}

TEST(NetModel, DroopChangeKeepsRatio) {
    const auto model = fixtures::four_bus();
    const auto changed = with_frequency_droop(model, "1", 0.03);
    EXPECT_DOUBLE_EQ(changed.inverters[0].m, 0.03);
    EXPECT_DOUBLE_EQ(changed.inverters[0].droop_ratio(), model.k);
    EXPECT_TRUE(validate(changed).empty());
    EXPECT_THROW(with_frequency_droop(model, "9", 0.03), ValidationError);
}

TEST(NetModel, PassiveBusesFollowInverters) {
    const auto text = pu_network(passive_bus(5) + "," + inverter_bus(1) + "," + inverter_bus(2),
                                 pu_line(1, 5, 0.1, 0.1) + "," + pu_line(5, 2, 0.1, 0.1));
    const auto model = parse_network(text);
    ASSERT_EQ(model.bus_count(), 3u);
    EXPECT_EQ(model.buses[2].id, "5");
    EXPECT_EQ(model.buses[2].kind, BusKind::passive);
    EXPECT_EQ(model.inverter_ids(), (std::vector<std::string>{"1", "2"}));
}

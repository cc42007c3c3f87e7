#include "vastop/config.hpp"
#include "vastop/csv.hpp"

#include <gtest/gtest.h>

#include <charconv>
#include <filesystem>
#include <fstream>

using namespace vastop;

namespace {

Json minimal() {
    return Json::parse(R"({
      "scenario": {
        "market": {"r": 0.03, "sigma": 0.2},
        "contract": {"G": 100, "T": 15, "F0": 100},
        "fee": {"kind": "piecewise", "breakpoints": [5, 10], "rates": [0.010908, 0.005454, 0.010908]},
        "charge": {"kind": "exponential", "kappa": 0.0055}
      },
      "tasks": ["regions"]
    })");
}

std::string field_of(const Json& j) {
    try {
        parse_run_plan(j);
    } catch (const ConfigError& e) {
        return e.field();
    }
    return "<none>";
}

}  // namespace

TEST(Config, DefaultsAreMaterialised) {
    const RunPlan p = parse_run_plan(minimal());
    EXPECT_EQ(p.lattice.N, 360u);
    EXPECT_EQ(p.lattice.M, 401u);
    EXPECT_DOUBLE_EQ(p.pde.psor.tol, 1e-8);
    EXPECT_DOUBLE_EQ(p.region.tol_abs, 1e-6);
    EXPECT_DOUBLE_EQ(p.decompose.tolerance, 0.5);
    EXPECT_EQ(p.mc.seed, 20240601u);
    const Json echo = plan_to_json(p);
    EXPECT_EQ(echo["region"]["rule"], "dominance");
    EXPECT_EQ(echo["mc"]["scheme"], "exact-lognormal");
    EXPECT_EQ(echo["scenario"]["fee"]["kind"], "piecewise");
}

TEST(Config, ResolvedPlanRoundTrips) {
    Json j = minimal();
    j["grid"] = {{"N", 180}, {"M", 201}};
    j["region"] = {{"rule", "gap"}};
    j["mc"] = {{"scheme", "euler"}, {"npaths", 1000}};
    const Json once = plan_to_json(parse_run_plan(j));
    const Json twice = plan_to_json(parse_run_plan(once));
    EXPECT_EQ(once, twice);
}

TEST(Config, ErrorsNameTheField) {
    Json j = minimal();
    j["scenario"]["market"].erase("sigma");
    EXPECT_EQ(field_of(j), "scenario.market.sigma");

    j = minimal();
    j["scenario"]["market"]["sigma"] = -0.1;
    EXPECT_EQ(field_of(j), "scenario.market.sigma");

    j = minimal();
    j["scenario"]["fee"]["kind"] = "stepwise";
    EXPECT_EQ(field_of(j), "scenario.fee.kind");

    j = minimal();
    j["scenario"]["contract"]["strike"] = 1;
    EXPECT_EQ(field_of(j), "scenario.contract.strike");

    j = minimal();
    j["tasks"] = {"price-everything"};
    EXPECT_EQ(field_of(j), "tasks");

    j = minimal();
    j["grid"] = {{"M", "many"}};
    EXPECT_EQ(field_of(j), "grid.M");

    j = minimal();
    j["region"] = {{"rule", "nearest"}};
    EXPECT_EQ(field_of(j), "region.rule");

    j = minimal();
    j.erase("scenario");
    EXPECT_EQ(field_of(j), "scenario");
}

TEST(Config, ScenarioFileIsResolvedRelativeToConfig) {
    const auto dir = std::filesystem::temp_directory_path() / "vastop_config_test";
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "scn.json") << minimal()["scenario"].dump();
    Json j = minimal();
    j["scenario"] = "scn.json";
    const RunPlan p = parse_run_plan(j, dir);
    EXPECT_EQ(p.scenario.fee.breakpoints(), (std::vector<double>{5.0, 10.0}));
    j["scenario"] = "missing.json";
    EXPECT_THROW(parse_run_plan(j, dir), ConfigError);
    std::ofstream(dir / "bad.json") << "{ not json";
    try {
        read_json_file(dir / "bad.json", "config");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.field(), "config");
    }
}

TEST(Csv, NumbersRoundTripExactly) {
    for (double v : {0.1, 1.0 / 3.0, 101.25207473211519, 1e-300, -2.5e17}) {
        const std::string s = format_number(v);
        double back = 0.0;
        std::from_chars(s.data(), s.data() + s.size(), back);
        EXPECT_EQ(back, v) << s;
    }
    EXPECT_EQ(format_number(std::numeric_limits<double>::infinity()), "inf");
    EXPECT_EQ(format_number(std::nan("")), "nan");
    EXPECT_EQ(format_number(5.0), "5");
}

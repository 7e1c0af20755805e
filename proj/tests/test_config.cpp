#include "stirap/config.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>

using namespace stirap;
using nlohmann::json;

namespace {

const std::string kConfigDir = STIRAP_CONFIG_DIR;

json minimal() {
  return json::parse(R"({
    "schema_version": 1,
    "system": {"variant": "rwa", "kappa": 0.0},
    "pulses": {"g_peak": 0.2, "T": 50.0, "tau_over_T": 0.7},
    "initial_state": [{"label": "0ge", "amplitude": 1.0}]
  })");
}

bool mentions(const ConfigError& e, const std::string& field) {
  return std::any_of(e.issues().begin(), e.issues().end(),
                     [&](const std::string& s) { return s.rfind(field, 0) == 0; });
}

void expect_issue(const json& j, const std::string& field) {
  try {
    (void)parse_config(j);
    FAIL() << "expected ConfigError naming " << field;
  } catch (const ConfigError& e) {
    EXPECT_TRUE(mentions(e, field)) << e.what();
  }
}

}  // namespace

TEST(Config, MinimalDefaults) {
  const auto loaded = parse_config(minimal());
  const RunConfig& c = loaded.config;
  EXPECT_TRUE(loaded.warnings.empty());
  EXPECT_EQ(c.system.variant, Variant::rwa);
  EXPECT_DOUBLE_EQ(c.pulses.tau, 35.0);
  EXPECT_DOUBLE_EQ(c.pulses.t_start, -35.0 - 150.0);
  EXPECT_DOUBLE_EQ(c.pulses.t_end, 35.0 + 150.0);
  EXPECT_EQ(c.n_max, 8);
  EXPECT_EQ(c.integrator.rtol, 1e-11);
  EXPECT_FALSE(c.sweep);
}

TEST(Config, ShippedExamplesLoad) {
  for (const char* name : {"fig1.cfg", "fig2a.cfg", "fig2b.cfg", "fig2c.cfg"}) {
    const auto loaded = load_config(kConfigDir + "/" + name);
    EXPECT_TRUE(loaded.warnings.empty()) << name;
  }
  const RunConfig fig1 = load_config(kConfigDir + "/fig1.cfg").config;
  EXPECT_EQ(fig1.system.variant, Variant::full_rabi);
  EXPECT_DOUBLE_EQ(fig1.system.kappa, 0.005);
  EXPECT_NEAR(fig1.pulses.tau, 0.7 * fig1.pulses.T, 1e-12);
  ASSERT_EQ(fig1.initial_state.size(), 2u);
  EXPECT_NEAR(std::norm(fig1.initial_state[0].value), 0.2, 1e-15);
  EXPECT_NEAR(std::norm(fig1.initial_state[1].value), 0.8, 1e-15);
  EXPECT_NEAR(fig1.initial_state[1].value.imag(), std::sqrt(0.8), 1e-15);

  const RunConfig fig2b = load_config(kConfigDir + "/fig2b.cfg").config;
  ASSERT_TRUE(fig2b.sweep);
  EXPECT_EQ(fig2b.sweep->axis1.name, Axis::g_peak);
  EXPECT_EQ(fig2b.sweep->axis2.name, Axis::T);
  EXPECT_EQ(fig2b.sweep_spec().size(), 41u * 41u);
}

TEST(Config, RoundTripPreservesParameters) {
  for (const char* name : {"fig1.cfg", "fig2b.cfg", "fig2c.cfg"}) {
    const RunConfig first = load_config(kConfigDir + "/" + name).config;
    const RunConfig second = parse_config_text(to_json(first).dump()).config;
    EXPECT_EQ(first, second) << name;
    EXPECT_EQ(to_json(first), to_json(second));
  }
}

TEST(Config, RoundTripThroughFile) {
  RunConfig c = parse_config(minimal()).config;
  c.system.delta_p = 0.1 / 3.0;
  c.sweep = SweepSection{{Axis::delta, -0.2, 0.2, 5}, {Axis::delta_p, -0.1, 0.3, 3}};
  c.sweep->gT = 12.5;
  c.sweep->kappa_table = {{0.1, 0.001}, {0.5, 0.01}};
  const auto path = std::filesystem::temp_directory_path() / "stirap_roundtrip.cfg";
  save_config(c, path.string());
  EXPECT_EQ(load_config(path.string()).config, c);
  std::filesystem::remove(path);
}

TEST(Config, NegativeWidthNamesField) {
  json j = minimal();
  j["pulses"]["T"] = -3.0;
  expect_issue(j, "pulses.T");
}

TEST(Config, FieldLevelErrors) {
  json j = minimal();
  j.erase("system");
  expect_issue(j, "system");

  j = minimal();
  j["system"]["variant"] = "jaynes";
  expect_issue(j, "system.variant");

  j = minimal();
  j["system"]["kappa"] = -1.0;
  expect_issue(j, "system.kappa");

  j = minimal();
  j["system"]["omega_c"] = 2.0;
  expect_issue(j, "system.omega_c");

  j = minimal();
  j["pulses"]["tau"] = 3.0;
  expect_issue(j, "pulses.tau");

  j = minimal();
  j["pulses"]["g_peak"] = "big";
  expect_issue(j, "pulses.g_peak");

  j = minimal();
  j["initial_state"][0]["label"] = "0gx";
  expect_issue(j, "initial_state[0].label");

  j = minimal();
  j["initial_state"][0]["label"] = "9gg";
  expect_issue(j, "initial_state[0].label");

  j = minimal();
  j["initial_state"][0]["amplitude"] = "one";
  expect_issue(j, "initial_state[0].amplitude");

  j = minimal();
  j["schema_version"] = 7;
  expect_issue(j, "schema_version");

  j = minimal();
  j["pulses"]["widht"] = 3.0;
  expect_issue(j, "pulses.widht");

  j = minimal();
  j["sweep"] = {{"axis1", {{"name", "g_peak"}, {"min", 0.1}, {"max", 0.2}, {"points", 1}}},
                {"axis2", {{"name", "g_peak"}, {"min", 0.1}, {"max", 0.2}, {"points", 3}}}};
  expect_issue(j, "sweep.axis1.points");
  expect_issue(j, "sweep.axis2.name");

  EXPECT_THROW(parse_config_text("{not json"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.cfg"), ConfigError);
}

TEST(Config, AmplitudesNormalizedWithWarning) {
  json j = minimal();
  j["initial_state"] = json::parse(R"([{"label":"0gg","amplitude":[1,0]},
                                       {"label":"0ge","amplitude":[0,1]}])");
  const auto loaded = parse_config(j);
  ASSERT_EQ(loaded.warnings.size(), 1u);
  double norm2 = 0.0;
  for (const auto& a : loaded.config.initial_state) norm2 += std::norm(a.value);
  EXPECT_NEAR(norm2, 1.0, 1e-15);

  j["initial_state"] = json::parse(R"([{"label":"0gg","amplitude":0}])");
  expect_issue(j, "initial_state");
}

TEST(Config, NarrowWindowWarns) {
  json j = minimal();
  j["pulses"]["t_start"] = -40.0;
  j["pulses"]["t_end"] = 40.0;
  const auto loaded = parse_config(j);
  EXPECT_EQ(loaded.warnings.size(), 1u);
  EXPECT_DOUBLE_EQ(loaded.config.pulses.t_start, -40.0);
}

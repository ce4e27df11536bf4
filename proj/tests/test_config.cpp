#include <doctest.h>

#include <json.hpp>

#include "tdid/config.hpp"
#include "tdid/example.hpp"

using namespace tdid;

TEST_CASE("config round-trip is the identity on the serialized form") {
  const ExperimentConfig cfg = example_config();
  const std::string text = config_to_json(cfg);
  const ExperimentConfig back = parse_config(text);
  CHECK(config_to_json(back) == text);
}

TEST_CASE("parsed benchmark config matches the in-memory one") {
  const ExperimentConfig cfg = parse_config(config_to_json(example_config()));
  CHECK(cfg.version == 1);
  CHECK(cfg.plant.n == 2);
  CHECK(cfg.plant.slots() == 4);
  CHECK(cfg.plant.delays[2] == 1.7);
  CHECK(cfg.plant.A[0](1, 0) == -2.0);
  CHECK(cfg.plant.phi_name == "cube_root");
  REQUIRE(cfg.grid.has_value());
  CHECK(cfg.identifier.gains[0].A(0, 0) == 400.0);
  CHECK(cfg.identifier.K[0][1] == 2.0);
  CHECK(cfg.input.sines.size() == 5);
  REQUIRE(cfg.input.pulse.has_value());
  CHECK(cfg.input.pulse->duty == 0.5);
  CHECK(cfg.sim.h == 1e-3);
  CHECK(cfg.lmi.mode == PsiMode::Derived);
  CHECK(cfg.pe.window == 1000.0);
}

TEST_CASE("unknown keys are rejected") {
  auto j = nlohmann::json::parse(config_to_json(example_config()));
  j["plant"]["bogus"] = 1;
  try {
    parse_config(j.dump());
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("bogus") != std::string::npos);
  }

  auto j2 = nlohmann::json::parse(config_to_json(example_config()));
  j2["extra_section"] = nlohmann::json::object();
  CHECK_THROWS_AS(parse_config(j2.dump()), ConfigError);
}

TEST_CASE("missing keys are reported with their section") {
  auto j = nlohmann::json::parse(config_to_json(example_config()));
  j["plant"].erase("delays");
  try {
    parse_config(j.dump());
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("delays") != std::string::npos);
  }

  auto j2 = nlohmann::json::parse(config_to_json(example_config()));
  j2["identifier"].erase("gains");
  CHECK_THROWS_AS(parse_config(j2.dump()), ConfigError);
}

TEST_CASE("malformed JSON reports line and column") {
  const std::string text = "{\n  \"version\": 1,\n  oops\n}";
  try {
    parse_config(text);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK(msg.find("column") != std::string::npos);
  }
}

TEST_CASE("unsupported version is rejected") {
  auto j = nlohmann::json::parse(config_to_json(example_config()));
  j["version"] = 2;
  CHECK_THROWS_AS(parse_config(j.dump()), ConfigError);
}

TEST_CASE("grid term counts reach the identifier's active set") {
  auto j = nlohmann::json::parse(config_to_json(example_config()));
  j["grid"]["term_counts"] = {{"A", 2}, {"D", 3}, {"G", 1}, {"B", 4}};
  const ExperimentConfig cfg = parse_config(j.dump());
  CHECK(cfg.identifier.active.A == 2);
  CHECK(cfg.identifier.active.D == 3);
  CHECK(cfg.identifier.active.G == 1);
  CHECK(cfg.identifier.active.B == 4);
}

TEST_CASE("inconsistent plant sections fail with a clear error") {
  auto j = nlohmann::json::parse(config_to_json(example_config()));
  j["plant"]["delays"] = {0.0, 1.0};  // matrix lists still have 4 entries
  CHECK_THROWS_AS(parse_config(j.dump()), ConfigError);

  auto j2 = nlohmann::json::parse(config_to_json(example_config()));
  j2["sim"]["interpolation"] = "spline";
  CHECK_THROWS_AS(parse_config(j2.dump()), ConfigError);
}

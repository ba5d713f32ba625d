#include "opideal/cli.hpp"
#include "opideal/schema_check.hpp"

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace opideal;
using namespace opideal::cli;

namespace {

RunConfig config_for(const std::string& command, const std::string& lemma = "formal-id") {
  json j = {{"command", command}, {"lemma", lemma}};
  if (command == "separate") j["budgets"] = {{"samples", 150}};
  return parse_config(j);
}

std::vector<RunConfig> all_commands() {
  std::vector<RunConfig> out;
  for (const auto& c : command_names()) {
    if (c == "report-validate") continue;
    if (c == "factorize")
      for (const auto& l : lemma_names()) out.push_back(config_for(c, l));
    else
      out.push_back(config_for(c));
  }
  return out;
}

int shell(const std::string& args) {
  const std::string cmd = std::string(OPIDEAL_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "opideal_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("config round trip and echo") {
  json j = {{"command", "factorize"},
            {"schedule", {{"p", 3}, {"levels", {{{"u", 2}, {"v", 6}}, {{"u", 5}, {"v", 9}}}}}},
            {"seed", 42},
            {"budgets", {{"subset_cap", 1000}, {"samples", 7}}},
            {"M", {1, 2}},
            {"N", {2}},
            {"m", 1},
            {"lemma", "embedding"},
            {"post_pass", "none"},
            {"out", "x.json"}};
  const RunConfig c = parse_config(j);
  CHECK(c.seed == 42);
  CHECK(c.budgets.subset_cap == 1000);
  CHECK(c.M == std::vector<std::size_t>{1, 2});
  CHECK(parse_config(to_json(c)) == c);
  const json echo = config_echo(c);
  CHECK_FALSE(echo.contains("out"));
  CHECK(to_json(c)["out"] == "x.json");
  CHECK(resolve_schedule(c.schedule).level_count() == 2);
}

TEST_CASE("invalid configs are usage errors") {
  CHECK_THROWS_AS(parse_config({{"command", "build"}, {"colour", 1}}), UsageError);
  CHECK_THROWS_AS(parse_config({{"command", "dance"}}), UsageError);
  CHECK_THROWS_AS(parse_config({{"command", "factorize"}, {"lemma", "magic"}}), UsageError);
  CHECK_THROWS_AS(parse_config({{"command", "build"}, {"post_pass", "shiny"}}), UsageError);
  CHECK_THROWS_AS(parse_config({{"command", "build"}, {"seed", -1}}), UsageError);
  CHECK_THROWS_AS(parse_config({{"command", "build"}, {"m", 0}}), UsageError);
  CHECK_THROWS_AS(parse_config({{"command", "build"}, {"budgets", {{"speed", 1}}}}), UsageError);
  CHECK_THROWS_AS(resolve_schedule("enormous"), std::invalid_argument);
  CHECK_THROWS_AS(resolve_schedule(json{{"p", 2}, {"levels", json::array()}}), UsageError);
  CHECK_THROWS_AS(run(parse_config({{"command", "separate"}, {"M", {1, 2}}, {"N", {1}}})), UsageError);
  CHECK_THROWS_AS(run(parse_config({{"command", "factorize"}, {"m", 9}})), UsageError);
}

TEST_CASE("reports are deterministic across thread counts and schema-valid") {
  const json schema = load_schema("report.schema.json");
  for (const auto& cfg : all_commands()) {
    INFO(cfg.command, " ", cfg.lemma);
    const RunOutcome one = run(cfg, RunOptions{1});
    const RunOutcome four = run(cfg, RunOptions{4});
    CHECK(strip_timing(one.report) == strip_timing(four.report));
    CHECK(one.exit_code == 0);
    CHECK(one.exit_code == exit_code_for(one.report));
    const auto errors = validate_json(one.report, schema);
    CHECK(errors.empty());
    for (const auto& e : errors) MESSAGE(e);
    CHECK(one.report["config"] == config_echo(cfg));
    CHECK(one.report["tool"]["name"] == kToolName);
  }
}

TEST_CASE("strip_timing removes timing keys at every depth") {
  json j = {{"wall_ms", 3}, {"a", {{"elapsed_ms", 1}, {"b", json::array({{{"runtime", 2}, {"c", 4}}})}}}};
  const json s = strip_timing(j);
  CHECK_FALSE(s.contains("wall_ms"));
  CHECK_FALSE(s["a"].contains("elapsed_ms"));
  CHECK(s["a"]["b"][0] == json{{"c", 4}});
}

TEST_CASE("exit codes") {
  json fail = {{"verdicts", json::array({{{"status", "pass"}}, {{"status", "fail"}}})}};
  CHECK(exit_code_for(fail) == 1);
  json cond = {{"verdicts", json::array({{{"status", "conditional"}}, {{"status", "info"}}})}};
  CHECK(exit_code_for(cond) == 0);
}

TEST_CASE("schema validator subset") {
  const json schema = {{"type", "object"},
                       {"required", {"a"}},
                       {"properties", {{"a", {{"type", "integer"}, {"minimum", 1}}}, {"b", {{"enum", {"x", "y"}}}}}},
                       {"additionalProperties", false}};
  CHECK(validate_json({{"a", 2}}, schema).empty());
  CHECK_FALSE(validate_json({{"a", 0}}, schema).empty());
  CHECK_FALSE(validate_json({{"b", "x"}}, schema).empty());
  CHECK_FALSE(validate_json({{"a", 1}, {"b", "z"}}, schema).empty());
  CHECK_FALSE(validate_json({{"a", 1}, {"c", 1}}, schema).empty());
  CHECK(validate_json({{"colour", 1}}, load_schema("config.schema.json")).size() >= 1);
  CHECK(validate_json(to_json(config_for("build")), load_schema("config.schema.json")).empty());
}

TEST_CASE("command-line tool") {
  CHECK(shell("--version") == 0);
  CHECK(shell("frobnicate") == 2);
  CHECK(shell("build --seed notanumber") == 2);
  CHECK(shell("build --schedule enormous") == 2);
  CHECK(shell("factorize --lemma magic") == 2);
  CHECK(shell("separate -m 2 --M 1,2 --N 2") == 2);

  const auto cert = scratch("certify.json");
  REQUIRE(shell("rip certify --out " + cert.string()) == 0);
  std::ifstream in(cert);
  const json report = json::parse(in);
  bool exhaustive = true;
  for (const auto& c : report["certificates"]) exhaustive = exhaustive && c["mode"] == "exhaustive";
  CHECK(exhaustive);
  CHECK(shell("report validate " + cert.string()) == 0);

  const auto bad = scratch("bad.json");
  std::ofstream(bad) << R"({"tool": 1})";
  CHECK(shell("report validate " + bad.string()) == 1);
  CHECK(shell("report validate " + scratch("missing.json").string()) == 2);

  const auto csv = scratch("profile.csv");
  CHECK(shell("fss-probe --dims 1,2 --csv " + csv.string() + " --out " + scratch("fss.json").string()) == 0);
  std::ifstream cin(csv);
  std::string header;
  std::getline(cin, header);
  CHECK(header == "d,value,raw_value,worst,trials,method");
}

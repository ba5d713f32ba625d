// opideal: command-line front end.

#include "opideal/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

using opideal::json;
using opideal::cli::RunConfig;
using opideal::cli::UsageError;

struct Flags {
  std::string config_file;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<std::uint64_t> budget;
  std::optional<std::string> out;
  std::optional<std::string> schedule;
  std::optional<std::size_t> m;
  std::optional<std::string> M;
  std::optional<std::string> N;
  std::optional<std::size_t> samples;
  std::optional<std::string> lemma;
  std::optional<std::string> post_pass;
  std::optional<std::string> orders;
  std::optional<std::string> dims;
  std::optional<std::size_t> level;
  std::optional<std::size_t> M_cols;
  std::optional<std::string> csv;
  std::string input;
};

std::vector<std::size_t> parse_list(const std::string& text, const std::string& what) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t pos = 0;
      const unsigned long v = std::stoul(item, &pos);
      if (pos != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw UsageError(what + ": '" + item + "' is not a non-negative integer");
    }
  }
  return out;
}

json schedule_arg(const std::string& text) {
  if (!text.empty() && text.front() == '{') return json::parse(text);
  if (std::filesystem::exists(text)) {
    std::ifstream in(text);
    return json::parse(in);
  }
  return text;
}

void add_common(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config_file, "JSON run configuration");
  app->add_option("--seed", f.seed, "64-bit seed");
  app->add_option("--threads", f.threads, "worker threads (default: OPIDEAL_THREADS or 1)");
  app->add_option("--budget", f.budget, "subset enumeration cap");
  app->add_option("--out", f.out, "write the JSON report here instead of stdout");
  app->add_option("--schedule", f.schedule, "preset name, inline JSON or JSON file");
  app->add_option("-m,--level-m", f.m, "level m");
  app->add_option("--M", f.M, "mask M, comma separated");
  app->add_option("--N", f.N, "mask N, comma separated");
  app->add_option("--samples", f.samples, "sample count (0 = command default)");
  app->add_option("--post-pass", f.post_pass, "none | orthonormalize | refine");
}

RunConfig build_config(const std::string& command, const Flags& f) {
  json j = json::object();
  if (!f.config_file.empty()) {
    std::ifstream in(f.config_file);
    if (!in) throw UsageError("cannot open config " + f.config_file);
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw UsageError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw UsageError("config must be a JSON object");
  }
  j["command"] = command;
  if (f.seed) j["seed"] = *f.seed;
  if (f.schedule) {
    try {
      j["schedule"] = schedule_arg(*f.schedule);
    } catch (const json::exception& e) {
      throw UsageError(std::string("schedule is not valid JSON: ") + e.what());
    }
  }
  if (f.budget || f.samples) {
    if (!j.contains("budgets")) j["budgets"] = json::object();
    if (f.budget) j["budgets"]["subset_cap"] = *f.budget;
    if (f.samples) j["budgets"]["samples"] = *f.samples;
  }
  if (f.out) j["out"] = *f.out;
  if (f.m) j["m"] = *f.m;
  if (f.M) j["M"] = parse_list(*f.M, "--M");
  if (f.N) j["N"] = parse_list(*f.N, "--N");
  if (f.lemma) j["lemma"] = *f.lemma;
  if (f.post_pass) j["post_pass"] = *f.post_pass;
  if (f.orders) j["orders"] = parse_list(*f.orders, "--orders");
  if (f.dims) j["dims"] = parse_list(*f.dims, "--dims");
  if (f.level) j["level"] = *f.level;
  if (f.M_cols) j["M_cols"] = *f.M_cols;
  if (f.csv) j["csv"] = *f.csv;
  if (!f.input.empty()) j["input"] = f.input;
  return opideal::cli::parse_config(j);
}

void write_csv(const std::string& path, const json& report) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write " + path);
  out << "d,value,raw_value,worst,trials,method\n";
  out.precision(17);
  for (const auto& e : report["results"]["profile"])
    out << e["d"] << ',' << e["value"] << ',' << e["raw_value"] << ',' << e["worst"] << ',' << e["trials"]
        << ',' << e["method"].get<std::string>() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Operator-ideal experiments on block sequence spaces"};
  app.set_version_flag("--version", std::string(opideal::cli::kToolVersion));
  app.require_subcommand(1);
  Flags flags;
  std::string command;

  auto* rip = app.add_subcommand("rip", "column families and Gram certificates");
  rip->require_subcommand(1);
  auto* rip_gen = rip->add_subcommand("gen", "generate a column family");
  auto* rip_cert = rip->add_subcommand("certify", "certify Gram submatrix spectra");
  auto* build = app.add_subcommand("build", "build T_M and check the functionals");
  auto* fact = app.add_subcommand("factorize", "run a factorization lemma");
  auto* sep = app.add_subcommand("separate", "separation experiment");
  auto* fss = app.add_subcommand("fss-probe", "finite strict singularity probes");
  auto* report = app.add_subcommand("report", "report utilities");
  report->require_subcommand(1);
  auto* validate = report->add_subcommand("validate", "validate a report against the schema");

  for (auto* sc : {rip_gen, rip_cert, build, fact, sep, fss, validate}) add_common(sc, flags);
  rip_cert->add_option("--orders", flags.orders, "explicit orders, comma separated");
  fact->add_option("--lemma", flags.lemma, "formal-id | identity-through-tn | embedding | large-ideals");
  fact->add_option("--level", flags.level, "level n (identity-through-tn)");
  fact->add_option("--M-cols", flags.M_cols, "column pool size (identity-through-tn)");
  fss->add_option("--dims", flags.dims, "profile dimensions, comma separated");
  fss->add_option("--csv", flags.csv, "write the profile as CSV");
  validate->add_option("FILE", flags.input, "report JSON")->required();

  rip_gen->callback([&] { command = "rip-gen"; });
  rip_cert->callback([&] { command = "rip-certify"; });
  build->callback([&] { command = "build"; });
  fact->callback([&] { command = "factorize"; });
  sep->callback([&] { command = "separate"; });
  fss->callback([&] { command = "fss-probe"; });
  validate->callback([&] { command = "report-validate"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const RunConfig cfg = build_config(command, flags);
    opideal::cli::RunOptions opts;
    if (flags.threads) opts.threads = *flags.threads;
    const auto outcome = opideal::cli::run(cfg, opts);
    const std::string text = outcome.report.dump(2) + "\n";
    if (cfg.out.empty()) {
      std::cout << text;
    } else {
      std::ofstream out(cfg.out);
      if (!out) throw UsageError("cannot write " + cfg.out);
      out << text;
    }
    if (!cfg.csv.empty()) write_csv(cfg.csv, outcome.report);
    for (const auto& v : outcome.report["verdicts"])
      std::cerr << '[' << v["status"].get<std::string>() << "] " << v["name"].get<std::string>() << ": "
                << v["detail"].get<std::string>() << '\n';
    return outcome.exit_code;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

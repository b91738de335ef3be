// opgeom: verify the geometric content of a 2x2 first-order operator.
//
//   opgeom verify <config.json> [--suite NAME]... [--format text|json]
//                 [--seed N] [--samples N] [--out PATH]
//   opgeom preset <name> --out PATH
//
// Exit codes: 0 all suites pass, 1 any suite fails, 2 config or validation
// error.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "opgeom/opgeom.hpp"

namespace {

int run_verify(const std::string& config_path, const std::vector<std::string>& suites,
               const std::string& format, std::int64_t seed, int samples,
               const std::string& out_path) {
  opgeom::VerificationConfig cfg = opgeom::load_config(config_path);
  if (!suites.empty()) {
    for (const std::string& s : suites) {
      if (std::find(opgeom::suite_names().begin(), opgeom::suite_names().end(), s) ==
          opgeom::suite_names().end())
        throw opgeom::ValidationError("unknown suite '" + s + "'");
    }
    cfg.suites = suites;
  }
  if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
  if (samples > 0) cfg.chart.sample_count = samples;

  std::vector<opgeom::SuiteReport> reports = opgeom::run_suites(cfg);
  std::string doc = opgeom::emit_report(reports, cfg, format);
  if (out_path.empty()) {
    std::cout << doc;
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw opgeom::ValidationError("cannot write report to " + out_path);
    out << doc;
  }
  return opgeom::all_passed(reports) ? 0 : 1;
}

int run_preset(const std::string& name, const std::string& out_path) {
  opgeom::json j = opgeom::preset_config(name);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw opgeom::ValidationError("cannot write preset to " + out_path);
  out << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"verification harness for the operator-implied Dirac geometry"};
  app.require_subcommand(1);

  auto* verify = app.add_subcommand("verify", "run verification suites on a config");
  std::string config_path;
  std::vector<std::string> suites;
  std::string format = "text";
  std::int64_t seed = -1;
  int samples = 0;
  std::string out_path;
  verify->add_option("config", config_path, "path to a JSON config")->required();
  verify->add_option("--suite", suites, "run only the named suite (repeatable)");
  verify->add_option("--format", format, "report format")
      ->check(CLI::IsMember({"text", "json"}));
  verify->add_option("--seed", seed, "override the sampling seed");
  verify->add_option("--samples", samples, "override the x-sample count");
  verify->add_option("--out", out_path, "write the report to a file");

  auto* preset = app.add_subcommand("preset", "write a catalog preset config");
  std::string preset_name;
  std::string preset_out;
  preset->add_option("name", preset_name, "preset name")
      ->required()
      ->check(CLI::IsMember(opgeom::preset_names()));
  preset->add_option("--out", preset_out, "output path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (verify->parsed()) return run_verify(config_path, suites, format, seed, samples, out_path);
    return run_preset(preset_name, preset_out);
  } catch (const opgeom::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const opgeom::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

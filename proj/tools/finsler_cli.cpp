// finsler: run one verification command from a config file and write the
// JSON and CSV reports into the output directory.
//
//   finsler <command> --config PATH [--out DIR] [--workers N] [--tol X]
//
// Exit codes: 0 all checks pass, 1 a check failed, 2 config error,
// 3 numerical failure (the module diagnostic goes to stderr).

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "finsler/config.hpp"
#include "finsler/driver.hpp"

namespace {

std::string utc_timestamp() {
  std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

int run(const std::string& command, const std::string& config_path, const std::string& out_dir,
        bool workers_set, int workers, bool tol_set, double tol) {
  finsler::Config cfg = finsler::Config::from_file(config_path);
  if (workers_set) cfg.override_value("workers", std::to_string(workers));
  if (tol_set) {
    std::ostringstream v;
    v << std::setprecision(17) << tol;
    for (const char* key : {"tol.santalo", "tol.reference", "tol.reference_coarse", "tol.omega",
                            "tol.energy", "tol.equality"})
      cfg.override_value(key, v.str());
  }
  if (!out_dir.empty()) cfg.override_value("out", out_dir);

  finsler::CommandOutput res = finsler::run_command(command, cfg, utc_timestamp());

  std::filesystem::path dir(cfg.str("out"));
  std::filesystem::create_directories(dir);
  std::ofstream(dir / (command + ".json")) << res.json;
  std::ofstream(dir / (command + ".csv")) << res.csv;

  std::cout << res.csv;
  if (res.exit_code == 3) std::cerr << "numerical failure: " << res.diagnostic << "\n";
  std::cout << (res.exit_code == 0 ? "PASS " : "FAIL ") << command << " -> "
            << (dir / (command + ".json")).string() << "\n";
  return res.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finsler geometry verification reports"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  int workers = 1;
  double tol = 0.0;
  CLI::Option* config_opt = app.add_option("--config", config_path, "config file")->required();
  CLI::Option* out_opt = app.add_option("--out", out_dir, "output directory override");
  CLI::Option* workers_opt = app.add_option("--workers", workers, "worker threads override");
  CLI::Option* tol_opt = app.add_option("--tol", tol, "override every tol.* key");
  (void)config_opt;
  (void)out_opt;

  for (const std::string& name : finsler::command_names())
    app.add_subcommand(name, "")->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return run(command, config_path, out_dir, workers_opt->count() > 0, workers,
               tol_opt->count() > 0, tol);
  } catch (const finsler::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 3;
  }
}

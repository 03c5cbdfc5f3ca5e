// Experiment CLI.  Talks to the library exclusively through the C API so it
// doubles as a living example of driving libspsgd from another language.
#include <cstdint>
#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "spsgd.h"

namespace {

struct StringGuard {
  char* s = nullptr;
  ~StringGuard() { spsgd_string_free(s); }
};

struct ConfigGuard {
  spsgd_config* cfg = nullptr;
  ~ConfigGuard() { spsgd_config_free(cfg); }
};

int report_error(int code) {
  std::fprintf(stderr, "error: %s\n", spsgd_last_error());
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stochastically preconditioned SGD experiment toolkit"};
  app.require_subcommand(1);

  std::uint64_t seed = 42;
  std::string out_root;
  int jobs = 1;
  std::string format = "csv";
  auto* seed_opt = app.add_option("--seed", seed, "base RNG seed override");
  auto* out_opt = app.add_option("--out", out_root, "output root directory");
  app.add_option("--jobs", jobs, "maximum concurrent runs")
      ->check(CLI::PositiveNumber);
  app.add_option("--format", format, "report format printed to stdout")
      ->check(CLI::IsMember({"csv", "json"}));

  auto* run_cmd =
      app.add_subcommand("run", "execute the experiment grid from a config");
  std::string run_config;
  run_cmd->add_option("--config", run_config, "path to a JSON experiment config")
      ->required();
  run_cmd->fallthrough();

  auto* rates_cmd = app.add_subcommand(
      "rates", "run the grid and fit the log-log decay slope");
  std::string rates_config;
  rates_cmd
      ->add_option("--config", rates_config, "path to a JSON experiment config")
      ->required();
  rates_cmd->fallthrough();

  auto* verify_cmd =
      app.add_subcommand("verify", "run a named verification suite");
  std::string which;
  verify_cmd
      ->add_option("which", which,
                   "one of: scalar, burkholder, example1, epsilon, all")
      ->required();
  verify_cmd->fallthrough();

  auto* demo_cmd = app.add_subcommand(
      "demo-separation",
      "canonical scenario where step clipping stalls and step "
      "normalization converges");
  demo_cmd->fallthrough();

  CLI11_PARSE(app, argc, argv);

  const bool seed_given = seed_opt->count() > 0;
  const bool out_given = out_opt->count() > 0;
  const char* fmt = format.c_str();

  auto load_config = [&](const std::string& path, ConfigGuard& guard) {
    int rc = spsgd_config_load(path.c_str(), &guard.cfg);
    if (rc == SPSGD_OK && seed_given)
      rc = spsgd_config_set_seed(guard.cfg, seed);
    return rc;
  };

  if (*run_cmd || *rates_cmd) {
    ConfigGuard cfg;
    int rc = load_config(*run_cmd ? run_config : rates_config, cfg);
    if (rc != SPSGD_OK) return report_error(rc);
    StringGuard text, dir;
    const char* root = out_given ? out_root.c_str() : nullptr;
    rc = *run_cmd
             ? spsgd_run_experiment(cfg.cfg, jobs, root, fmt, &text.s, &dir.s)
             : spsgd_rates_report(cfg.cfg, jobs, root, fmt, &text.s, &dir.s);
    if (rc != SPSGD_OK) return report_error(rc);
    std::fputs(text.s, stdout);
    if (dir.s && dir.s[0] != '\0')
      std::fprintf(stderr, "outputs: %s\n", dir.s);
    return 0;
  }

  if (*verify_cmd) {
    StringGuard text;
    int all_pass = 0;
    const int rc =
        spsgd_verify_suite(which.c_str(), seed, fmt, &text.s, &all_pass);
    if (rc != SPSGD_OK) return report_error(rc);
    std::fputs(text.s, stdout);
    return all_pass ? 0 : 1;
  }

  if (*demo_cmd) {
    const std::string dir = out_given ? out_root : "out/separation";
    StringGuard text;
    int all_pass = 0;
    const int rc = spsgd_separation_demo(dir.c_str(), seed, jobs, fmt,
                                         &text.s, &all_pass);
    if (rc != SPSGD_OK) return report_error(rc);
    std::fputs(text.s, stdout);
    std::fprintf(stderr, "outputs: %s\n", dir.c_str());
    return all_pass ? 0 : 1;
  }

  return 0;  // unreachable: require_subcommand(1)
}

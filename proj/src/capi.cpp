#include "spsgd.h"

#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>

#include "spsgd/experiment.hpp"
#include "spsgd/util.hpp"

struct spsgd_config {
  spsgd::ExperimentConfig cfg;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

int fail(int code, const std::string& message) {
  g_last_error = message;
  return code;
}

// Runs `fn` and folds any exception into a status code + last-error text.
template <typename Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return SPSGD_OK;
  } catch (const spsgd::ParseError& e) {
    return fail(SPSGD_ERR_PARSE, e.what());
  } catch (const spsgd::SchemaError& e) {
    return fail(SPSGD_ERR_SCHEMA, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(SPSGD_ERR_ARGUMENT, e.what());
  } catch (const std::domain_error& e) {
    return fail(SPSGD_ERR_ARGUMENT, e.what());
  } catch (const std::runtime_error& e) {
    return fail(SPSGD_ERR_IO, e.what());
  } catch (const std::exception& e) {
    return fail(SPSGD_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(SPSGD_ERR_INTERNAL, "unknown error");
  }
}

bool valid_format(const char* format) {
  return format == nullptr || std::strcmp(format, "csv") == 0 ||
         std::strcmp(format, "json") == 0;
}

bool want_csv(const char* format) {
  return format != nullptr && std::strcmp(format, "csv") == 0;
}

}  // namespace

extern "C" {

const char* spsgd_version(void) { return "1.0.0"; }

const char* spsgd_last_error(void) { return g_last_error.c_str(); }

void spsgd_string_free(char* s) { std::free(s); }

int spsgd_config_parse(const char* json_text, spsgd_config** out) {
  if (!json_text || !out)
    return fail(SPSGD_ERR_ARGUMENT, "json_text and out must be non-null");
  *out = nullptr;
  return guarded([&] {
    auto* handle = new spsgd_config{spsgd::ExperimentConfig::parse_text(json_text)};
    *out = handle;
  });
}

int spsgd_config_load(const char* path, spsgd_config** out) {
  if (!path || !out)
    return fail(SPSGD_ERR_ARGUMENT, "path and out must be non-null");
  *out = nullptr;
  return guarded([&] {
    auto* handle = new spsgd_config{spsgd::ExperimentConfig::load_file(path)};
    *out = handle;
  });
}

void spsgd_config_free(spsgd_config* cfg) { delete cfg; }

int spsgd_config_set_seed(spsgd_config* cfg, uint64_t seed) {
  if (!cfg) return fail(SPSGD_ERR_ARGUMENT, "cfg must be non-null");
  cfg->cfg.seed = seed;
  g_last_error.clear();
  return SPSGD_OK;
}

int spsgd_config_canonical_json(const spsgd_config* cfg, char** out_text) {
  if (!cfg || !out_text)
    return fail(SPSGD_ERR_ARGUMENT, "cfg and out_text must be non-null");
  return guarded([&] { *out_text = dup_string(cfg->cfg.canonical_json()); });
}

int spsgd_config_digest(const spsgd_config* cfg, char** out_text) {
  if (!cfg || !out_text)
    return fail(SPSGD_ERR_ARGUMENT, "cfg and out_text must be non-null");
  return guarded([&] { *out_text = dup_string(cfg->cfg.digest()); });
}

int spsgd_config_output_dir(const spsgd_config* cfg, char** out_text) {
  if (!cfg || !out_text)
    return fail(SPSGD_ERR_ARGUMENT, "cfg and out_text must be non-null");
  return guarded([&] { *out_text = dup_string(cfg->cfg.output_dir); });
}

int spsgd_run_experiment(const spsgd_config* cfg, int jobs,
                         const char* out_root, const char* format,
                         char** out_text, char** out_dir) {
  if (!cfg || !out_text)
    return fail(SPSGD_ERR_ARGUMENT, "cfg and out_text must be non-null");
  if (!valid_format(format))
    return fail(SPSGD_ERR_ARGUMENT, "format must be \"csv\" or \"json\"");
  return guarded([&] {
    const std::string root = out_root ? out_root : cfg->cfg.output_dir;
    const spsgd::ResultsTable table =
        spsgd::run_experiment(cfg->cfg, jobs, root);
    *out_text =
        dup_string(want_csv(format) ? table.summary_csv() : table.summary_json());
    if (out_dir) *out_dir = dup_string(table.out_dir);
  });
}

int spsgd_rates_report(const spsgd_config* cfg, int jobs, const char* out_root,
                       const char* format, char** out_text, char** out_dir) {
  if (!cfg || !out_text)
    return fail(SPSGD_ERR_ARGUMENT, "cfg and out_text must be non-null");
  if (!valid_format(format))
    return fail(SPSGD_ERR_ARGUMENT, "format must be \"csv\" or \"json\"");
  return guarded([&] {
    const std::string root = out_root ? out_root : cfg->cfg.output_dir;
    const spsgd::RatesReport rep = spsgd::run_rates(cfg->cfg, jobs, root);
    *out_text =
        dup_string(want_csv(format) ? rep.report_csv() : rep.report_json());
    if (out_dir) *out_dir = dup_string(rep.table.out_dir);
  });
}

int spsgd_verify_suite(const char* which, uint64_t seed, const char* format,
                       char** out_text, int* all_pass) {
  if (!which || !out_text)
    return fail(SPSGD_ERR_ARGUMENT, "which and out_text must be non-null");
  if (!valid_format(format))
    return fail(SPSGD_ERR_ARGUMENT, "format must be \"csv\" or \"json\"");
  return guarded([&] {
    const spsgd::VerifyOutcome out = spsgd::verify_suite(which, seed);
    *out_text =
        dup_string(want_csv(format) ? out.report_csv() : out.report_json());
    if (all_pass) *all_pass = out.all_pass ? 1 : 0;
  });
}

int spsgd_separation_demo(const char* out_dir, uint64_t seed, int jobs,
                          const char* format, char** out_text, int* all_pass) {
  if (!out_dir || !out_text)
    return fail(SPSGD_ERR_ARGUMENT, "out_dir and out_text must be non-null");
  if (!valid_format(format))
    return fail(SPSGD_ERR_ARGUMENT, "format must be \"csv\" or \"json\"");
  return guarded([&] {
    const spsgd::SeparationReport rep =
        spsgd::separation_demo(out_dir, seed, jobs);
    *out_text =
        dup_string(want_csv(format) ? rep.report_csv() : rep.report_json());
    if (all_pass) *all_pass = rep.all_pass ? 1 : 0;
  });
}

}  // extern "C"

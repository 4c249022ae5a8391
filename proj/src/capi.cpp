#include "rezrl.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <string>

#include "rezrl/config.hpp"
#include "rezrl/dataprep.hpp"
#include "rezrl/rng.hpp"
#include "rezrl/runner.hpp"

struct rezrl_config {
  rezrl::ExperimentConfig cfg;
};

struct rezrl_run {
  rezrl::runner::RunResult result;
};

namespace {

thread_local std::string g_last_error;

rezrl_status fail(rezrl_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <typename Fn>
rezrl_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const rezrl::ConfigError& e) {
    return fail(REZRL_ERR_CONFIG, e.what());
  } catch (const rezrl::dataprep::InsufficientSamples& e) {
    return fail(REZRL_ERR_INSUFFICIENT_SAMPLES, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(REZRL_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(REZRL_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(REZRL_ERR_INTERNAL, e.what());
  }
}

rezrl_status write_with(const rezrl_run* run, const char* path, const char* what,
                        void (*writer)(const rezrl::runner::RunResult&, std::ostream&)) {
  if (!run || !path) return fail(REZRL_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&]() -> rezrl_status {
    std::ofstream out(path, std::ios::binary);
    if (!out) return fail(REZRL_ERR_IO, std::string("cannot open ") + what + ": " + path);
    writer(run->result, out);
    out.flush();
    if (!out) return fail(REZRL_ERR_IO, std::string("write failed: ") + path);
    g_last_error.clear();
    return REZRL_OK;
  });
}

}  // namespace

extern "C" {

const char* rezrl_version(void) { return "0.1.0"; }

const char* rezrl_last_error(void) { return g_last_error.c_str(); }

rezrl_status rezrl_config_create(rezrl_config** out) {
  if (!out) return fail(REZRL_ERR_INVALID_ARGUMENT, "null output pointer");
  return guarded([&]() -> rezrl_status {
    *out = new rezrl_config{rezrl::default_config()};
    g_last_error.clear();
    return REZRL_OK;
  });
}

rezrl_status rezrl_config_load(const char* path, rezrl_config** out) {
  if (!path || !out) return fail(REZRL_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&]() -> rezrl_status {
    *out = new rezrl_config{rezrl::load_config(path)};
    g_last_error.clear();
    return REZRL_OK;
  });
}

rezrl_status rezrl_config_set(rezrl_config* cfg, const char* key, const char* value) {
  if (!cfg || !key || !value) return fail(REZRL_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&]() -> rezrl_status {
    rezrl::set_key(cfg->cfg, key, value);
    g_last_error.clear();
    return REZRL_OK;
  });
}

rezrl_status rezrl_config_get(const rezrl_config* cfg, const char* key, char* buf, size_t cap) {
  if (!cfg || !key || !buf || cap == 0) {
    return fail(REZRL_ERR_INVALID_ARGUMENT, "null argument or zero-capacity buffer");
  }
  return guarded([&]() -> rezrl_status {
    const std::string value = rezrl::get_key(cfg->cfg, key);
    const size_t n = value.size() < cap - 1 ? value.size() : cap - 1;
    std::memcpy(buf, value.data(), n);
    buf[n] = '\0';
    g_last_error.clear();
    return REZRL_OK;
  });
}

void rezrl_config_free(rezrl_config* cfg) { delete cfg; }

rezrl_status rezrl_run_experiment(const rezrl_config* cfg, rezrl_run** out) {
  if (!cfg || !out) return fail(REZRL_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&]() -> rezrl_status {
    *out = new rezrl_run{rezrl::runner::run_experiment(cfg->cfg)};
    g_last_error.clear();
    return REZRL_OK;
  });
}

size_t rezrl_run_step_count(const rezrl_run* run) {
  return run ? run->result.rows.size() : 0;
}

rezrl_status rezrl_run_write_metrics_jsonl(const rezrl_run* run, const char* path) {
  return write_with(run, path, "metrics file", &rezrl::runner::write_metrics_jsonl);
}

rezrl_status rezrl_run_write_metrics_csv(const rezrl_run* run, const char* path) {
  return write_with(run, path, "metrics file", &rezrl::runner::write_metrics_csv);
}

rezrl_status rezrl_run_write_report_json(const rezrl_run* run, const char* path) {
  return write_with(run, path, "report file", &rezrl::runner::write_report_json);
}

rezrl_status rezrl_run_write_params_json(const rezrl_run* run, const char* path) {
  return write_with(run, path, "params file", &rezrl::runner::write_params_json);
}

rezrl_status rezrl_run_write_outcomes_jsonl(const rezrl_run* run, const char* path) {
  return write_with(run, path, "outcomes file", &rezrl::runner::write_outcomes_jsonl);
}

rezrl_status rezrl_run_final_metrics(const rezrl_run* run, double* resize_ratio, double* accuracy,
                                     double* mean_reward) {
  if (!run) return fail(REZRL_ERR_INVALID_ARGUMENT, "null run");
  if (run->result.rows.empty()) return fail(REZRL_ERR_INTERNAL, "run has no metrics rows");
  const auto& row = run->result.rows.back();
  if (resize_ratio) *resize_ratio = row.resize_ratio;
  if (accuracy) *accuracy = row.accuracy;
  if (mean_reward) *mean_reward = row.mean_reward;
  g_last_error.clear();
  return REZRL_OK;
}

void rezrl_run_free(rezrl_run* run) { delete run; }

rezrl_status rezrl_classify_dataset(const rezrl_config* cfg, const char* out_jsonl_path,
                                    size_t* n_low_res_solvable, size_t* n_high_res_required) {
  if (!cfg || !out_jsonl_path) return fail(REZRL_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&]() -> rezrl_status {
    const rezrl::ExperimentConfig& config = cfg->cfg;
    rezrl::validate(config);

    std::vector<rezrl::env::TaskSpec> tasks;
    tasks.reserve(static_cast<std::size_t>(config.dataprep.n_tasks));
    for (int i = 0; i < config.dataprep.n_tasks; ++i) {
      tasks.push_back(rezrl::env::sample_task(
          config.tasks, rezrl::seed_stream(config.seed, 0x64617461ull,
                                           static_cast<std::uint64_t>(i))));
    }

    rezrl::env::EnvOptions env_options;
    env_options.cost = config.cost;
    const auto params = rezrl::policy::PolicyParams::init_from(config.policy_init);
    const auto set = rezrl::dataprep::build_training_set(tasks, params, config.dataprep,
                                                         env_options, config.seed);

    std::ofstream out(out_jsonl_path, std::ios::binary);
    if (!out) return fail(REZRL_ERR_IO, std::string("cannot open: ") + out_jsonl_path);
    rezrl::dataprep::write_jsonl(set, config.category_names(), out);
    out.flush();
    if (!out) return fail(REZRL_ERR_IO, std::string("write failed: ") + out_jsonl_path);

    size_t low = 0, high = 0;
    for (const auto& item : set) {
      if (item.cls == rezrl::dataprep::SampleClass::low_res_solvable) ++low;
      if (item.cls == rezrl::dataprep::SampleClass::high_res_required) ++high;
    }
    if (n_low_res_solvable) *n_low_res_solvable = low;
    if (n_high_res_required) *n_high_res_required = high;
    g_last_error.clear();
    return REZRL_OK;
  });
}

rezrl_status rezrl_report_metrics(const char* metrics_jsonl_path, char** out_text) {
  if (!metrics_jsonl_path || !out_text) return fail(REZRL_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&]() -> rezrl_status {
    std::string text;
    try {
      text = rezrl::runner::summarize_metrics_file(metrics_jsonl_path);
    } catch (const std::runtime_error& e) {
      return fail(REZRL_ERR_IO, e.what());
    }
    char* buf = static_cast<char*>(std::malloc(text.size() + 1));
    if (!buf) return fail(REZRL_ERR_INTERNAL, "out of memory");
    std::memcpy(buf, text.c_str(), text.size() + 1);
    *out_text = buf;
    g_last_error.clear();
    return REZRL_OK;
  });
}

void rezrl_string_free(char* text) { std::free(text); }

}  // extern "C"

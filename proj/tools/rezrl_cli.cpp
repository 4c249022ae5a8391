// Command-line front end. Talks to the core exclusively through the C API in
// rezrl.h, the same surface other language bindings would use.

#include <cstdio>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "rezrl.h"

namespace {

struct ConfigDeleter {
  void operator()(rezrl_config* c) const { rezrl_config_free(c); }
};
struct RunDeleter {
  void operator()(rezrl_run* r) const { rezrl_run_free(r); }
};
using ConfigPtr = std::unique_ptr<rezrl_config, ConfigDeleter>;
using RunPtr = std::unique_ptr<rezrl_run, RunDeleter>;

int die(const char* what) {
  std::fprintf(stderr, "rezrl: %s: %s\n", what, rezrl_last_error());
  return 1;
}

ConfigPtr load_config(const std::string& path, bool& ok) {
  rezrl_config* raw = nullptr;
  ok = rezrl_config_load(path.c_str(), &raw) == REZRL_OK;
  return ConfigPtr(raw);
}

std::string config_value(const rezrl_config* cfg, const char* key) {
  char buf[512] = {0};
  if (rezrl_config_get(cfg, key, buf, sizeof buf) != REZRL_OK) return "";
  return buf;
}

std::string sibling_path(const std::string& base, const char* suffix) {
  const std::size_t dot = base.rfind('.');
  const std::size_t slash = base.rfind('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
    return base + suffix;
  }
  return base.substr(0, dot) + suffix;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adaptive-resolution VQA policy-training simulator"};
  app.require_subcommand(1);

  // run
  std::string run_config, run_out, run_penalty_mode;
  long long run_seed = -1;
  long long run_steps = -1;
  auto* run = app.add_subcommand("run", "train a policy and write metrics");
  run->add_option("--config", run_config, "experiment config file")->required();
  run->add_option("--seed", run_seed, "override the config seed");
  run->add_option("--penalty-mode", run_penalty_mode,
                  "threshold | always_resize_penalty | no_penalty");
  run->add_option("--steps", run_steps, "override the number of steps");
  run->add_option("--out", run_out, "metrics JSONL path (default: config metrics_path)");

  // classify
  std::string classify_config, classify_out;
  auto* classify = app.add_subcommand("classify", "rollout-based dataset classification");
  classify->add_option("--config", classify_config, "experiment config file")->required();
  classify->add_option("--out", classify_out, "output JSONL path (default: config dataprep_out)");

  // report
  std::string report_metrics;
  auto* report = app.add_subcommand("report", "summarize a metrics JSONL file");
  report->add_option("--metrics", report_metrics, "metrics JSONL path")->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    bool ok = false;
    ConfigPtr cfg = load_config(run_config, ok);
    if (!ok) return die("config");
    if (run_seed >= 0 &&
        rezrl_config_set(cfg.get(), "seed", std::to_string(run_seed).c_str()) != REZRL_OK) {
      return die("--seed");
    }
    if (run_steps >= 0 &&
        rezrl_config_set(cfg.get(), "steps", std::to_string(run_steps).c_str()) != REZRL_OK) {
      return die("--steps");
    }
    if (!run_penalty_mode.empty() &&
        rezrl_config_set(cfg.get(), "penalty_mode", run_penalty_mode.c_str()) != REZRL_OK) {
      return die("--penalty-mode");
    }

    rezrl_run* raw_run = nullptr;
    if (rezrl_run_experiment(cfg.get(), &raw_run) != REZRL_OK) return die("run");
    RunPtr result(raw_run);

    const std::string metrics_path =
        run_out.empty() ? config_value(cfg.get(), "metrics_path") : run_out;
    const std::string csv_path = sibling_path(metrics_path, ".csv");
    const std::string report_path = sibling_path(metrics_path, ".report.json");
    const std::string params_path = sibling_path(metrics_path, ".params.json");
    const std::string outcomes_path = sibling_path(metrics_path, ".outcomes.jsonl");

    if (rezrl_run_write_metrics_jsonl(result.get(), metrics_path.c_str()) != REZRL_OK ||
        rezrl_run_write_metrics_csv(result.get(), csv_path.c_str()) != REZRL_OK ||
        rezrl_run_write_report_json(result.get(), report_path.c_str()) != REZRL_OK ||
        rezrl_run_write_params_json(result.get(), params_path.c_str()) != REZRL_OK ||
        rezrl_run_write_outcomes_jsonl(result.get(), outcomes_path.c_str()) != REZRL_OK) {
      return die("write");
    }

    double resize_ratio = 0, accuracy = 0, mean_reward = 0;
    rezrl_run_final_metrics(result.get(), &resize_ratio, &accuracy, &mean_reward);
    std::printf("steps: %zu\n", rezrl_run_step_count(result.get()));
    std::printf("final resize_ratio: %.4f  accuracy: %.4f  mean_reward: %.4f\n", resize_ratio,
                accuracy, mean_reward);
    std::printf("metrics: %s\n", metrics_path.c_str());
    std::printf("report:  %s\n", report_path.c_str());
    return 0;
  }

  if (classify->parsed()) {
    bool ok = false;
    ConfigPtr cfg = load_config(classify_config, ok);
    if (!ok) return die("config");
    const std::string out_path =
        classify_out.empty() ? config_value(cfg.get(), "dataprep_out") : classify_out;
    size_t n_low = 0, n_high = 0;
    if (rezrl_classify_dataset(cfg.get(), out_path.c_str(), &n_low, &n_high) != REZRL_OK) {
      return die("classify");
    }
    std::printf("low_res_solvable: %zu\nhigh_res_required: %zu\nwrote: %s\n", n_low, n_high,
                out_path.c_str());
    return 0;
  }

  if (report->parsed()) {
    char* text = nullptr;
    if (rezrl_report_metrics(report_metrics.c_str(), &text) != REZRL_OK) return die("report");
    std::fputs(text, stdout);
    rezrl_string_free(text);
    return 0;
  }
  return 1;
}

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "rezrl.h"

namespace {

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

struct ConfigGuard {
  rezrl_config* cfg = nullptr;
  ~ConfigGuard() { rezrl_config_free(cfg); }
};

struct RunGuard {
  rezrl_run* run = nullptr;
  ~RunGuard() { rezrl_run_free(run); }
};

void make_tiny(rezrl_config* cfg) {
  REQUIRE(rezrl_config_set(cfg, "steps", "4") == REZRL_OK);
  REQUIRE(rezrl_config_set(cfg, "batch_prompts", "4") == REZRL_OK);
  REQUIRE(rezrl_config_set(cfg, "group_size", "4") == REZRL_OK);
  REQUIRE(rezrl_config_set(cfg, "eval_prompts", "4") == REZRL_OK);
  REQUIRE(rezrl_config_set(cfg, "dataprep_tasks", "16") == REZRL_OK);
}

}  // namespace

TEST_SUITE("capi") {

TEST_CASE("config lifecycle: create, set, get, errors") {
  ConfigGuard guard;
  REQUIRE(rezrl_config_create(&guard.cfg) == REZRL_OK);

  char buf[64];
  REQUIRE(rezrl_config_get(guard.cfg, "group_size", buf, sizeof buf) == REZRL_OK);
  CHECK(std::string(buf) == "16");

  REQUIRE(rezrl_config_set(guard.cfg, "steps", "7") == REZRL_OK);
  REQUIRE(rezrl_config_get(guard.cfg, "steps", buf, sizeof buf) == REZRL_OK);
  CHECK(std::string(buf) == "7");

  CHECK(rezrl_config_set(guard.cfg, "bogus_key", "1") == REZRL_ERR_CONFIG);
  CHECK(std::string(rezrl_last_error()).find("bogus_key") != std::string::npos);
  CHECK(rezrl_config_set(nullptr, "steps", "1") == REZRL_ERR_INVALID_ARGUMENT);
  CHECK(rezrl_config_get(guard.cfg, "steps", nullptr, 8) == REZRL_ERR_INVALID_ARGUMENT);

  // Truncation keeps the NUL terminator.
  char tiny[3];
  REQUIRE(rezrl_config_get(guard.cfg, "categories", tiny, sizeof tiny) == REZRL_OK);
  CHECK(std::string(tiny) == "oc");
}

TEST_CASE("config load from file and bad path") {
  const std::string path = temp_path("rezrl_capi_cfg.conf");
  {
    std::ofstream out(path);
    out << "steps = 3\nseed = 5\n";
  }
  ConfigGuard guard;
  REQUIRE(rezrl_config_load(path.c_str(), &guard.cfg) == REZRL_OK);
  char buf[16];
  REQUIRE(rezrl_config_get(guard.cfg, "steps", buf, sizeof buf) == REZRL_OK);
  CHECK(std::string(buf) == "3");

  rezrl_config* missing = nullptr;
  CHECK(rezrl_config_load("/no/such/file.conf", &missing) == REZRL_ERR_CONFIG);
  CHECK(missing == nullptr);
  CHECK(std::string(rezrl_last_error()).find("file.conf") != std::string::npos);
}

TEST_CASE("experiment runs, writes artifacts and reports final metrics") {
  ConfigGuard cfg;
  REQUIRE(rezrl_config_create(&cfg.cfg) == REZRL_OK);
  make_tiny(cfg.cfg);

  RunGuard run;
  REQUIRE(rezrl_run_experiment(cfg.cfg, &run.run) == REZRL_OK);
  CHECK(rezrl_run_step_count(run.run) == 4);

  const std::string metrics = temp_path("rezrl_capi_metrics.jsonl");
  const std::string csv = temp_path("rezrl_capi_metrics.csv");
  const std::string report = temp_path("rezrl_capi_report.json");
  const std::string params = temp_path("rezrl_capi_params.json");
  const std::string outcomes = temp_path("rezrl_capi_outcomes.jsonl");
  REQUIRE(rezrl_run_write_metrics_jsonl(run.run, metrics.c_str()) == REZRL_OK);
  REQUIRE(rezrl_run_write_metrics_csv(run.run, csv.c_str()) == REZRL_OK);
  REQUIRE(rezrl_run_write_report_json(run.run, report.c_str()) == REZRL_OK);
  REQUIRE(rezrl_run_write_params_json(run.run, params.c_str()) == REZRL_OK);
  REQUIRE(rezrl_run_write_outcomes_jsonl(run.run, outcomes.c_str()) == REZRL_OK);

  CHECK(slurp(metrics).find("\"step\":0") != std::string::npos);
  CHECK(slurp(csv).find("step,resize_ratio") != std::string::npos);
  CHECK(slurp(report).find("ocr_like") != std::string::npos);
  CHECK(slurp(params).find("\"flat\"") != std::string::npos);
  CHECK(slurp(outcomes).find("\"action\":") != std::string::npos);

  double resize = -1, accuracy = -1, reward = -10;
  REQUIRE(rezrl_run_final_metrics(run.run, &resize, &accuracy, &reward) == REZRL_OK);
  CHECK(resize >= 0.0);
  CHECK(resize <= 1.0);
  CHECK(accuracy >= 0.0);
  CHECK(accuracy <= 1.0);
  CHECK(reward >= -0.1);
  CHECK(reward <= 1.5);

  CHECK(rezrl_run_write_metrics_jsonl(run.run, "/no/such/dir/m.jsonl") == REZRL_ERR_IO);
}

TEST_CASE("determinism through the C surface") {
  auto run_once = [&](const char* path) {
    ConfigGuard cfg;
    REQUIRE(rezrl_config_create(&cfg.cfg) == REZRL_OK);
    make_tiny(cfg.cfg);
    RunGuard run;
    REQUIRE(rezrl_run_experiment(cfg.cfg, &run.run) == REZRL_OK);
    REQUIRE(rezrl_run_write_metrics_jsonl(run.run, path) == REZRL_OK);
  };
  const std::string a = temp_path("rezrl_capi_det_a.jsonl");
  const std::string b = temp_path("rezrl_capi_det_b.jsonl");
  run_once(a.c_str());
  run_once(b.c_str());
  CHECK(slurp(a) == slurp(b));
}

TEST_CASE("dataset classification writes a balanced jsonl") {
  ConfigGuard cfg;
  REQUIRE(rezrl_config_create(&cfg.cfg) == REZRL_OK);
  make_tiny(cfg.cfg);

  const std::string path = temp_path("rezrl_capi_data.jsonl");
  size_t low = 0, high = 0;
  REQUIRE(rezrl_classify_dataset(cfg.cfg, path.c_str(), &low, &high) == REZRL_OK);
  CHECK(low == high);
  CHECK(low > 0);
  CHECK(slurp(path).find("high_res_required") != std::string::npos);
}

TEST_CASE("metrics report summarizes and frees") {
  ConfigGuard cfg;
  REQUIRE(rezrl_config_create(&cfg.cfg) == REZRL_OK);
  make_tiny(cfg.cfg);
  RunGuard run;
  REQUIRE(rezrl_run_experiment(cfg.cfg, &run.run) == REZRL_OK);
  const std::string path = temp_path("rezrl_capi_report_metrics.jsonl");
  REQUIRE(rezrl_run_write_metrics_jsonl(run.run, path.c_str()) == REZRL_OK);

  char* text = nullptr;
  REQUIRE(rezrl_report_metrics(path.c_str(), &text) == REZRL_OK);
  REQUIRE(text != nullptr);
  CHECK(std::string(text).find("final resize_ratio") != std::string::npos);
  rezrl_string_free(text);

  char* missing = nullptr;
  CHECK(rezrl_report_metrics("/no/such/metrics.jsonl", &missing) == REZRL_ERR_IO);
}

TEST_CASE("version string is present") {
  CHECK(std::string(rezrl_version()).find('.') != std::string::npos);
}

}  // TEST_SUITE

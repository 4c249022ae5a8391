#include "rezrl/dataprep.hpp"

#include <algorithm>

#include "json.hpp"
#include "rezrl/rng.hpp"

namespace rezrl::dataprep {

SampleClass classify(const RolloutRecord& rec, int margin) {
  if (rec.rollouts_per_arm < 1 || rec.correct_low < 0 || rec.correct_high < 0 ||
      rec.correct_low > rec.rollouts_per_arm || rec.correct_high > rec.rollouts_per_arm) {
    throw std::invalid_argument("classify: counts exceed rollouts_per_arm");
  }
  if (rec.correct_low == rec.rollouts_per_arm && rec.correct_high == rec.rollouts_per_arm) {
    return SampleClass::low_res_solvable;
  }
  if (rec.correct_high - rec.correct_low >= margin) {
    return SampleClass::high_res_required;
  }
  return SampleClass::discarded;
}

const char* to_string(SampleClass cls) {
  switch (cls) {
    case SampleClass::low_res_solvable:
      return "low_res_solvable";
    case SampleClass::high_res_required:
      return "high_res_required";
    case SampleClass::discarded:
      return "discarded";
  }
  return "unknown";
}

std::vector<LabeledTask> build_training_set(std::span<const env::TaskSpec> tasks,
                                            const policy::PolicyParams& params,
                                            const DataprepConfig& cfg,
                                            const env::EnvOptions& env_options,
                                            std::uint64_t seed) {
  std::vector<LabeledTask> low_class;
  std::vector<LabeledTask> high_class;

  env::EnvOptions direct_opts = env_options;
  direct_opts.forced = env::ForcedAction::direct;
  env::EnvOptions resize_opts = env_options;
  resize_opts.forced = env::ForcedAction::resize;

  for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
    const env::TaskSpec& task = tasks[ti];
    RolloutRecord rec;
    rec.task_id = task.id;
    rec.rollouts_per_arm = cfg.rollouts_per_arm;
    for (int r = 0; r < cfg.rollouts_per_arm; ++r) {
      rec.correct_low +=
          env::run_episode(task, params, seed_stream(seed, ti, 0, r), direct_opts).correct;
      rec.correct_high +=
          env::run_episode(task, params, seed_stream(seed, ti, 1, r), resize_opts).correct;
    }
    const SampleClass cls = classify(rec, cfg.margin);
    if (cls == SampleClass::low_res_solvable) {
      low_class.push_back({task, cls, rec});
    } else if (cls == SampleClass::high_res_required) {
      high_class.push_back({task, cls, rec});
    }
  }

  if (low_class.empty() || high_class.empty()) {
    throw InsufficientSamples("build_training_set: a kept class is empty");
  }
  const std::size_t n = std::min(low_class.size(), high_class.size());
  low_class.resize(n);
  high_class.resize(n);

  std::vector<LabeledTask> out;
  out.reserve(2 * n);
  out.insert(out.end(), low_class.begin(), low_class.end());
  out.insert(out.end(), high_class.begin(), high_class.end());
  return out;
}

void write_jsonl(std::span<const LabeledTask> set, const std::vector<std::string>& category_names,
                 std::ostream& out) {
  for (const LabeledTask& item : set) {
    nlohmann::ordered_json row;
    row["task_id"] = item.task.id;
    row["category"] = static_cast<std::size_t>(item.task.category) < category_names.size()
                          ? category_names[static_cast<std::size_t>(item.task.category)]
                          : std::to_string(item.task.category);
    row["class"] = to_string(item.cls);
    row["correct_low"] = item.record.correct_low;
    row["correct_high"] = item.record.correct_high;
    row["rollouts_per_arm"] = item.record.rollouts_per_arm;
    row["p_low"] = item.task.p_low;
    row["p_high"] = item.task.p_high;
    row["n_img_high"] = item.task.n_img_high;
    out << row.dump() << '\n';
  }
}

}  // namespace rezrl::dataprep

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vcas/container.hpp"
#include "vcas/envsim.hpp"
#include "vcas/learn.hpp"
#include "vcas/policy.hpp"

namespace vcas::cli {

// Flat key=value run configuration. Zero counts mean "use the preset default".
struct RunConfig {
  std::string task = "object";
  std::string band = "full";
  std::size_t n_components = 0;  // 0: task default
  std::string preset;             // empty: <preset dir>/<task>.json
  std::uint64_t seed = 0;
  std::filesystem::path out;      // empty: $VCAS_DATA_DIR or ./vcas_data

  std::size_t train_per_class = 0;
  std::size_t test_per_class = 0;
  std::size_t condition_per_class = 0;
  std::size_t train_sessions = 4;
  std::size_t test_sessions = 1;

  // Estimator training.
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  std::size_t epochs = 200;
  std::size_t patience = 20;
  std::vector<int> hidden = learn::kDefaultHidden;

  // Simulator and policy.
  std::string obs = "adjacent";  // adjacent | identity | uniform | path to a 3x3 CSV
  double obs_accuracy = 0.95;
  std::size_t demos = 2000;
  std::string demo_starts = "full_grid";
  std::size_t episodes = 1000;
  std::size_t history = envsim::kHistoryLength;
  std::string regime = "all";  // a start regime or "all"
  std::string policy = "";     // empty: <out>/sim/policy.vcas; "expert" for the scripted expert
  std::string demos_file = ""; // empty: <out>/sim/demos.jsonl
  std::string start = "45,45";

  // Throws ParameterError for unknown keys or malformed values.
  void set(const std::string& key, const std::string& value);
  void validate() const;

  std::filesystem::path out_root() const;
  std::filesystem::path task_dir() const { return out_root() / task; }
  std::filesystem::path sim_dir() const { return out_root() / "sim"; }
  std::filesystem::path preset_path() const;
  std::size_t components() const;
  learn::TrainConfig train_config(std::uint64_t seed) const;
};

// Applies every non-comment line of a key=value file.
void apply_config_text(RunConfig& cfg, const std::string& text);
// Splits "key=value"; throws ParameterError without '='.
std::pair<std::string, std::string> split_assignment(const std::string& s);

std::size_t default_components(const std::string& task);
// "0.02-9.19 kHz"
std::string band_label(double f_low, double f_high);

struct SynthSummary {
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;  // in-distribution test rows
  std::map<std::string, std::size_t> condition_rows;
  std::vector<std::filesystem::path> files;
};

// Writes <task_dir>/train/session_XX.vcas, <task_dir>/test/<condition>/session_XX.vcas
// and <task_dir>/manifest.json.
SynthSummary synth_data(const RunConfig& cfg);

struct TrainSummary {
  std::filesystem::path model_path;
  std::size_t n_train = 0;
  std::size_t n_components = 0;
  Eigen::VectorXd explained_variance_ratio;
  learn::TrainHistory history;
};

// band_select -> kpca_fit -> mlp_train over every training session.
TrainSummary train_task(const RunConfig& cfg);

struct EvalRow {
  std::string condition;
  std::size_t n = 0;
  std::optional<double> accuracy;
  std::optional<double> rmse;
  learn::ConfusionMatrix confusion;
  std::vector<learn::TargetError> per_target;
};

struct EvalSummary {
  std::vector<EvalRow> rows;
  std::optional<envsim::ObservationModel> observation_model;  // contact task only
};

EvalSummary eval_task(const RunConfig& cfg);

// Loads every session container of one split directory into a single dataset.
io::TaggedDataset load_split(const std::filesystem::path& dir);

envsim::ObservationModel observation_model(const RunConfig& cfg);

envsim::DemoSet sim_demos(const RunConfig& cfg);
policy::PolicyTrainResult sim_train_policy(const RunConfig& cfg);
std::vector<policy::EvalReport> sim_eval_policy(const RunConfig& cfg);
envsim::Episode sim_rollout(const RunConfig& cfg, std::ostream& trace);

// JSON-lines demo sets.
std::string demos_to_jsonl(const envsim::DemoSet& demos);
envsim::DemoSet demos_from_jsonl(const std::string& text);
std::string episode_to_json(const envsim::Episode& ep, const envsim::Grid& g = {});

struct ReportTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

// Merges task metrics (eval_*.json) and policy reports (eval_policy.json)
// found in `inputs` (files or directories) into summary.md and summary.csv.
ReportTable build_report(const std::vector<std::filesystem::path>& inputs);
void write_report(const ReportTable& table, const std::filesystem::path& out_dir);

// Full command-line entry point; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vcas::cli

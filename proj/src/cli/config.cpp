#include <charconv>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <sstream>

#include "vcas/cli.hpp"
#include "vcas/error.hpp"
#include "vcas/features.hpp"

#ifndef VCAS_PRESET_DIR
#define VCAS_PRESET_DIR "data/presets"
#endif

namespace vcas::cli {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

template <typename T>
T parse_number(const std::string& value) {
  T out{};
  const char* first = value.data();
  const char* last = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) {
    throw ParameterError("'" + value + "' is not a valid number");
  }
  return out;
}

double parse_double(const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::logic_error&) {
    throw ParameterError("'" + value + "' is not a valid number");
  }
}

std::vector<int> parse_int_list(const std::string& value) {
  std::vector<int> out;
  if (value.empty() || value == "none") return out;
  std::istringstream in(value);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_number<int>(trim(item)));
  return out;
}

}  // namespace

std::pair<std::string, std::string> split_assignment(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos) throw ParameterError("expected KEY=VALUE, got '" + s + "'");
  return {trim(s.substr(0, eq)), trim(s.substr(eq + 1))};
}

void RunConfig::set(const std::string& key, const std::string& value) {
  using Setter = std::function<void(RunConfig&, const std::string&)>;
  auto size = [](std::size_t RunConfig::*field) {
    return Setter([field](RunConfig& c, const std::string& v) { c.*field = parse_number<std::size_t>(v); });
  };
  auto text = [](std::string RunConfig::*field) {
    return Setter([field](RunConfig& c, const std::string& v) { c.*field = v; });
  };
  static const std::map<std::string, Setter> setters{
      {"task", text(&RunConfig::task)},
      {"band", text(&RunConfig::band)},
      {"n_components", size(&RunConfig::n_components)},
      {"preset", text(&RunConfig::preset)},
      {"seed", [](RunConfig& c, const std::string& v) { c.seed = parse_number<std::uint64_t>(v); }},
      {"out", [](RunConfig& c, const std::string& v) { c.out = v; }},
      {"train_per_class", size(&RunConfig::train_per_class)},
      {"test_per_class", size(&RunConfig::test_per_class)},
      {"condition_per_class", size(&RunConfig::condition_per_class)},
      {"train_sessions", size(&RunConfig::train_sessions)},
      {"test_sessions", size(&RunConfig::test_sessions)},
      {"learning_rate", [](RunConfig& c, const std::string& v) { c.learning_rate = parse_double(v); }},
      {"batch_size", size(&RunConfig::batch_size)},
      {"epochs", size(&RunConfig::epochs)},
      {"patience", size(&RunConfig::patience)},
      {"hidden", [](RunConfig& c, const std::string& v) { c.hidden = parse_int_list(v); }},
      {"obs", text(&RunConfig::obs)},
      {"obs_accuracy", [](RunConfig& c, const std::string& v) { c.obs_accuracy = parse_double(v); }},
      {"demos", size(&RunConfig::demos)},
      {"demo_starts", text(&RunConfig::demo_starts)},
      {"episodes", size(&RunConfig::episodes)},
      {"history", size(&RunConfig::history)},
      {"regime", text(&RunConfig::regime)},
      {"policy", text(&RunConfig::policy)},
      {"demos_file", text(&RunConfig::demos_file)},
      {"start", text(&RunConfig::start)},
  };
  auto it = setters.find(key);
  if (it == setters.end()) throw ParameterError("unknown config key '" + key + "'");
  try {
    it->second(*this, value);
  } catch (const ParameterError& e) {
    throw ParameterError("config key '" + key + "': " + e.what());
  }
}

void RunConfig::validate() const {
  if (task != "object" && task != "grasp" && task != "pose" && task != "contact") {
    throw ParameterError("unknown task '" + task + "' (expected object, grasp, pose or contact)");
  }
  features::band_by_name(band);
  if (train_sessions < 1 || test_sessions < 1) throw ParameterError("session counts must be >= 1");
  if (!(obs_accuracy >= 0.0 && obs_accuracy <= 1.0)) throw ParameterError("obs_accuracy must lie in [0, 1]");
  if (history < 1 || history > envsim::kHistoryLength) throw ParameterError("history must lie in [1, 10]");
  if (regime != "all") envsim::regime_from_string(regime);
  envsim::regime_from_string(demo_starts);
  train_config(seed).validate();
}

std::filesystem::path RunConfig::out_root() const {
  if (!out.empty()) return out;
  if (const char* env = std::getenv("VCAS_DATA_DIR"); env && *env) return env;
  return "vcas_data";
}

std::filesystem::path RunConfig::preset_path() const {
  if (!preset.empty()) return preset;
  return std::filesystem::path(VCAS_PRESET_DIR) / (task + ".json");
}

std::size_t default_components(const std::string& task) {
  if (task == "object") return 5;
  if (task == "grasp") return 10;
  if (task == "pose") return 5;
  return 50;
}

std::size_t RunConfig::components() const {
  return n_components ? n_components : default_components(task);
}

learn::TrainConfig RunConfig::train_config(std::uint64_t s) const {
  learn::TrainConfig c;
  c.learning_rate = learning_rate;
  c.batch_size = batch_size;
  c.epochs = epochs;
  c.patience = patience;
  c.seed = s;
  c.hidden = hidden;
  return c;
}

void apply_config_text(RunConfig& cfg, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    try {
      const auto [key, value] = split_assignment(t);
      cfg.set(key, value);
    } catch (const ParameterError& e) {
      throw ParameterError("config line " + std::to_string(number) + ": " + e.what());
    }
  }
}

std::string band_label(double f_low, double f_high) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << f_low / 1000.0 << '-' << f_high / 1000.0 << " kHz";
  return s.str();
}

}  // namespace vcas::cli

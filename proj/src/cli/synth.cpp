#include <algorithm>
#include <cmath>
#include <iomanip>
#include <json.hpp>
#include <random>
#include <set>
#include <sstream>

#include "vcas/cli.hpp"
#include "vcas/error.hpp"
#include "vcas/features.hpp"
#include "vcas/rng.hpp"
#include "vcas/signal.hpp"

namespace vcas::cli {

using nlohmann::json;

namespace {

using Vars = std::map<std::string, double>;

struct ModeSpec {
  std::string key;  // identity used to seed per-mode jitter
  double f = 0.0;
  double zeta = 0.01;
  double gain = 1.0;
  Vars df, dzeta, dgain;  // linear dependence on pose variables
};

struct Jitter {
  double f = 0.0;
  double zeta = 0.0;
  double gain = 0.0;
};

struct Level {
  std::string name;
  std::vector<ModeSpec> modes;
  std::vector<Vars> poses{Vars{}};
};

struct Factor {
  std::string name;
  std::vector<Level> levels;
};

struct Condition {
  std::string name;
  std::set<std::string> classes;  // empty: all
  std::map<std::string, std::map<std::string, std::pair<double, double>>> ranges;  // class -> var -> [lo, hi)
  std::optional<std::pair<double, double>> target_range;  // regression: random targets
  std::size_t target_count = 0;
  std::vector<ModeSpec> add_modes;
  Jitter scale{1.0, 1.0, 1.0};
  double jitter_scale = 1.0;
};

struct Preset {
  std::string task;
  learn::Head head = learn::Head::Classification;
  double snr_db = 30.0;
  std::size_t train_per_class = 100;
  std::size_t test_per_class = 25;
  std::size_t condition_per_class = 25;
  std::string label_factor;
  std::string target;
  std::vector<double> target_values;
  std::vector<ModeSpec> base_modes;
  std::vector<Factor> factors;
  Jitter session, regrasp, sample;
  std::size_t regrasp_every = 5;
  std::vector<Condition> conditions;
};

[[noreturn]] void bad_preset(const std::string& path, const std::string& why) {
  throw ParameterError("preset " + path + ": " + why);
}

Vars read_vars(const json& j) {
  Vars v;
  if (j.is_null()) return v;
  for (auto it = j.begin(); it != j.end(); ++it) v[it.key()] = it.value().get<double>();
  return v;
}

std::vector<ModeSpec> read_modes(const json& j, const std::string& prefix) {
  std::vector<ModeSpec> out;
  if (j.is_null()) return out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const json& m = j.at(i);
    ModeSpec s;
    s.key = prefix + "/" + std::to_string(i);
    s.f = m.at("f").get<double>();
    s.zeta = m.value("zeta", 0.01);
    s.gain = m.value("gain", 1.0);
    s.df = read_vars(m.value("df", json()));
    s.dzeta = read_vars(m.value("dzeta", json()));
    s.dgain = read_vars(m.value("dgain", json()));
    out.push_back(std::move(s));
  }
  return out;
}

Jitter read_jitter(const json& j) {
  Jitter out;
  if (j.is_null()) return out;
  out.f = j.value("f", 0.0);
  out.zeta = j.value("zeta", 0.0);
  out.gain = j.value("gain", 0.0);
  return out;
}

std::vector<double> read_values(const json& j) {
  if (j.is_array()) return j.get<std::vector<double>>();
  const auto r = j.at("range").get<std::vector<double>>();
  if (r.size() != 3 || !(r[2] > 0.0)) throw std::invalid_argument("range must be [lo, hi, step]");
  std::vector<double> out;
  for (int k = 0; r[0] + k * r[2] <= r[1] + 1e-9; ++k) out.push_back(r[0] + k * r[2]);
  return out;
}

Preset load_preset(const std::filesystem::path& path) {
  const std::string p = path.string();
  json j;
  try {
    j = json::parse(io::read_file(path));
  } catch (const json::exception& e) {
    bad_preset(p, std::string("invalid JSON: ") + e.what());
  } catch (const DataError& e) {
    throw ParameterError(std::string("cannot load plant preset: ") + e.what());
  }
  Preset pr;
  try {
    pr.task = j.at("task").get<std::string>();
    const std::string head = j.value("head", "classification");
    if (head != "classification" && head != "regression") bad_preset(p, "head must be classification or regression");
    pr.head = head == "classification" ? learn::Head::Classification : learn::Head::Regression;
    pr.snr_db = j.value("snr_db", 30.0);
    if (j.contains("counts")) {
      const json& c = j["counts"];
      pr.train_per_class = c.value("train_per_class", pr.train_per_class);
      pr.test_per_class = c.value("test_per_class", pr.test_per_class);
      pr.condition_per_class = c.value("condition_per_class", pr.condition_per_class);
    }
    pr.base_modes = read_modes(j.value("base_modes", json()), "base");
    for (const json& f : j.value("factors", json::array())) {
      Factor factor;
      factor.name = f.at("name").get<std::string>();
      for (const json& l : f.at("levels")) {
        Level level;
        level.name = l.at("name").get<std::string>();
        level.modes = read_modes(l.value("modes", json()), factor.name + "/" + level.name);
        if (l.contains("poses")) {
          level.poses.clear();
          for (const json& pose : l["poses"]) level.poses.push_back(read_vars(pose));
          if (level.poses.empty()) bad_preset(p, "level " + level.name + " has an empty pose list");
        }
        factor.levels.push_back(std::move(level));
      }
      if (factor.levels.empty()) bad_preset(p, "factor " + factor.name + " has no levels");
      pr.factors.push_back(std::move(factor));
    }
    if (pr.head == learn::Head::Classification) {
      pr.label_factor = j.at("label_factor").get<std::string>();
      if (std::none_of(pr.factors.begin(), pr.factors.end(),
                       [&](const Factor& f) { return f.name == pr.label_factor; })) {
        bad_preset(p, "label_factor '" + pr.label_factor + "' is not a factor");
      }
    } else {
      pr.target = j.at("target").get<std::string>();
      pr.target_values = read_values(j.at("target_values"));
      if (pr.target_values.empty()) bad_preset(p, "no target values");
    }
    if (j.contains("jitter")) {
      const json& jj = j["jitter"];
      pr.session = read_jitter(jj.value("session", json()));
      pr.regrasp = read_jitter(jj.value("regrasp", json()));
      pr.sample = read_jitter(jj.value("sample", json()));
      pr.regrasp_every = jj.value("regrasp_every", pr.regrasp_every);
      if (pr.regrasp_every < 1) bad_preset(p, "regrasp_every must be >= 1");
    }
    for (const json& c : j.value("conditions", json::array())) {
      Condition cond;
      cond.name = c.at("name").get<std::string>();
      if (cond.name == "in_distribution") bad_preset(p, "condition name 'in_distribution' is reserved");
      for (const json& n : c.value("classes", json::array())) cond.classes.insert(n.get<std::string>());
      if (c.contains("ranges")) {
        for (auto cls = c["ranges"].begin(); cls != c["ranges"].end(); ++cls) {
          for (auto var = cls.value().begin(); var != cls.value().end(); ++var) {
            const auto r = var.value().get<std::vector<double>>();
            if (r.size() != 2 || r[1] < r[0]) bad_preset(p, "ranges must be [lo, hi]");
            cond.ranges[cls.key()][var.key()] = {r[0], r[1]};
          }
        }
      }
      if (c.contains("targets")) {
        const auto r = c["targets"].at("uniform").get<std::vector<double>>();
        if (r.size() != 2 || r[1] < r[0]) bad_preset(p, "targets.uniform must be [lo, hi]");
        cond.target_range = std::pair{r[0], r[1]};
        cond.target_count = c["targets"].at("count").get<std::size_t>();
      }
      cond.add_modes = read_modes(c.value("add_modes", json()), "condition/" + cond.name);
      if (c.contains("scale")) {
        cond.scale = Jitter{c["scale"].value("f", 1.0), c["scale"].value("zeta", 1.0), c["scale"].value("gain", 1.0)};
      }
      cond.jitter_scale = c.value("jitter_scale", 1.0);
      pr.conditions.push_back(std::move(cond));
    }
  } catch (const json::exception& e) {
    bad_preset(p, e.what());
  } catch (const std::invalid_argument& e) {
    bad_preset(p, e.what());
  }
  return pr;
}

double normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

void apply_jitter(signal::Mode& m, const Jitter& j, double scale, std::uint64_t seed) {
  if (j.f == 0.0 && j.zeta == 0.0 && j.gain == 0.0) return;
  Rng rng(seed);
  m.center_hz *= std::exp(scale * j.f * normal(rng));
  m.damping_ratio *= std::exp(scale * j.zeta * normal(rng));
  m.gain *= std::exp(scale * j.gain * normal(rng));
}

double linear(double base, const Vars& slope, const Vars& vars) {
  double v = base;
  for (const auto& [name, k] : slope) {
    auto it = vars.find(name);
    if (it != vars.end()) v += k * it->second;
  }
  return v;
}

std::uint64_t key_seed(std::uint64_t parent, const std::string& key) { return derive_seed(parent, std::string_view(key)); }

// One plant realisation. `class_key` scopes the regrasp jitter.
signal::ModalPlant build_plant(const Preset& pr, const std::vector<const ModeSpec*>& specs, const Vars& vars,
                               const Condition* cond, std::uint64_t session_seed, std::uint64_t regrasp_seed,
                               std::uint64_t sample_seed) {
  const double js = cond ? cond->jitter_scale : 1.0;
  signal::ModalPlant plant;
  plant.noise_snr_db = pr.snr_db;
  for (const ModeSpec* s : specs) {
    signal::Mode m{linear(s->f, s->df, vars), linear(s->zeta, s->dzeta, vars), linear(s->gain, s->dgain, vars)};
    if (cond) {
      m.center_hz *= cond->scale.f;
      m.damping_ratio *= cond->scale.zeta;
      m.gain *= cond->scale.gain;
    }
    apply_jitter(m, pr.session, js, key_seed(session_seed, s->key));
    apply_jitter(m, pr.regrasp, 1.0, key_seed(regrasp_seed, s->key));
    apply_jitter(m, pr.sample, 1.0, key_seed(sample_seed, s->key));
    m.center_hz = std::clamp(m.center_hz, 30.0, 21500.0);
    m.damping_ratio = std::clamp(m.damping_ratio, 1e-4, 0.9);
    m.gain = std::max(0.0, m.gain);
    plant.modes.push_back(m);
  }
  return plant;
}

struct ClassSpec {
  std::string name;  // label or target value text
  double target = 0.0;
  const Level* label_level = nullptr;  // classification
};

std::string session_name(std::size_t s) {
  std::ostringstream o;
  o << "session_" << std::setw(2) << std::setfill('0') << s << ".vcas";
  return o.str();
}

}  // namespace

SynthSummary synth_data(const RunConfig& cfg) {
  cfg.validate();
  const Preset pr = load_preset(cfg.preset_path());
  if (pr.task != cfg.task) {
    throw ParameterError("preset " + cfg.preset_path().string() + " describes task '" + pr.task +
                         "' but the configuration asks for '" + cfg.task + "'");
  }
  const std::size_t n_train = cfg.train_per_class ? cfg.train_per_class : pr.train_per_class;
  const std::size_t n_test = cfg.test_per_class ? cfg.test_per_class : pr.test_per_class;
  const std::size_t n_cond = cfg.condition_per_class ? cfg.condition_per_class : pr.condition_per_class;

  const signal::Waveform chirp = signal::generate_chirp(signal::ChirpSpec{});
  const std::uint64_t root = derive_seed(cfg.seed, std::string_view(cfg.task));

  const Factor* label_factor = nullptr;
  for (const auto& f : pr.factors) {
    if (f.name == pr.label_factor) label_factor = &f;
  }

  std::vector<std::string> label_names;
  std::vector<ClassSpec> train_classes;
  if (pr.head == learn::Head::Classification) {
    for (const auto& l : label_factor->levels) label_names.push_back(l.name);
    std::sort(label_names.begin(), label_names.end());
    if (std::adjacent_find(label_names.begin(), label_names.end()) != label_names.end()) {
      throw ParameterError("preset " + cfg.preset_path().string() + " repeats a label name");
    }
    for (const auto& l : label_factor->levels) {
      const auto idx = std::find(label_names.begin(), label_names.end(), l.name) - label_names.begin();
      train_classes.push_back({l.name, static_cast<double>(idx), &l});
    }
  } else {
    for (double v : pr.target_values) {
      std::ostringstream name;
      name << v;
      train_classes.push_back({name.str(), v, nullptr});
    }
  }

  const std::filesystem::path dir = cfg.task_dir();
  std::filesystem::remove_all(dir / "train");
  std::filesystem::remove_all(dir / "test");
  SynthSummary summary;
  json manifest;
  manifest["task"] = cfg.task;
  manifest["seed"] = cfg.seed;
  manifest["preset"] = cfg.preset_path().filename().string();
  manifest["head"] = pr.head == learn::Head::Classification ? "classification" : "regression";
  manifest["label_names"] = label_names;
  manifest["counts"] = {{"train_per_class", n_train}, {"test_per_class", n_test}, {"condition_per_class", n_cond}};
  manifest["files"] = json::array();

  int next_session = 0;
  auto write_split = [&](const std::string& split, const std::string& condition_name, const Condition* cond,
                         const std::vector<ClassSpec>& classes, std::size_t per_class, std::size_t n_sessions) {
    for (std::size_t s = 0; s < n_sessions; ++s) {
      const int session_id = next_session++;
      const std::uint64_t session_seed = derive_seed(derive_seed(root, "session"), static_cast<std::uint64_t>(session_id));
      const std::size_t count = per_class / n_sessions + (s < per_class % n_sessions ? 1 : 0);

      io::TaggedDataset ds;
      ds.data.label_names = label_names;
      ds.info = {{"task", cfg.task}, {"split", split}, {"condition", condition_name},
                 {"session", std::to_string(session_id)}};
      std::vector<std::vector<double>> rows;
      std::vector<double> theta_x, theta_z, angle;

      for (std::size_t c = 0; c < classes.size(); ++c) {
        const ClassSpec& cls = classes[c];
        const std::uint64_t class_seed = key_seed(session_seed, "class/" + cls.name);
        for (std::size_t i = 0; i < count; ++i) {
          const std::uint64_t sample_seed = derive_seed(class_seed, static_cast<std::uint64_t>(i));
          const std::uint64_t regrasp_seed = derive_seed(key_seed(class_seed, "regrasp"), static_cast<std::uint64_t>(i / pr.regrasp_every));

          // Modes: base + one level per factor (label level fixed, nuisance levels round-robin).
          std::vector<const ModeSpec*> specs;
          for (const auto& m : pr.base_modes) specs.push_back(&m);
          Vars vars;
          for (const auto& f : pr.factors) {
            const Level* level = (cls.label_level && f.name == pr.label_factor)
                                     ? cls.label_level
                                     : &f.levels[(i + s) % f.levels.size()];
            for (const auto& m : level->modes) specs.push_back(&m);
            const Vars& pose = level->poses[i % level->poses.size()];
            for (const auto& [k, v] : pose) vars[k] = v;
          }
          if (pr.head == learn::Head::Regression) vars[pr.target] = cls.target;
          if (cond) {
            for (const auto& m : cond->add_modes) specs.push_back(&m);
            auto it = cond->ranges.find(cls.name);
            if (it != cond->ranges.end()) {
              Rng rng(key_seed(sample_seed, "pose"));
              for (const auto& [var, range] : it->second) {
                vars[var] = std::uniform_real_distribution<double>(range.first, range.second)(rng);
              }
            }
          }

          const auto plant = build_plant(pr, specs, vars, cond, session_seed, regrasp_seed, sample_seed);
          const auto response = signal::synth_response(plant, chirp, key_seed(sample_seed, "noise"));
          auto spectrum = features::fft_magnitude(response);
          if (ds.n_fft == 0) {
            ds.n_fft = spectrum.n_fft;
            ds.bin_hz = spectrum.bin_hz;
            ds.first_bin = spectrum.first_bin;
          }
          rows.push_back(std::move(spectrum.magnitudes));
          ds.data.targets.push_back(cls.target);
          ds.data.session_ids.push_back(session_id);
          auto tag = [&](const char* name) {
            auto it = vars.find(name);
            return it == vars.end() ? std::nan("") : it->second;
          };
          theta_x.push_back(tag("theta_x"));
          theta_z.push_back(tag("theta_z"));
          angle.push_back(tag("angle"));
        }
      }
      if (rows.empty()) continue;
      ds.data.rows.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        ds.data.rows.row(static_cast<Eigen::Index>(r)) =
            Eigen::Map<const Eigen::RowVectorXd>(rows[r].data(), static_cast<Eigen::Index>(rows[r].size()));
      }
      rows.clear();
      auto keep_tag = [&](const char* name, std::vector<double>& values) {
        if (std::any_of(values.begin(), values.end(), [](double v) { return !std::isnan(v); })) ds.tags[name] = values;
      };
      keep_tag("theta_x", theta_x);
      keep_tag("theta_z", theta_z);
      keep_tag("angle", angle);

      const std::filesystem::path rel =
          split == "train" ? std::filesystem::path("train") / session_name(s)
                           : std::filesystem::path("test") / condition_name / session_name(s);
      io::write_container(dir / rel, io::to_container(ds));
      summary.files.push_back(dir / rel);
      const std::size_t n = ds.data.size();
      if (split == "train") {
        summary.train_rows += n;
      } else if (condition_name == "in_distribution") {
        summary.test_rows += n;
      } else {
        summary.condition_rows[condition_name] += n;
      }
      manifest["files"].push_back({{"path", rel.generic_string()}, {"split", split}, {"condition", condition_name},
                                   {"session", session_id}, {"rows", n}});
      manifest["bin_hz"] = ds.bin_hz;
      manifest["n_fft"] = ds.n_fft;
    }
  };

  write_split("train", "", nullptr, train_classes, n_train, cfg.train_sessions);
  write_split("test", "in_distribution", nullptr, train_classes, n_test, cfg.test_sessions);
  for (const auto& cond : pr.conditions) {
    std::vector<ClassSpec> classes;
    if (cond.target_range) {
      Rng rng(key_seed(root, "targets/" + cond.name));
      for (std::size_t k = 0; k < cond.target_count; ++k) {
        const double v = std::uniform_real_distribution<double>(cond.target_range->first, cond.target_range->second)(rng);
        std::ostringstream name;
        name << std::setprecision(17) << v;
        classes.push_back({name.str(), v, nullptr});
      }
    } else {
      for (const auto& c : train_classes) {
        if (cond.classes.empty() || cond.classes.count(c.name)) classes.push_back(c);
      }
    }
    write_split("test", cond.name, &cond, classes, n_cond, cfg.test_sessions);
  }
  io::write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  return summary;
}

}  // namespace vcas::cli

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "vcas/cli.hpp"
#include "vcas/error.hpp"
#include "vcas/features.hpp"
#include "vcas/rng.hpp"

namespace vcas::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::vector<fs::path> container_files(const fs::path& dir) {
  std::vector<fs::path> files;
  if (fs::is_directory(dir)) {
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.is_regular_file() && e.path().extension() == ".vcas") files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

// Column range of the stored spectra that band_select keeps.
std::pair<Eigen::Index, Eigen::Index> band_columns(const io::TaggedDataset& d, double f_low, double f_high) {
  features::Spectrum probe;
  probe.bin_hz = d.bin_hz;
  probe.n_fft = d.n_fft;
  probe.first_bin = d.first_bin;
  probe.magnitudes.resize(static_cast<std::size_t>(d.data.rows.cols()));
  const auto kept = features::band_select(probe, f_low, f_high);
  if (kept.size() == 0) throw ParameterError("band " + band_label(f_low, f_high) + " keeps no frequency bins");
  return {static_cast<Eigen::Index>(kept.first_bin - d.first_bin), static_cast<Eigen::Index>(kept.size())};
}

std::string model_file(const std::string& band) { return "model_" + band + ".vcas"; }

std::string csv_number(double v) {
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

learn::Head head_of(const io::TaggedDataset& d) {
  return d.data.label_names.empty() ? learn::Head::Regression : learn::Head::Classification;
}

json confusion_json(const learn::ConfusionMatrix& cm) {
  json counts = json::array();
  for (Eigen::Index r = 0; r < cm.counts.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < cm.counts.cols(); ++c) row.push_back(cm.counts(r, c));
    counts.push_back(row);
  }
  return {{"labels", cm.label_names}, {"counts", counts}};
}

envsim::Policy load_policy(const RunConfig& cfg, std::string* name) {
  if (cfg.policy == "expert") {
    *name = "expert";
    return envsim::observation_expert();
  }
  const fs::path path = cfg.policy.empty() ? cfg.sim_dir() / "policy.vcas" : fs::path(cfg.policy);
  if (!fs::exists(path)) throw DataError("policy file " + path.string() + " not found (run sim train-policy first)");
  *name = path.filename().string();
  return policy::as_policy(io::policy_from(io::read_container(path, io::PayloadKind::PolicyModel)));
}

json pose_json(const envsim::PoseState& p, const envsim::Grid& g) { return json::array({p.theta_x(g), p.theta_z(g)}); }

}  // namespace

io::TaggedDataset load_split(const fs::path& dir) {
  const auto files = container_files(dir);
  if (files.empty()) throw DataError("no session files (*.vcas) in " + dir.string() + " (run synth-data first)");
  std::vector<io::TaggedDataset> parts;
  Eigen::Index total = 0;
  for (const auto& f : files) {
    parts.push_back(io::dataset_from(io::read_container(f, io::PayloadKind::Dataset)));
    const auto& p = parts.back();
    const auto& first = parts.front();
    if (p.data.rows.cols() != first.data.rows.cols() || p.bin_hz != first.bin_hz ||
        p.data.label_names != first.data.label_names) {
      throw DataError(f.string() + " does not match the other sessions in " + dir.string());
    }
    total += p.data.rows.rows();
  }
  io::TaggedDataset out;
  out.bin_hz = parts.front().bin_hz;
  out.n_fft = parts.front().n_fft;
  out.first_bin = parts.front().first_bin;
  out.info = parts.front().info;
  out.data.label_names = parts.front().data.label_names;
  out.data.rows.resize(total, parts.front().data.rows.cols());
  Eigen::Index at = 0;
  for (auto& p : parts) {
    out.data.rows.middleRows(at, p.data.rows.rows()) = p.data.rows;
    at += p.data.rows.rows();
    p.data.rows.resize(0, 0);
    out.data.targets.insert(out.data.targets.end(), p.data.targets.begin(), p.data.targets.end());
    out.data.session_ids.insert(out.data.session_ids.end(), p.data.session_ids.begin(), p.data.session_ids.end());
    for (const auto& [name, values] : p.tags) {
      auto& dst = out.tags[name];
      dst.insert(dst.end(), values.begin(), values.end());
    }
  }
  return out;
}

TrainSummary train_task(const RunConfig& cfg) {
  cfg.validate();
  const fs::path dir = cfg.task_dir();
  const auto& band = features::band_by_name(cfg.band);
  io::TaggedDataset train = load_split(dir / "train");
  const learn::Head head = head_of(train);
  const auto [first, count] = band_columns(train, band.f_low, band.f_high);
  Eigen::MatrixXd rows = train.data.rows.middleCols(first, count);
  train.data.rows.resize(0, 0);

  io::TaskModel model;
  model.task = cfg.task;
  model.band = cfg.band;
  model.f_low = band.f_low;
  model.f_high = band.f_high;
  model.kpca = features::kpca_fit(rows, cfg.components());
  rows.resize(0, 0);

  learn::Dataset d;
  d.rows = features::fitted_embedding(model.kpca);
  d.targets = train.data.targets;
  d.label_names = train.data.label_names;
  d.session_ids = train.data.session_ids;
  const std::uint64_t seed = derive_seed(cfg.seed, std::string_view("train/" + cfg.task + "/" + cfg.band));
  auto trained = learn::mlp_train(d, head, cfg.train_config(seed));
  model.mlp = std::move(trained.model);

  io::write_container(dir / model_file(cfg.band), io::to_container(model));

  const Eigen::VectorXd full = model.kpca.full_explained_variance_ratio();
  std::ostringstream ev;
  ev << "component,eigenvalue,ratio,cumulative,retained\n";
  double cumulative = 0.0;
  for (Eigen::Index i = 0; i < full.size(); ++i) {
    cumulative += full(i);
    ev << i + 1 << ',' << csv_number(model.kpca.positive_eigenvalues(i)) << ',' << csv_number(full(i)) << ','
       << csv_number(cumulative) << ',' << (static_cast<std::size_t>(i) < model.kpca.n_components() ? 1 : 0) << '\n';
  }
  io::write_file(dir / ("explained_variance_" + cfg.band + ".csv"), ev.str());

  std::ostringstream curve;
  curve << "epoch,train_loss,validation_loss\n";
  for (std::size_t e = 0; e < trained.history.train_loss.size(); ++e) {
    curve << e << ',' << csv_number(trained.history.train_loss[e]) << ','
          << csv_number(trained.history.validation_loss[e]) << '\n';
  }
  io::write_file(dir / ("training_curve_" + cfg.band + ".csv"), curve.str());

  const Eigen::VectorXd ratio = model.kpca.explained_variance_ratio();
  json cum = json::object();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < full.size(); ++i) {
    acc += full(i);
    if (i + 1 == 3 || i + 1 == 5 || i + 1 == 10 || static_cast<std::size_t>(i + 1) == model.kpca.n_components()) {
      cum[std::to_string(i + 1)] = acc;
    }
  }
  json metrics{{"task", cfg.task},
               {"band", cfg.band},
               {"band_hz", {band.f_low, band.f_high}},
               {"band_label", band_label(band.f_low, band.f_high)},
               {"n_components", model.kpca.n_components()},
               {"n_train", d.size()},
               {"explained_variance_retained", ratio.sum()},
               {"cumulative_explained_variance", cum},
               {"epochs_run", trained.history.train_loss.size()},
               {"best_epoch", trained.history.best_epoch},
               {"best_validation_loss", trained.history.validation_loss[trained.history.best_epoch]}};
  io::write_file(dir / ("train_metrics_" + cfg.band + ".json"), metrics.dump(2) + "\n");

  TrainSummary s;
  s.model_path = dir / model_file(cfg.band);
  s.n_train = d.size();
  s.n_components = model.kpca.n_components();
  s.explained_variance_ratio = ratio;
  s.history = std::move(trained.history);
  return s;
}

EvalSummary eval_task(const RunConfig& cfg) {
  cfg.validate();
  const fs::path dir = cfg.task_dir();
  const fs::path model_path = dir / model_file(cfg.band);
  if (!fs::exists(model_path)) throw DataError("model " + model_path.string() + " not found (run train first)");
  const io::TaskModel model = io::task_model_from(io::read_container(model_path, io::PayloadKind::TaskModel));

  std::vector<std::string> conditions;
  if (fs::is_directory(dir / "test")) {
    for (const auto& e : fs::directory_iterator(dir / "test")) {
      if (e.is_directory() && !container_files(e.path()).empty()) conditions.push_back(e.path().filename().string());
    }
  }
  if (conditions.empty()) throw DataError("no test data under " + (dir / "test").string());
  std::sort(conditions.begin(), conditions.end(), [](const std::string& a, const std::string& b) {
    return std::pair(a != "in_distribution", a) < std::pair(b != "in_distribution", b);
  });

  EvalSummary summary;
  json rows = json::array();
  std::ostringstream csv;
  csv << "task,band,band_label,n_components,condition,n,metric,value\n";
  std::ostringstream per_target;
  per_target << "condition,target,count,rmse,mean_prediction\n";
  const std::string label = band_label(model.f_low, model.f_high);

  for (const auto& cond : conditions) {
    io::TaggedDataset test = load_split(dir / "test" / cond);
    if (model.mlp.head == learn::Head::Classification && test.data.label_names != model.mlp.label_names) {
      std::string have, want;
      for (const auto& l : test.data.label_names) have += (have.empty() ? "" : ",") + l;
      for (const auto& l : model.mlp.label_names) want += (want.empty() ? "" : ",") + l;
      throw DataError("label mismatch in " + (dir / "test" / cond).string() + ": data has [" + have +
                      "], model expects [" + want + "]");
    }
    if (head_of(test) != model.mlp.head) throw DataError("test data head does not match the model in " + cond);
    const auto [first, count] = band_columns(test, model.f_low, model.f_high);
    if (static_cast<std::size_t>(count) != model.kpca.input_dim()) {
      throw DataError("test spectra in " + cond + " do not match the model's feature width");
    }
    learn::Dataset d;
    d.rows = features::kpca_transform_rows(model.kpca, test.data.rows.middleCols(first, count));
    test.data.rows.resize(0, 0);
    d.targets = test.data.targets;
    d.label_names = test.data.label_names;

    EvalRow row;
    row.condition = cond;
    row.n = d.size();
    json jr{{"condition", cond}, {"n", row.n}};
    if (model.mlp.head == learn::Head::Classification) {
      auto report = learn::eval_classifier(model.mlp, d);
      row.accuracy = report.accuracy;
      row.confusion = report.confusion;
      jr["accuracy"] = report.accuracy;
      jr["confusion"] = confusion_json(report.confusion);
      csv << cfg.task << ',' << cfg.band << ',' << label << ',' << model.kpca.n_components() << ',' << cond << ','
          << row.n << ",accuracy," << csv_number(report.accuracy) << '\n';
    } else {
      auto report = learn::eval_regressor(model.mlp, d);
      row.rmse = report.rmse;
      row.per_target = report.per_target;
      jr["rmse"] = report.rmse;
      csv << cfg.task << ',' << cfg.band << ',' << label << ',' << model.kpca.n_components() << ',' << cond << ','
          << row.n << ",rmse," << csv_number(report.rmse) << '\n';
      for (const auto& t : report.per_target) {
        per_target << cond << ',' << csv_number(t.target) << ',' << t.count << ',' << csv_number(t.rmse) << ','
                   << csv_number(t.mean_prediction) << '\n';
      }
    }
    rows.push_back(jr);
    summary.rows.push_back(std::move(row));
  }

  json out{{"task", cfg.task},
           {"band", cfg.band},
           {"band_hz", {model.f_low, model.f_high}},
           {"band_label", label},
           {"n_components", model.kpca.n_components()},
           {"rows", rows}};
  io::write_file(dir / ("eval_" + cfg.band + ".json"), out.dump(2) + "\n");
  io::write_file(dir / ("eval_" + cfg.band + ".csv"), csv.str());
  if (model.mlp.head == learn::Head::Regression) {
    io::write_file(dir / ("pose_errors_" + cfg.band + ".csv"), per_target.str());
  }

  if (cfg.task == "contact") {
    const EvalRow& base = summary.rows.front();
    if (base.condition != "in_distribution") throw DataError("contact evaluation needs an in_distribution test split");
    std::vector<std::size_t> empty;
    const Eigen::MatrixXd norm = base.confusion.row_normalized(&empty);
    if (!empty.empty()) {
      throw DataError("contact test data has no samples of class '" + base.confusion.label_names[empty.front()] + "'");
    }
    envsim::ObservationModel::Matrix m{};
    for (int r = 0; r < envsim::kContactTypes; ++r) {
      const auto tr = static_cast<envsim::ContactType>(r);
      const auto ri = std::find(model.mlp.label_names.begin(), model.mlp.label_names.end(), envsim::to_string(tr)) -
                      model.mlp.label_names.begin();
      for (int c = 0; c < envsim::kContactTypes; ++c) {
        const auto oc = static_cast<envsim::ContactType>(c);
        const auto ci = std::find(model.mlp.label_names.begin(), model.mlp.label_names.end(), envsim::to_string(oc)) -
                        model.mlp.label_names.begin();
        if (ri >= static_cast<std::ptrdiff_t>(model.mlp.label_names.size()) ||
            ci >= static_cast<std::ptrdiff_t>(model.mlp.label_names.size())) {
          throw DataError("contact model labels must be diagonal, line and in_hole");
        }
        m[r][c] = norm(ri, ci);
      }
    }
    summary.observation_model = envsim::ObservationModel(m);
    io::write_file(dir / ("observation_model_" + cfg.band + ".csv"),
                   io::observation_model_csv(*summary.observation_model,
                                             "p(observed | true), rows and columns: diagonal, line, in_hole\n"
                                             "measured on the in_distribution test split, band " + label));
  }
  return summary;
}

envsim::ObservationModel observation_model(const RunConfig& cfg) {
  if (cfg.obs == "adjacent") return envsim::ObservationModel::adjacent(cfg.obs_accuracy);
  if (cfg.obs == "identity") return envsim::ObservationModel::identity();
  if (cfg.obs == "uniform") return envsim::ObservationModel::uniform();
  return io::parse_observation_model(io::read_file(cfg.obs));
}

std::string demos_to_jsonl(const envsim::DemoSet& demos) {
  std::string out;
  for (const auto& p : demos.pairs) {
    json h = json::array();
    for (auto t : p.history.window) h.push_back(std::string(envsim::to_string(t)));
    out += json{{"episode", p.episode}, {"history", h}, {"action", std::string(envsim::to_string(p.action))}}.dump();
    out += '\n';
  }
  return out;
}

envsim::DemoSet demos_from_jsonl(const std::string& text) {
  envsim::DemoSet demos;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  auto token = [](const std::string& s) {
    if (s == "none") return envsim::Token::None;
    return envsim::to_token(envsim::contact_from_string(s));
  };
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      envsim::DemoPair p;
      p.episode = j.at("episode").get<std::size_t>();
      for (const auto& t : j.at("history")) p.history.window.push_back(token(t.get<std::string>()));
      const std::string a = j.at("action").get<std::string>();
      if (a == "rot_x") {
        p.action = envsim::Action::RotX;
      } else if (a == "rot_z") {
        p.action = envsim::Action::RotZ;
      } else {
        throw DataError("unknown action '" + a + "'");
      }
      if (p.history.window.size() != envsim::kHistoryLength || !p.history.valid()) {
        throw DataError("history must hold 10 tokens with padding only at the front");
      }
      demos.episodes = std::max(demos.episodes, p.episode + 1);
      demos.pairs.push_back(std::move(p));
    } catch (const json::exception& e) {
      throw DataError("demo line " + std::to_string(number) + ": " + e.what());
    } catch (const Error& e) {
      throw DataError("demo line " + std::to_string(number) + ": " + e.what());
    }
  }
  return demos;
}

std::string episode_to_json(const envsim::Episode& ep, const envsim::Grid& g) {
  json steps = json::array();
  for (const auto& s : ep.steps) {
    steps.push_back({{"true", std::string(envsim::to_string(s.true_contact))},
                     {"observed", std::string(envsim::to_string(s.observed))},
                     {"action", std::string(envsim::to_string(s.action))},
                     {"next", pose_json(s.next, g)}});
  }
  return json{{"start", pose_json(ep.start, g)},
              {"seed", ep.seed},
              {"success", ep.success},
              {"length", ep.length()},
              {"final_true", std::string(envsim::to_string(ep.final_true))},
              {"final_observed", std::string(envsim::to_string(ep.final_observed))},
              {"steps", steps}}
      .dump();
}

envsim::DemoSet sim_demos(const RunConfig& cfg) {
  cfg.validate();
  const auto m = observation_model(cfg);
  const auto starts = envsim::regime_support(envsim::regime_from_string(cfg.demo_starts));
  auto demos = envsim::generate_demos(cfg.demos, starts, m, derive_seed(cfg.seed, "demos"));
  io::write_file(cfg.sim_dir() / "demos.jsonl", demos_to_jsonl(demos));
  return demos;
}

policy::PolicyTrainResult sim_train_policy(const RunConfig& cfg) {
  cfg.validate();
  const fs::path path = cfg.demos_file.empty() ? cfg.sim_dir() / "demos.jsonl" : fs::path(cfg.demos_file);
  if (!fs::exists(path)) throw DataError("demo set " + path.string() + " not found (run sim demos first)");
  const auto demos = demos_from_jsonl(io::read_file(path));
  auto result = policy::policy_train(demos, cfg.train_config(derive_seed(cfg.seed, "policy")), cfg.history);
  io::write_container(cfg.sim_dir() / "policy.vcas", io::to_container(result.model));
  std::ostringstream curve;
  curve << "epoch,train_loss,validation_loss\n";
  for (std::size_t e = 0; e < result.history.train_loss.size(); ++e) {
    curve << e << ',' << csv_number(result.history.train_loss[e]) << ','
          << csv_number(result.history.validation_loss[e]) << '\n';
  }
  io::write_file(cfg.sim_dir() / "policy_training_curve.csv", curve.str());
  json metrics{{"history_length", cfg.history},
               {"train_pairs", result.train_pairs},
               {"validation_pairs", result.validation_pairs},
               {"unique_train_rows", result.unique_train_rows},
               {"epochs_run", result.history.train_loss.size()},
               {"best_epoch", result.history.best_epoch},
               {"nll_train", policy::policy_nll(result.model, demos)}};
  io::write_file(cfg.sim_dir() / "policy_train_metrics.json", metrics.dump(2) + "\n");
  return result;
}

std::vector<policy::EvalReport> sim_eval_policy(const RunConfig& cfg) {
  cfg.validate();
  std::string name;
  const auto pol = load_policy(cfg, &name);
  const auto m = observation_model(cfg);
  std::vector<envsim::StartRegime> regimes;
  if (cfg.regime == "all") {
    regimes = {envsim::StartRegime::Fixed, envsim::StartRegime::Interpolated, envsim::StartRegime::OutOfDistribution};
  } else {
    regimes = {envsim::regime_from_string(cfg.regime)};
  }
  std::vector<policy::EvalReport> reports;
  json rows = json::array();
  std::ostringstream csv;
  csv << "policy,regime,n_episodes,successes,success_rate,mean_length,median_length,p90_length\n";
  std::string failures;
  for (auto r : regimes) {
    const std::string rn(envsim::to_string(r));
    auto rep = policy::policy_eval(pol, r, cfg.episodes, m, derive_seed(cfg.seed, std::string_view("eval/" + rn)));
    rows.push_back({{"regime", rn},
                    {"n_episodes", rep.n_episodes},
                    {"successes", rep.successes},
                    {"success_rate", rep.success_rate},
                    {"mean_length", rep.mean_length},
                    {"median_length", rep.median_length},
                    {"p90_length", rep.p90_length}});
    csv << name << ',' << rn << ',' << rep.n_episodes << ',' << rep.successes << ',' << csv_number(rep.success_rate)
        << ',' << csv_number(rep.mean_length) << ',' << csv_number(rep.median_length) << ','
        << csv_number(rep.p90_length) << '\n';
    for (const auto& ep : rep.failures) failures += episode_to_json(ep) + '\n';
    reports.push_back(std::move(rep));
  }
  json obs = json::array();
  for (const auto& row : m.matrix()) obs.push_back(row);
  json out{{"policy", name}, {"observation_model", obs}, {"rows", rows}};
  io::write_file(cfg.sim_dir() / "eval_policy.json", out.dump(2) + "\n");
  io::write_file(cfg.sim_dir() / "eval_policy.csv", csv.str());
  io::write_file(cfg.sim_dir() / "failures.jsonl", failures);
  return reports;
}

envsim::Episode sim_rollout(const RunConfig& cfg, std::ostream& trace) {
  cfg.validate();
  const auto comma = cfg.start.find(',');
  if (comma == std::string::npos) throw ParameterError("--start must be THETA_X,THETA_Z in degrees");
  double tx = 0.0, tz = 0.0;
  try {
    tx = std::stod(cfg.start.substr(0, comma));
    tz = std::stod(cfg.start.substr(comma + 1));
  } catch (const std::logic_error&) {
    throw ParameterError("--start must be THETA_X,THETA_Z in degrees, got '" + cfg.start + "'");
  }
  const envsim::Grid g;
  const auto start = envsim::PoseState::from_degrees(tx, tz, g);
  std::string name;
  const auto pol = load_policy(cfg, &name);
  const auto ep = envsim::rollout(pol, start, observation_model(cfg), derive_seed(cfg.seed, "rollout"), g);
  envsim::PoseState pose = ep.start;
  for (std::size_t i = 0; i < ep.steps.size(); ++i) {
    const auto& s = ep.steps[i];
    trace << json{{"step", i},
                  {"pose", pose_json(pose, g)},
                  {"true", std::string(envsim::to_string(s.true_contact))},
                  {"observed", std::string(envsim::to_string(s.observed))},
                  {"action", std::string(envsim::to_string(s.action))},
                  {"next", pose_json(s.next, g)}}
                 .dump()
          << '\n';
    pose = s.next;
  }
  trace << json{{"policy", name},
                {"success", ep.success},
                {"length", ep.length()},
                {"final_pose", pose_json(pose, g)},
                {"final_true", std::string(envsim::to_string(ep.final_true))},
                {"final_observed", std::string(envsim::to_string(ep.final_observed))}}
               .dump()
        << '\n';
  return ep;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"vcas: synthetic active acoustic sensing and insertion simulation"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::vector<std::string> sets;
  std::map<std::string, std::string> flags;
  auto flag = [&](CLI::App* a, const std::string& name, const std::string& key, const std::string& help) {
    a->add_option_function<std::string>(name, [&flags, key](const std::string& v) { flags[key] = v; }, help);
  };
  app.add_option("--config", config_path, "key=value configuration file");
  flag(&app, "--seed", "seed", "root random seed");
  flag(&app, "--task", "task", "object, grasp, pose or contact");
  flag(&app, "--band", "band", "full, low or high");
  flag(&app, "--out", "out", "artifact root (default $VCAS_DATA_DIR or ./vcas_data)");
  app.add_option("--set", sets, "override a configuration key (KEY=VALUE), repeatable");

  auto* synth = app.add_subcommand("synth-data", "synthesize per-session spectra datasets");
  auto* train = app.add_subcommand("train", "fit kernel PCA features and the estimator");
  flag(train, "--components", "n_components", "number of kernel principal components");
  auto* eval = app.add_subcommand("eval", "evaluate a trained model on every test condition");

  auto* sim = app.add_subcommand("sim", "insertion simulator workflows");
  sim->require_subcommand(1);
  sim->fallthrough();
  auto* demos = sim->add_subcommand("demos", "generate expert demonstrations");
  flag(demos, "--episodes", "demos", "number of demo episodes");
  flag(demos, "--starts", "demo_starts", "start regime for demonstrations");
  auto* train_policy = sim->add_subcommand("train-policy", "behavior-clone a policy from demos");
  flag(train_policy, "--demos", "demos_file", "demo set (JSON lines)");
  flag(train_policy, "--history", "history", "observation history length (1-10)");
  auto* eval_policy = sim->add_subcommand("eval-policy", "evaluate a policy per start regime");
  flag(eval_policy, "--episodes", "episodes", "episodes per regime");
  flag(eval_policy, "--regime", "regime", "fixed, interpolated, out_of_distribution, full_grid or all");
  auto* rollout = sim->add_subcommand("rollout", "print one verbose episode trace");
  flag(rollout, "--start", "start", "start pose THETA_X,THETA_Z in degrees");
  for (auto* s : {demos, eval_policy, rollout}) flag(s, "--obs", "obs", "adjacent, identity, uniform or a 3x3 CSV");
  for (auto* s : {eval_policy, rollout}) flag(s, "--policy", "policy", "policy file or 'expert'");
  for (auto* s : {demos, train_policy, eval_policy, rollout}) s->fallthrough();
  for (auto* s : {synth, train, eval}) s->fallthrough();

  auto* report = app.add_subcommand("report", "merge metrics into summary.md and summary.csv");
  std::vector<std::string> inputs;
  report->add_option("inputs", inputs, "metrics files or directories")->required();
  report->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : static_cast<int>(ExitCode::Usage);
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) {
      std::string text;
      try {
        text = io::read_file(config_path);
      } catch (const DataError& e) {
        throw ParameterError(e.what());
      }
      apply_config_text(cfg, text);
    }
    for (const auto& [k, v] : flags) cfg.set(k, v);
    for (const auto& s : sets) {
      const auto [k, v] = split_assignment(s);
      cfg.set(k, v);
    }
    cfg.validate();

    if (*synth) {
      const auto s = synth_data(cfg);
      out << "synth-data " << cfg.task << ": " << s.train_rows << " train rows, " << s.test_rows << " test rows";
      for (const auto& [c, n] : s.condition_rows) out << ", " << n << " " << c;
      out << " -> " << cfg.task_dir().string() << '\n';
    } else if (*train) {
      const auto s = train_task(cfg);
      out << "train " << cfg.task << " [" << cfg.band << "]: " << s.n_train << " rows, " << s.n_components
          << " components (" << std::setprecision(4) << 100.0 * s.explained_variance_ratio.sum()
          << "% explained variance), best epoch " << s.history.best_epoch << " -> " << s.model_path.string() << '\n';
    } else if (*eval) {
      const auto s = eval_task(cfg);
      for (const auto& r : s.rows) {
        out << "eval " << cfg.task << " [" << cfg.band << "] " << r.condition << " n=" << r.n;
        if (r.accuracy) out << " accuracy=" << *r.accuracy;
        if (r.rmse) out << " rmse=" << *r.rmse;
        out << '\n';
      }
    } else if (*sim) {
      if (*demos) {
        const auto d = sim_demos(cfg);
        out << "sim demos: " << d.episodes << " episodes, " << d.pairs.size() << " pairs -> "
            << (cfg.sim_dir() / "demos.jsonl").string() << '\n';
      } else if (*train_policy) {
        const auto r = sim_train_policy(cfg);
        out << "sim train-policy: " << r.train_pairs << " train pairs (" << r.unique_train_rows
            << " unique), best epoch " << r.history.best_epoch << " -> " << (cfg.sim_dir() / "policy.vcas").string()
            << '\n';
      } else if (*eval_policy) {
        for (const auto& r : sim_eval_policy(cfg)) {
          out << "sim eval-policy " << envsim::to_string(r.regime) << ": success_rate=" << r.success_rate
              << " mean_length=" << r.mean_length << '\n';
        }
      } else if (*rollout) {
        sim_rollout(cfg, out);
      }
    } else if (*report) {
      std::vector<fs::path> paths(inputs.begin(), inputs.end());
      const auto table = build_report(paths);
      const fs::path dir = cfg.out.empty() ? cfg.out_root() : cfg.out;
      write_report(table, dir);
      out << "report: " << table.rows.size() << " rows -> " << (dir / "summary.md").string() << '\n';
    }
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const json::exception& e) {
    err << "error: malformed JSON: " << e.what() << '\n';
    return static_cast<int>(ExitCode::Data);
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::Data);
  }
}

}  // namespace vcas::cli

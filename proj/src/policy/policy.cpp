#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "vcas/error.hpp"
#include "vcas/policy.hpp"

namespace vcas::policy {

using envsim::Action;
using envsim::ObservationHistory;

Eigen::VectorXd encode_history(const ObservationHistory& h) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(h.window.size()) * envsim::kTokenCount);
  for (std::size_t i = 0; i < h.window.size(); ++i) {
    x(static_cast<Eigen::Index>(i) * envsim::kTokenCount + static_cast<int>(h.window[i])) = 1.0;
  }
  return x;
}

namespace {

// Merges identical (window, action) pairs of the selected episodes.
learn::Dataset aggregate(const envsim::DemoSet& demos, const std::vector<bool>& use_episode,
                         std::size_t history_length, std::size_t* pair_count) {
  std::map<std::pair<ObservationHistory, int>, double> counts;
  *pair_count = 0;
  for (const auto& p : demos.pairs) {
    if (!use_episode[p.episode]) continue;
    ++counts[{p.history.tail(history_length), static_cast<int>(p.action)}];
    ++*pair_count;
  }
  learn::Dataset d;
  d.label_names = kActionLabels;
  d.rows.resize(static_cast<Eigen::Index>(counts.size()),
                static_cast<Eigen::Index>(history_length) * envsim::kTokenCount);
  Eigen::Index r = 0;
  for (const auto& [key, n] : counts) {
    d.rows.row(r++) = encode_history(key.first).transpose();
    d.targets.push_back(key.second);
    d.weights.push_back(n);
  }
  return d;
}

}  // namespace

PolicyTrainResult policy_train(const envsim::DemoSet& demos, const learn::TrainConfig& cfg,
                               std::size_t history_length) {
  if (demos.pairs.empty()) throw ParameterError("policy_train: empty demo set");
  if (history_length < 1 || history_length > envsim::kHistoryLength) {
    throw ParameterError("policy_train: history length must lie in [1, 10]");
  }
  std::set<Action> actions;
  std::size_t episodes = 0;
  for (const auto& p : demos.pairs) {
    actions.insert(p.action);
    episodes = std::max(episodes, p.episode + 1);
  }
  if (actions.size() < 2) {
    throw DegenerateInputError("policy_train: demos contain only the action " +
                               std::string(envsim::to_string(*actions.begin())));
  }
  if (episodes < 2) throw ParameterError("policy_train: need at least two demo episodes");

  // Hold out a seeded tenth of the episodes.
  std::vector<std::size_t> ids(episodes);
  std::iota(ids.begin(), ids.end(), 0);
  const std::uint64_t split_seed = derive_seed(cfg.seed, "demo-split");
  std::sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) {
    return std::pair(derive_seed(split_seed, a), a) < std::pair(derive_seed(split_seed, b), b);
  });
  const auto n_val = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(cfg.validation_fraction * static_cast<double>(episodes))));
  std::vector<bool> is_val(episodes, false);
  for (std::size_t i = 0; i < n_val && i < episodes; ++i) is_val[ids[i]] = true;
  std::vector<bool> is_train(episodes);
  for (std::size_t e = 0; e < episodes; ++e) is_train[e] = !is_val[e];

  PolicyTrainResult result;
  learn::Dataset train = aggregate(demos, is_train, history_length, &result.train_pairs);
  learn::Dataset val = aggregate(demos, is_val, history_length, &result.validation_pairs);
  val.split = learn::Split::Validation;
  if (std::set<double>(train.targets.begin(), train.targets.end()).size() < 2) {
    throw DegenerateInputError("policy_train: training episodes contain a single action");
  }
  result.unique_train_rows = train.size();

  auto trained = learn::mlp_train(train, val, learn::Head::Classification, cfg);
  result.model.network = std::move(trained.model);
  result.model.history_length = history_length;
  result.history = std::move(trained.history);
  return result;
}

Eigen::Vector2d action_probabilities(const PolicyModel& model, const ObservationHistory& h) {
  const ObservationHistory window =
      h.window.size() == model.history_length ? h : h.tail(model.history_length);
  const Eigen::VectorXd x = encode_history(window);
  const Eigen::VectorXd p = learn::mlp_forward(model.network, std::span<const double>(x.data(), x.size()));
  return {p(0), p(1)};
}

double policy_nll(const PolicyModel& model, const envsim::DemoSet& demos) {
  if (demos.pairs.empty()) throw ParameterError("policy_nll: empty demo set");
  double sum = 0.0;
  for (const auto& pair : demos.pairs) {
    const Eigen::Vector2d p = action_probabilities(model, pair.history);
    sum -= std::log(p(static_cast<int>(pair.action)));
  }
  return sum / static_cast<double>(demos.pairs.size());
}

Action policy_act(const PolicyModel& model, const ObservationHistory& h, ActMode mode, Rng& rng) {
  const Eigen::Vector2d p = action_probabilities(model, h);
  if (mode == ActMode::Greedy) return p(0) > p(1) ? Action::RotX : Action::RotZ;
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  if (p(0) <= 0.0) return Action::RotZ;
  if (p(1) <= 0.0) return Action::RotX;
  return u < p(0) ? Action::RotX : Action::RotZ;
}

envsim::Policy as_policy(const PolicyModel& model, ActMode mode) {
  return envsim::Policy{[model, mode](const ObservationHistory& h, Rng& rng) {
                          return policy_act(model, h, mode, rng);
                        },
                        model.history_length};
}

EvalReport policy_eval(const envsim::Policy& policy, envsim::StartRegime regime,
                       std::size_t n_episodes, const envsim::ObservationModel& m,
                       std::uint64_t seed, const envsim::Grid& g) {
  if (n_episodes < 1) throw ParameterError("policy_eval: need at least one episode");
  EvalReport report;
  report.regime = regime;
  report.n_episodes = n_episodes;
  std::vector<double> lengths;
  lengths.reserve(n_episodes);
  const std::uint64_t start_seed = derive_seed(seed, "start");
  const std::uint64_t rollout_seed = derive_seed(seed, "rollout");
  for (std::size_t i = 0; i < n_episodes; ++i) {
    const auto start = envsim::start_pose_sampler(regime, derive_seed(start_seed, i), g);
    auto ep = envsim::rollout(policy, start, m, derive_seed(rollout_seed, i), g);
    lengths.push_back(static_cast<double>(ep.length()));
    if (ep.success) {
      ++report.successes;
    } else if (report.failures.size() < kMaxFailureTraces) {
      report.failures.push_back(std::move(ep));
    }
  }
  report.success_rate = static_cast<double>(report.successes) / static_cast<double>(n_episodes);
  report.mean_length = std::accumulate(lengths.begin(), lengths.end(), 0.0) / static_cast<double>(n_episodes);
  std::sort(lengths.begin(), lengths.end());
  auto percentile = [&](double q) {
    const double pos = q * static_cast<double>(lengths.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    return lengths[lo] + (pos - static_cast<double>(lo)) * (lengths[hi] - lengths[lo]);
  };
  report.median_length = percentile(0.5);
  report.p90_length = percentile(0.9);
  return report;
}

}  // namespace vcas::policy

#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "vcas/envsim.hpp"
#include "vcas/learn.hpp"

namespace vcas::policy {

// Categorical policy over {RotX, RotZ} conditioned on a one-hot encoded
// observation window (history_length x 4 inputs).
struct PolicyModel {
  learn::MlpModel network;
  std::size_t history_length = envsim::kHistoryLength;
};

inline const std::vector<std::string> kActionLabels{"rot_x", "rot_z"};

// One-hot rows of the window flattened oldest first. The None token keeps its
// own slot so padding is distinguishable from any contact label.
Eigen::VectorXd encode_history(const envsim::ObservationHistory& h);

struct PolicyTrainResult {
  PolicyModel model;
  learn::TrainHistory history;
  std::size_t train_pairs = 0;
  std::size_t validation_pairs = 0;
  std::size_t unique_train_rows = 0;
};

// Minimizes the mean negative log-likelihood of the expert actions. One tenth
// of the episodes is held out for early stopping. Identical (window, action)
// pairs are merged into weighted rows, which leaves the objective unchanged.
PolicyTrainResult policy_train(const envsim::DemoSet& demos, const learn::TrainConfig& cfg,
                               std::size_t history_length = envsim::kHistoryLength);

// Mean -log pi(a_expert | window) over the demo pairs.
double policy_nll(const PolicyModel& model, const envsim::DemoSet& demos);

// P(RotX), P(RotZ).
Eigen::Vector2d action_probabilities(const PolicyModel& model, const envsim::ObservationHistory& h);

enum class ActMode { Greedy, Sample };

// Greedy ties go to RotZ, the expert's first phase.
envsim::Action policy_act(const PolicyModel& model, const envsim::ObservationHistory& h,
                          ActMode mode, Rng& rng);

envsim::Policy as_policy(const PolicyModel& model, ActMode mode = ActMode::Greedy);

struct EvalReport {
  envsim::StartRegime regime = envsim::StartRegime::Fixed;
  std::size_t n_episodes = 0;
  std::size_t successes = 0;
  double success_rate = 0.0;
  double mean_length = 0.0;
  double median_length = 0.0;
  double p90_length = 0.0;
  std::vector<envsim::Episode> failures;  // at most kMaxFailureTraces
};

inline constexpr std::size_t kMaxFailureTraces = 20;

// Episode i uses start and rollout seeds derived from (seed, i), so the
// report does not depend on the order in which episodes run.
EvalReport policy_eval(const envsim::Policy& policy, envsim::StartRegime regime,
                       std::size_t n_episodes, const envsim::ObservationModel& m,
                       std::uint64_t seed, const envsim::Grid& g = {});

}  // namespace vcas::policy

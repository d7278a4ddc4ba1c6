#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vcas/rng.hpp"

namespace vcas::envsim {

// Angles are stored as integer multiples of the grid step. The goal (aligned,
// in-hole) is 90 degrees on both axes.
struct Grid {
  double step_deg = 4.5;
  int min_x = 1;  // smallest index on each axis (index * step = angle)
  int min_z = 1;

  int goal_index() const;  // 90 / step
  void validate() const;
};

struct PoseState {
  int ix = 0;
  int iz = 0;

  double theta_x(const Grid& g = {}) const { return ix * g.step_deg; }
  double theta_z(const Grid& g = {}) const { return iz * g.step_deg; }

  // Throws ParameterError for off-grid or out-of-range angles.
  static PoseState from_degrees(double theta_x, double theta_z, const Grid& g = {});
  bool valid(const Grid& g = {}) const;

  friend bool operator==(const PoseState&, const PoseState&) = default;
};

enum class ContactType : int { Diagonal = 0, Line = 1, InHole = 2 };
inline constexpr int kContactTypes = 3;

enum class Action : int { RotX = 0, RotZ = 1 };

std::string_view to_string(ContactType c);
std::string_view to_string(Action a);
ContactType contact_from_string(std::string_view s);

ContactType contact_type(const PoseState& p, const Grid& g = {});

// +1 grid step on the chosen axis, saturating at 90 degrees.
PoseState step(const PoseState& p, Action a, const Grid& g = {});

// RotZ until theta_z = 90, then RotX until theta_x = 90; nullopt at the goal.
std::optional<Action> expert_action(const PoseState& p, const Grid& g = {});

// Row-stochastic p(observed | true) over {Diagonal, Line, InHole}.
class ObservationModel {
 public:
  using Matrix = std::array<std::array<double, kContactTypes>, kContactTypes>;

  // Throws ParameterError (listing the row sums) unless every row is a
  // categorical distribution to 1e-9.
  explicit ObservationModel(const Matrix& rows);

  static ObservationModel identity();
  static ObservationModel uniform();
  // Diagonal<->Line<->InHole adjacent confusion: the residual mass of each
  // row is split between its neighbours (no Diagonal<->InHole confusion).
  static ObservationModel adjacent(double accuracy = 0.95);

  const Matrix& matrix() const noexcept { return rows_; }
  double probability(ContactType truth, ContactType observed) const;

 private:
  Matrix rows_;
};

ContactType sample_observation(const ObservationModel& m, ContactType truth, Rng& rng);

// Observation token: a contact label or the padding symbol used before ten
// observations exist.
enum class Token : int { Diagonal = 0, Line = 1, InHole = 2, None = 3 };
inline constexpr int kTokenCount = 4;
inline constexpr std::size_t kHistoryLength = 10;

Token to_token(ContactType c);
std::string_view to_string(Token t);

// Fixed-length observation window, most recent last, left-padded with None.
struct ObservationHistory {
  std::vector<Token> window;

  // Last `length` observations of `observed`, padded at the front.
  static ObservationHistory from_observations(const std::vector<ContactType>& observed,
                                              std::size_t length = kHistoryLength);
  // Keeps the most recent `length` tokens.
  ObservationHistory tail(std::size_t length) const;
  bool valid() const;  // None tokens only as a contiguous prefix

  friend bool operator==(const ObservationHistory&, const ObservationHistory&) = default;
  friend auto operator<=>(const ObservationHistory& a, const ObservationHistory& b) {
    return a.window <=> b.window;
  }
};

// Anything that maps an observation window to an action.
struct Policy {
  std::function<Action(const ObservationHistory&, Rng&)> act;
  std::size_t history_length = kHistoryLength;
};

// Acts on the newest observation exactly as the expert would on the truth.
Policy observation_expert();
Policy constant_policy(Action a);

inline constexpr std::size_t kMaxEpisodeSteps = 50;

struct EpisodeStep {
  ContactType true_contact;
  ContactType observed;
  Action action;
  PoseState next;
};

struct Episode {
  PoseState start;
  std::vector<EpisodeStep> steps;
  // Observation sampled at the pose where the episode stopped.
  ContactType final_true = ContactType::Diagonal;
  ContactType final_observed = ContactType::Diagonal;
  bool success = false;
  std::uint64_t seed = 0;

  std::size_t length() const noexcept { return steps.size(); }
};

// observe -> act until the true contact is InHole or 50 steps have been taken.
Episode rollout(const Policy& policy, const PoseState& start, const ObservationModel& m,
                std::uint64_t seed, const Grid& g = {});

enum class StartRegime { Fixed, Interpolated, OutOfDistribution, FullGrid };

std::string_view to_string(StartRegime r);
StartRegime regime_from_string(std::string_view s);

// fixed: (45, 45); interpolated: theta_x = 45, theta_z on grid in [45, 90];
// out_of_distribution: theta_x in [40.5, 81], theta_z in [9, 90];
// full_grid: any pose of the grid.
PoseState start_pose_sampler(StartRegime regime, std::uint64_t seed, const Grid& g = {});

// Every pose a regime can produce.
std::vector<PoseState> regime_support(StartRegime regime, const Grid& g = {});
std::vector<PoseState> all_poses(const Grid& g = {});

struct DemoPair {
  ObservationHistory history;
  Action action;
  std::size_t episode = 0;
};

struct DemoSet {
  std::vector<DemoPair> pairs;
  std::size_t episodes = 0;
};

// Starts are drawn uniformly from `starts`. Each step records the window of
// sampled observations and the expert's action on the true pose.
DemoSet generate_demos(std::size_t n_episodes, const std::vector<PoseState>& starts,
                       const ObservationModel& m, std::uint64_t seed, const Grid& g = {});

}  // namespace vcas::envsim

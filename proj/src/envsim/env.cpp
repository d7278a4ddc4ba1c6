#include <cmath>
#include <random>
#include <sstream>

#include "vcas/envsim.hpp"
#include "vcas/error.hpp"

namespace vcas::envsim {

int Grid::goal_index() const { return static_cast<int>(std::lround(90.0 / step_deg)); }

void Grid::validate() const {
  if (!(step_deg > 0.0)) throw ParameterError("grid step must be positive");
  const double ratio = 90.0 / step_deg;
  if (std::abs(ratio - std::round(ratio)) > 1e-9) {
    throw ParameterError("grid step must divide 90 degrees");
  }
  if (min_x < 1 || min_z < 1 || min_x > goal_index() || min_z > goal_index()) {
    throw ParameterError("grid extent must lie inside (0, 90] degrees");
  }
}

bool PoseState::valid(const Grid& g) const {
  return ix >= g.min_x && iz >= g.min_z && ix <= g.goal_index() && iz <= g.goal_index();
}

PoseState PoseState::from_degrees(double theta_x, double theta_z, const Grid& g) {
  auto to_index = [&](double deg, const char* axis) {
    const double k = deg / g.step_deg;
    const double r = std::round(k);
    if (std::abs(k - r) > 1e-9) {
      std::ostringstream why;
      why << "theta_" << axis << "=" << deg << " is not on the " << g.step_deg << " degree grid";
      throw ParameterError(why.str());
    }
    return static_cast<int>(r);
  };
  PoseState p{to_index(theta_x, "x"), to_index(theta_z, "z")};
  if (!p.valid(g)) {
    std::ostringstream why;
    why << "pose (" << theta_x << ", " << theta_z << ") lies outside the grid";
    throw ParameterError(why.str());
  }
  return p;
}

std::string_view to_string(ContactType c) {
  switch (c) {
    case ContactType::Diagonal: return "diagonal";
    case ContactType::Line: return "line";
    case ContactType::InHole: return "in_hole";
  }
  return "?";
}

std::string_view to_string(Action a) { return a == Action::RotX ? "rot_x" : "rot_z"; }

std::string_view to_string(Token t) {
  return t == Token::None ? "none" : to_string(static_cast<ContactType>(t));
}

ContactType contact_from_string(std::string_view s) {
  for (ContactType c : {ContactType::Diagonal, ContactType::Line, ContactType::InHole}) {
    if (to_string(c) == s) return c;
  }
  throw ParameterError("unknown contact type '" + std::string(s) + "'");
}

ContactType contact_type(const PoseState& p, const Grid& g) {
  if (!p.valid(g)) throw ParameterError("contact_type: pose is off the grid");
  const int goal = g.goal_index();
  if (p.iz < goal) return ContactType::Diagonal;
  return p.ix < goal ? ContactType::Line : ContactType::InHole;
}

PoseState step(const PoseState& p, Action a, const Grid& g) {
  const int goal = g.goal_index();
  PoseState next = p;
  if (a == Action::RotX) {
    next.ix = std::min(goal, p.ix + 1);
  } else {
    next.iz = std::min(goal, p.iz + 1);
  }
  return next;
}

std::optional<Action> expert_action(const PoseState& p, const Grid& g) {
  const int goal = g.goal_index();
  if (p.iz < goal) return Action::RotZ;
  if (p.ix < goal) return Action::RotX;
  return std::nullopt;
}

ObservationModel::ObservationModel(const Matrix& rows) : rows_(rows) {
  std::ostringstream sums;
  bool ok = true;
  for (int r = 0; r < kContactTypes; ++r) {
    double s = 0.0;
    for (double p : rows[r]) {
      if (!(p >= 0.0) || !std::isfinite(p)) ok = false;
      s += p;
    }
    if (std::abs(s - 1.0) > 1e-9) ok = false;
    sums << (r ? ", " : "") << s;
  }
  if (!ok) {
    throw ParameterError("observation model rows must be non-negative and sum to 1 (row sums: " +
                         sums.str() + ")");
  }
}

ObservationModel ObservationModel::identity() {
  return ObservationModel(Matrix{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}});
}

ObservationModel ObservationModel::uniform() {
  const double t = 1.0 / 3.0;
  return ObservationModel(Matrix{{{t, t, 1.0 - 2 * t}, {t, t, 1.0 - 2 * t}, {t, t, 1.0 - 2 * t}}});
}

ObservationModel ObservationModel::adjacent(double accuracy) {
  if (!(accuracy >= 0.0 && accuracy <= 1.0)) {
    throw ParameterError("observation accuracy must lie in [0, 1]");
  }
  const double miss = 1.0 - accuracy;
  return ObservationModel(Matrix{{{accuracy, miss, 0.0},
                                  {miss / 2.0, accuracy, miss / 2.0},
                                  {0.0, miss, accuracy}}});
}

double ObservationModel::probability(ContactType truth, ContactType observed) const {
  return rows_[static_cast<int>(truth)][static_cast<int>(observed)];
}

ContactType sample_observation(const ObservationModel& m, ContactType truth, Rng& rng) {
  const auto& row = m.matrix()[static_cast<int>(truth)];
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  int last_positive = 0;
  for (int c = 0; c < kContactTypes; ++c) {
    if (row[c] <= 0.0) continue;
    last_positive = c;
    acc += row[c];
    if (u < acc) return static_cast<ContactType>(c);
  }
  return static_cast<ContactType>(last_positive);
}

Token to_token(ContactType c) { return static_cast<Token>(static_cast<int>(c)); }

ObservationHistory ObservationHistory::from_observations(const std::vector<ContactType>& observed,
                                                         std::size_t length) {
  ObservationHistory h;
  h.window.assign(length, Token::None);
  const std::size_t take = std::min(length, observed.size());
  for (std::size_t k = 0; k < take; ++k) {
    h.window[length - take + k] = to_token(observed[observed.size() - take + k]);
  }
  return h;
}

ObservationHistory ObservationHistory::tail(std::size_t length) const {
  if (length > window.size()) throw ParameterError("history tail longer than the window");
  ObservationHistory h;
  h.window.assign(window.end() - static_cast<std::ptrdiff_t>(length), window.end());
  return h;
}

bool ObservationHistory::valid() const {
  bool seen_real = false;
  for (Token t : window) {
    if (t == Token::None && seen_real) return false;
    if (t != Token::None) seen_real = true;
  }
  return !window.empty();
}

Policy observation_expert() {
  return Policy{[](const ObservationHistory& h, Rng&) {
                  const Token last = h.window.back();
                  return last == Token::Diagonal || last == Token::None ? Action::RotZ
                                                                        : Action::RotX;
                },
                1};
}

Policy constant_policy(Action a) {
  return Policy{[a](const ObservationHistory&, Rng&) { return a; }, 1};
}

Episode rollout(const Policy& policy, const PoseState& start, const ObservationModel& m,
                std::uint64_t seed, const Grid& g) {
  g.validate();
  if (!start.valid(g)) throw ParameterError("rollout: start pose is off the grid");
  Episode ep;
  ep.start = start;
  ep.seed = seed;
  Rng rng(seed);
  std::vector<ContactType> observed;
  PoseState pose = start;
  while (true) {
    const ContactType truth = contact_type(pose, g);
    const ContactType obs = sample_observation(m, truth, rng);
    observed.push_back(obs);
    if (truth == ContactType::InHole || ep.steps.size() >= kMaxEpisodeSteps) {
      ep.final_true = truth;
      ep.final_observed = obs;
      ep.success = truth == ContactType::InHole;
      break;
    }
    const auto window = ObservationHistory::from_observations(observed, policy.history_length);
    const Action a = policy.act(window, rng);
    pose = step(pose, a, g);
    ep.steps.push_back({truth, obs, a, pose});
  }
  return ep;
}

std::string_view to_string(StartRegime r) {
  switch (r) {
    case StartRegime::Fixed: return "fixed";
    case StartRegime::Interpolated: return "interpolated";
    case StartRegime::OutOfDistribution: return "out_of_distribution";
    case StartRegime::FullGrid: return "full_grid";
  }
  return "?";
}

StartRegime regime_from_string(std::string_view s) {
  for (auto r : {StartRegime::Fixed, StartRegime::Interpolated, StartRegime::OutOfDistribution,
                 StartRegime::FullGrid}) {
    if (to_string(r) == s) return r;
  }
  throw ParameterError("unknown start regime '" + std::string(s) +
                       "' (expected fixed, interpolated, out_of_distribution or full_grid)");
}

std::vector<PoseState> all_poses(const Grid& g) {
  g.validate();
  std::vector<PoseState> out;
  for (int ix = g.min_x; ix <= g.goal_index(); ++ix) {
    for (int iz = g.min_z; iz <= g.goal_index(); ++iz) out.push_back({ix, iz});
  }
  return out;
}

std::vector<PoseState> regime_support(StartRegime regime, const Grid& g) {
  g.validate();
  auto index_of = [&](double deg) { return static_cast<int>(std::lround(deg / g.step_deg)); };
  std::vector<PoseState> out;
  auto add_range = [&](double x_lo, double x_hi, double z_lo, double z_hi) {
    for (int ix = index_of(x_lo); ix <= index_of(x_hi); ++ix) {
      for (int iz = index_of(z_lo); iz <= index_of(z_hi); ++iz) {
        PoseState p{ix, iz};
        if (p.valid(g)) out.push_back(p);
      }
    }
  };
  switch (regime) {
    case StartRegime::Fixed: add_range(45.0, 45.0, 45.0, 45.0); break;
    case StartRegime::Interpolated: add_range(45.0, 45.0, 45.0, 90.0); break;
    case StartRegime::OutOfDistribution: add_range(40.5, 81.0, 9.0, 90.0); break;
    case StartRegime::FullGrid: out = all_poses(g); break;
  }
  if (out.empty()) throw ParameterError("start regime has no poses on this grid");
  return out;
}

PoseState start_pose_sampler(StartRegime regime, std::uint64_t seed, const Grid& g) {
  const auto support = regime_support(regime, g);
  if (support.size() == 1) return support.front();
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, support.size() - 1);
  return support[pick(rng)];
}

}  // namespace vcas::envsim

#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <map>
#include <set>

#include "vcas/envsim.hpp"
#include "vcas/error.hpp"

using namespace vcas;
using namespace vcas::envsim;

namespace {

PoseState deg(double x, double z) { return PoseState::from_degrees(x, z); }

std::size_t expected_length(const PoseState& p) {
  const Grid g;
  return static_cast<std::size_t>(std::lround(((90.0 - p.theta_z(g)) + (90.0 - p.theta_x(g)) ) / 4.5));
}

Policy expert_on_truth_via_identity() { return observation_expert(); }

}  // namespace

TEST_CASE("contact_type examples", "[envsim]") {
  CHECK(contact_type(deg(45, 45)) == ContactType::Diagonal);
  CHECK(contact_type(deg(58.5, 90)) == ContactType::Line);
  CHECK(contact_type(deg(90, 90)) == ContactType::InHole);
  CHECK_THROWS_AS(contact_type(PoseState{0, 3}), ParameterError);
  CHECK_THROWS_AS(contact_type(PoseState{21, 3}), ParameterError);
  CHECK_THROWS_AS(PoseState::from_degrees(44.0, 45.0), ParameterError);
  CHECK_THROWS_AS(PoseState::from_degrees(94.5, 45.0), ParameterError);
}

TEST_CASE("contact_type partitions the grid", "[envsim][property]") {
  const auto poses = all_poses();
  REQUIRE(poses.size() == 400);
  std::map<ContactType, int> counts;
  for (const auto& p : poses) ++counts[contact_type(p)];
  // Direct enumeration: theta_z < 90 is diagonal (19 x 20), theta_z = 90 splits 19 line / 1 in-hole.
  CHECK(counts[ContactType::Diagonal] == 380);
  CHECK(counts[ContactType::Line] == 19);
  CHECK(counts[ContactType::InHole] == 1);

  // Sub-rectangle [45, 72] x [63, 90].
  int d = 0, l = 0, h = 0;
  for (const auto& p : poses) {
    if (p.theta_x() < 45 || p.theta_x() > 72 || p.theta_z() < 63) continue;
    switch (contact_type(p)) {
      case ContactType::Diagonal: ++d; break;
      case ContactType::Line: ++l; break;
      case ContactType::InHole: ++h; break;
    }
  }
  CHECK(d == 7 * 6);
  CHECK(l == 7);
  CHECK(h == 0);
}

TEST_CASE("step examples and monotonicity", "[envsim]") {
  CHECK(step(deg(45, 45), Action::RotZ) == deg(45, 49.5));
  CHECK(step(deg(90, 90), Action::RotX) == deg(90, 90));
  const auto p = step(deg(85.5, 90), Action::RotX);
  CHECK(p == deg(90, 90));
  CHECK(contact_type(p) == ContactType::InHole);

  for (const auto& pose : all_poses()) {
    for (Action a : {Action::RotX, Action::RotZ}) {
      const auto next = step(pose, a);
      REQUIRE(next.valid());
      REQUIRE(next.ix >= pose.ix);
      REQUIRE(next.iz >= pose.iz);
      REQUIRE((next.ix - pose.ix) + (next.iz - pose.iz) <= 1);
    }
  }
}

TEST_CASE("expert_action examples", "[envsim]") {
  CHECK(expert_action(deg(45, 45)) == Action::RotZ);
  CHECK(expert_action(deg(58.5, 90)) == Action::RotX);
  CHECK_FALSE(expert_action(deg(90, 90)).has_value());
}

TEST_CASE("expert reaches the hole in the minimum number of steps from every pose",
          "[envsim][property]") {
  const auto identity = ObservationModel::identity();
  for (const auto& p : all_poses()) {
    const auto ep = rollout(expert_on_truth_via_identity(), p, identity, 5);
    INFO("start " << p.theta_x() << ", " << p.theta_z());
    REQUIRE(ep.success);
    REQUIRE(ep.length() == expected_length(p));
    REQUIRE(ep.length() <= 38);  // 2 * (20 - 1) steps from the (4.5, 4.5) corner
    REQUIRE(ep.length() < kMaxEpisodeSteps);
  }
}

TEST_CASE("observation models", "[envsim][obs]") {
  SECTION("construction rejects non-stochastic rows and lists the sums") {
    try {
      ObservationModel bad({{{0.5, 0.5, 0.0}, {0.2, 0.2, 0.2}, {0, 0, 1}}});
      FAIL("expected a ParameterError");
    } catch (const ParameterError& e) {
      CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("0.6"));
    }
    CHECK_THROWS_AS(ObservationModel({{{1.5, -0.5, 0.0}, {0, 1, 0}, {0, 0, 1}}}), ParameterError);
    CHECK_THROWS_AS(ObservationModel::adjacent(1.2), ParameterError);
  }
  SECTION("default adjacent model") {
    const auto m = ObservationModel::adjacent();
    CHECK(m.probability(ContactType::Diagonal, ContactType::Diagonal) == 0.95);
    CHECK(m.probability(ContactType::Diagonal, ContactType::InHole) == 0.0);
    CHECK(m.probability(ContactType::Line, ContactType::InHole) == Catch::Approx(0.025));
    CHECK(m.probability(ContactType::InHole, ContactType::Diagonal) == 0.0);
  }
  SECTION("identity observations always equal the truth") {
    Rng rng(1);
    const auto m = ObservationModel::identity();
    for (int i = 0; i < 3000; ++i) {
      const auto c = static_cast<ContactType>(i % 3);
      REQUIRE(sample_observation(m, c, rng) == c);
    }
  }
  SECTION("empirical frequencies lie within three binomial sigmas") {
    const auto m = ObservationModel::adjacent();
    constexpr int n = 100000;
    for (int truth = 0; truth < 3; ++truth) {
      Rng rng(derive_seed(77, static_cast<std::uint64_t>(truth)));
      std::array<int, 3> counts{};
      for (int i = 0; i < n; ++i) ++counts[static_cast<int>(sample_observation(m, static_cast<ContactType>(truth), rng))];
      for (int c = 0; c < 3; ++c) {
        const double p = m.matrix()[truth][c];
        const double sigma = std::sqrt(n * p * (1.0 - p));
        INFO("truth " << truth << " observed " << c);
        CHECK(std::abs(counts[c] - n * p) <= 3.0 * sigma);
      }
    }
  }
  SECTION("uniform rows make observations independent of the truth") {
    const auto m = ObservationModel::uniform();
    Rng rng(9);
    constexpr int per_row = 30000;
    std::array<std::array<double, 3>, 3> table{};
    for (int truth = 0; truth < 3; ++truth) {
      for (int i = 0; i < per_row; ++i) {
        table[truth][static_cast<int>(sample_observation(m, static_cast<ContactType>(truth), rng))] += 1.0;
      }
    }
    double chi2 = 0.0;
    for (int c = 0; c < 3; ++c) {
      const double col = table[0][c] + table[1][c] + table[2][c];
      for (int r = 0; r < 3; ++r) {
        const double expected = col * per_row / (3.0 * per_row);
        chi2 += (table[r][c] - expected) * (table[r][c] - expected) / expected;
      }
    }
    CHECK(chi2 < 18.47);  // 4 degrees of freedom, p = 0.001
  }
}

TEST_CASE("observation history", "[envsim]") {
  using C = ContactType;
  const auto h = ObservationHistory::from_observations({C::Diagonal, C::Line});
  REQUIRE(h.window.size() == kHistoryLength);
  for (std::size_t i = 0; i < 8; ++i) CHECK(h.window[i] == Token::None);
  CHECK(h.window[8] == Token::Diagonal);
  CHECK(h.window[9] == Token::Line);
  CHECK(h.valid());
  CHECK(h.tail(1).window == std::vector<Token>{Token::Line});

  std::vector<C> many(14, C::Diagonal);
  many.back() = C::InHole;
  const auto full = ObservationHistory::from_observations(many);
  CHECK(full.window.back() == Token::InHole);
  CHECK(std::count(full.window.begin(), full.window.end(), Token::None) == 0);

  ObservationHistory broken{{Token::Line, Token::None}};
  CHECK_FALSE(broken.valid());
}

TEST_CASE("generate_demos", "[envsim][demos]") {
  const auto identity = ObservationModel::identity();
  SECTION("two-step episodes from (85.5, 85.5)") {
    const auto demos = generate_demos(3, {deg(85.5, 85.5)}, identity, 1);
    REQUIRE(demos.pairs.size() == 6);
    for (std::size_t i = 0; i < 6; i += 2) {
      CHECK(demos.pairs[i].action == Action::RotZ);
      CHECK(demos.pairs[i + 1].action == Action::RotX);
      CHECK(demos.pairs[i + 1].history.window.back() == Token::Line);
    }
  }
  SECTION("twenty steps from (45, 45)") {
    const auto demos = generate_demos(1, {deg(45, 45)}, identity, 1);
    CHECK(demos.pairs.size() == 20);
  }
  SECTION("deterministic in the seed") {
    const auto starts = all_poses();
    const auto m = ObservationModel::adjacent();
    const auto a = generate_demos(50, starts, m, 3);
    const auto b = generate_demos(50, starts, m, 3);
    const auto c = generate_demos(50, starts, m, 4);
    REQUIRE(a.pairs.size() == b.pairs.size());
    bool differs = a.pairs.size() != c.pairs.size();
    for (std::size_t i = 0; i < a.pairs.size(); ++i) {
      REQUIRE(a.pairs[i].history == b.pairs[i].history);
      REQUIRE(a.pairs[i].action == b.pairs[i].action);
      if (!differs && !(a.pairs[i].history == c.pairs[i].history)) differs = true;
    }
    CHECK(differs);
  }
  SECTION("errors") {
    CHECK_THROWS_AS(generate_demos(1, {}, identity, 1), ParameterError);
    CHECK_THROWS_AS(generate_demos(0, {deg(45, 45)}, identity, 1), ParameterError);
  }
}

TEST_CASE("rollout", "[envsim][rollout]") {
  const auto noisy = ObservationModel::adjacent();
  SECTION("always-RotZ fails after the step budget") {
    const auto ep = rollout(constant_policy(Action::RotZ), deg(45, 45), noisy, 1);
    CHECK_FALSE(ep.success);
    CHECK(ep.length() == kMaxEpisodeSteps);
    CHECK(ep.final_true == ContactType::Line);
  }
  SECTION("episodes replay bit-for-bit from the stored seed") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      const auto ep = rollout(observation_expert(), deg(45, 9), noisy, seed);
      const auto again = rollout(observation_expert(), ep.start, noisy, ep.seed);
      REQUIRE(again.length() == ep.length());
      for (std::size_t i = 0; i < ep.length(); ++i) {
        REQUIRE(again.steps[i].observed == ep.steps[i].observed);
        REQUIRE(again.steps[i].action == ep.steps[i].action);
        REQUIRE(again.steps[i].next == ep.steps[i].next);
      }
      REQUIRE(again.final_observed == ep.final_observed);
    }
  }
  SECTION("trace invariants") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const auto ep = rollout(observation_expert(), start_pose_sampler(StartRegime::FullGrid, seed),
                              noisy, seed);
      REQUIRE(ep.length() <= kMaxEpisodeSteps);
      REQUIRE(ep.success == (ep.final_true == ContactType::InHole));
      PoseState prev = ep.start;
      for (const auto& s : ep.steps) {
        REQUIRE(s.true_contact == contact_type(prev));
        REQUIRE(s.next.ix >= prev.ix);
        REQUIRE(s.next.iz >= prev.iz);
        prev = s.next;
      }
    }
  }
  SECTION("start at the goal ends immediately") {
    const auto ep = rollout(constant_policy(Action::RotZ), deg(90, 90), noisy, 1);
    CHECK(ep.success);
    CHECK(ep.length() == 0);
  }
}

TEST_CASE("start_pose_sampler", "[envsim]") {
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    CHECK(start_pose_sampler(StartRegime::Fixed, seed) == deg(45, 45));
    const auto i = start_pose_sampler(StartRegime::Interpolated, seed);
    REQUIRE(i.theta_x() == 45.0);
    REQUIRE(i.theta_z() >= 45.0);
    REQUIRE(i.theta_z() <= 90.0);
    const auto o = start_pose_sampler(StartRegime::OutOfDistribution, seed);
    REQUIRE(o.theta_x() >= 40.5);
    REQUIRE(o.theta_x() <= 81.0);
    REQUIRE(o.theta_z() >= 9.0);
    REQUIRE(o.theta_z() <= 90.0);
  }
  CHECK(regime_support(StartRegime::Interpolated).size() == 11);
  CHECK(regime_support(StartRegime::OutOfDistribution).size() == 10 * 19);
  std::set<std::pair<int, int>> seen;
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    const auto p = start_pose_sampler(StartRegime::Interpolated, seed);
    seen.insert({p.ix, p.iz});
  }
  CHECK(seen.size() == 11);
  CHECK(regime_from_string("out_of_distribution") == StartRegime::OutOfDistribution);
  CHECK_THROWS_AS(regime_from_string("sideways"), ParameterError);
}

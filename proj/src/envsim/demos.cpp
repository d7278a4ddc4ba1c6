#include <random>

#include "vcas/envsim.hpp"
#include "vcas/error.hpp"

namespace vcas::envsim {

DemoSet generate_demos(std::size_t n_episodes, const std::vector<PoseState>& starts,
                       const ObservationModel& m, std::uint64_t seed, const Grid& g) {
  if (n_episodes < 1) throw ParameterError("generate_demos: need at least one episode");
  if (starts.empty()) throw ParameterError("generate_demos: empty start distribution");
  g.validate();
  for (const auto& s : starts) {
    if (!s.valid(g)) throw ParameterError("generate_demos: start pose is off the grid");
  }

  DemoSet demos;
  demos.episodes = n_episodes;
  for (std::size_t ep = 0; ep < n_episodes; ++ep) {
    Rng rng(derive_seed(seed, ep));
    PoseState pose = starts.size() == 1
                         ? starts.front()
                         : starts[std::uniform_int_distribution<std::size_t>(0, starts.size() - 1)(rng)];
    std::vector<ContactType> observed;
    // The expert always reaches the goal within the step budget.
    while (auto action = expert_action(pose, g)) {
      observed.push_back(sample_observation(m, contact_type(pose, g), rng));
      demos.pairs.push_back({ObservationHistory::from_observations(observed), *action, ep});
      pose = step(pose, *action, g);
    }
  }
  return demos;
}

}  // namespace vcas::envsim

#include <cmath>

#include "vcas/error.hpp"
#include "vcas/signal.hpp"

namespace vcas::signal {

ContactEvent detect_contact(const Waveform& stream, double threshold, std::size_t debounce) {
  if (!(threshold > 0.0)) throw ParameterError("contact threshold must be positive");
  ContactEvent event;
  for (std::size_t i = 0; i < stream.samples.size(); ++i) {
    if (std::abs(stream.samples[i]) >= threshold) {
      event.detected = true;
      event.sample_index = i;
      event.false_positive = i < debounce;
      break;
    }
  }
  return event;
}

}  // namespace vcas::signal

#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace mipt {

// observable values captured at one snapshot, keyed by probe name
struct ObservableBundle {
  std::map<std::string, double> values;
};

// One disorder realization's outputs. log_z is the accumulated ln of
// squared-norm factors stripped by renormalization (ln Z_X); in Born mode
// trajectories stay normalized and born_log_prob carries sum ln p_outcome.
struct TrajectoryRecord {
  std::uint64_t realization = 0;
  double log_z = 0.0;
  double born_log_prob = 0.0;
  bool annihilated = false;
  std::map<int, ObservableBundle> snapshots;  // step -> bundle
};

}  // namespace mipt

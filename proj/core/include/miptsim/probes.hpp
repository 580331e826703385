#pragma once

#include <string>
#include <vector>

#include "miptsim/record.hpp"
#include "miptsim/state.hpp"

namespace mipt {

// Four contiguous quarters A, B, C, D anchored at `anchor` (D implicit).
struct QuarterPartition {
  Region a, b, c, d;
  static QuarterPartition anchored(int sites, int anchor = 0);
};

// I_{3,n} = S(A)+S(B)+S(C) - S(AB) - S(AC) - S(BC) + S(ABC)
// on the quarter partition; requires sites divisible by 4.
double tripartite_mutual_info(const PureState& state, double n = 1.0,
                              int anchor = 0);

// S_n of the contiguous region [0, L/2)
double halfcut_entropy(const PureState& state, double n = 1.0);

// -log Z of one realization; averaging and area normalization happen in
// the analysis layer. Throws on annihilated records.
double free_energy_sample(const TrajectoryRecord& rec);

// Snapshot probes evaluated on a pure state register. Supported names:
//   i3             tripartite mutual information, von Neumann
//   i3_n<k>        same at Renyi index k
//   halfcut_n<k>   half-cut Renyi entropy, k = 1..
//   log_z          running log weight
class ProbeSet {
 public:
  ProbeSet() = default;
  static ProbeSet parse(const std::vector<std::string>& names);

  void evaluate(const PureState& state, ObservableBundle& out) const;
  bool empty() const { return probes_.empty(); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  enum class Kind { i3, halfcut, log_z };
  struct Probe {
    Kind kind;
    double n;
    std::string name;
  };
  std::vector<Probe> probes_;
  std::vector<std::string> names_;
};

}  // namespace mipt

#include "miptsim/probes.hpp"

#include <stdexcept>

namespace mipt {

QuarterPartition QuarterPartition::anchored(int sites, int anchor) {
  if (sites % 4 != 0)
    throw std::invalid_argument("quarter partition: sites not divisible by 4");
  const int q = sites / 4;
  QuarterPartition p;
  p.a = Region::contiguous(anchor, q, sites);
  p.b = Region::contiguous(anchor + q, q, sites);
  p.c = Region::contiguous(anchor + 2 * q, q, sites);
  p.d = Region::contiguous(anchor + 3 * q, q, sites);
  return p;
}

double tripartite_mutual_info(const PureState& state, double n, int anchor) {
  const auto p = QuarterPartition::anchored(state.sites(), anchor);
  const double sa = renyi_entropy(state, p.a, n);
  const double sb = renyi_entropy(state, p.b, n);
  const double sc = renyi_entropy(state, p.c, n);
  const double sab = renyi_entropy(state, p.a.united(p.b), n);
  const double sac = renyi_entropy(state, p.a.united(p.c), n);
  const double sbc = renyi_entropy(state, p.b.united(p.c), n);
  // S(ABC) = S(D) for a pure state; renyi_entropy already flips to the
  // smaller side of the cut
  const double sabc = renyi_entropy(state, p.a.united(p.b).united(p.c), n);
  return sa + sb + sc - sab - sac - sbc + sabc;
}

double halfcut_entropy(const PureState& state, double n) {
  if (state.sites() % 2 != 0)
    throw std::invalid_argument("halfcut_entropy: odd site count");
  return renyi_entropy(state, Region::contiguous(0, state.sites() / 2, state.sites()), n);
}

double free_energy_sample(const TrajectoryRecord& rec) {
  if (rec.annihilated)
    throw std::invalid_argument("free_energy_sample: annihilated record");
  return -rec.log_z;
}

ProbeSet ProbeSet::parse(const std::vector<std::string>& names) {
  ProbeSet set;
  for (const auto& name : names) {
    Probe p{Kind::log_z, 1.0, name};
    if (name == "i3") {
      p.kind = Kind::i3;
    } else if (name.rfind("i3_n", 0) == 0) {
      p.kind = Kind::i3;
      p.n = std::stod(name.substr(4));
    } else if (name.rfind("halfcut_n", 0) == 0) {
      p.kind = Kind::halfcut;
      p.n = std::stod(name.substr(9));
    } else if (name == "log_z") {
      p.kind = Kind::log_z;
    } else {
      throw std::invalid_argument("unknown probe: " + name);
    }
    if (p.n < 1.0) throw std::invalid_argument("probe renyi index < 1: " + name);
    set.probes_.push_back(p);
    set.names_.push_back(name);
  }
  return set;
}

void ProbeSet::evaluate(const PureState& state, ObservableBundle& out) const {
  for (const auto& p : probes_) {
    double v = 0.0;
    switch (p.kind) {
      case Kind::i3:
        v = tripartite_mutual_info(state, p.n);
        break;
      case Kind::halfcut:
        v = halfcut_entropy(state, p.n);
        break;
      case Kind::log_z:
        v = state.log_weight();
        break;
    }
    out.values[p.name] = v;
  }
}

}  // namespace mipt

#include "miptsim/rng.hpp"

// RngStream is header-only; this TU anchors the target.

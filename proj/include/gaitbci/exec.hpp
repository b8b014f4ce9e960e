#pragma once

namespace gaitbci {

// Batch kernels (spectra, CV folds, Monte Carlo trials) come in two flavors:
// an OpenMP loop and the plain serial loop kept as the reference. Both call
// the same per-item code and must produce bitwise-identical results.
enum class Exec { Serial, Parallel };

} // namespace gaitbci

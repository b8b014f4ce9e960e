#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace gaitbci::detail {

// Thin FFTW wrappers. Plans are cached per length and created under a lock;
// execution is re-entrant so these may be called from OpenMP regions.

// out.size() must be in.size() / 2 + 1.
void rfft(std::span<const double> in, std::span<std::complex<double>> out);

// Unnormalized inverse of rfft: out.size() == n, in.size() == n / 2 + 1.
void irfft(std::span<const std::complex<double>> in, std::span<double> out);

} // namespace gaitbci::detail

#pragma once

#include "gaitbci/signal.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace gaitbci {

struct WindowSpec {
  double length = 0.75; // seconds
  double step = 0.25;   // seconds

  // Sample counts use floor(seconds * fs).
  std::size_t length_samples(double fs) const;
  std::size_t step_samples(double fs) const;
  void validate(double fs) const;
};

struct BinSpec {
  double bin_width = 2.0;
  double f_lo = 2.0;
  double f_hi = 40.0;

  std::size_t n_bins() const;
  void validate(double fs) const;
};

enum class Taper { Hamming, Rectangular };

struct PsdOptions {
  Taper taper = Taper::Hamming;
  bool detrend = true;  // subtract the window mean before tapering
  std::size_t nfft = 0; // 0 = smallest power of two >= 2 * window length
};

std::size_t default_nfft(std::size_t window_samples);

// B x C band-power matrix (microvolts^2) for one analysis window.
struct SpectralSample {
  Eigen::MatrixXd values; // rows = frequency bins, cols = channels
  double window_start = 0.0;
  double f_lo = 0.0;
  double bin_width = 2.0;

  std::size_t n_bins() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t n_channels() const { return static_cast<std::size_t>(values.cols()); }
  double f_hi() const { return f_lo + bin_width * static_cast<double>(n_bins()); }
};

using WindowView = Eigen::Map<const SignalMatrix, Eigen::Unaligned, Eigen::OuterStride<>>;

// Read-only view of one window of a recording.
struct Window {
  double start = 0.0; // seconds from recording start
  std::size_t offset = 0;
  WindowView data;
};

std::size_t window_count(std::size_t n_samples, std::size_t length, std::size_t step);

// Windows start at k * step; a recording shorter than one window is an error.
std::vector<Window> slice_windows(const Recording& rec, const WindowSpec& spec);

// Windows lying entirely inside [start, end) seconds, on the same k * step grid
// anchored at `start`.
std::vector<Window> slice_windows(const Recording& rec, const WindowSpec& spec, double start,
                                  double end);

// Periodogram PSD per channel integrated over half-open [f, f + bin_width)
// bins. The top bin is closed when f_hi is the Nyquist frequency. `channels`
// selects rows of the window; empty means all rows.
SpectralSample band_power(const Eigen::Ref<const SignalMatrix>& window, double fs, const BinSpec& bins,
                          const PsdOptions& opts = {}, std::span<const std::size_t> channels = {},
                          double window_start = 0.0);

SpectralSample restrict_band(const SpectralSample& sample, double f_lo, double f_hi);

} // namespace gaitbci

#include "gaitbci/exec.hpp"

namespace gaitbci {

// band_power over many windows; output order matches `windows`.
std::vector<SpectralSample> compute_spectra(std::span<const Window> windows, double fs, const BinSpec& bins,
                                            const PsdOptions& opts = {},
                                            std::span<const std::size_t> channels = {},
                                            Exec exec = Exec::Parallel);

} // namespace gaitbci

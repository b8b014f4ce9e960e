#include "gaitbci/spectral.hpp"

#include "fft.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>

namespace gaitbci {
namespace {

constexpr double kEps = 1e-9;

std::size_t seconds_to_samples(double seconds, double fs) {
  return static_cast<std::size_t>(std::floor(seconds * fs + kEps));
}

} // namespace

std::size_t WindowSpec::length_samples(double fs) const { return seconds_to_samples(length, fs); }
std::size_t WindowSpec::step_samples(double fs) const { return seconds_to_samples(step, fs); }

void WindowSpec::validate(double fs) const {
  if (!(step > 0.0) || !(step <= length)) throw ConfigError("window spec requires 0 < step <= length");
  if (length_samples(fs) < 2) throw ConfigError("window shorter than two samples");
  if (step_samples(fs) < 1) throw ConfigError("window step shorter than one sample");
}

std::size_t BinSpec::n_bins() const {
  return static_cast<std::size_t>(std::llround((f_hi - f_lo) / bin_width));
}

void BinSpec::validate(double fs) const {
  if (!(bin_width > 0.0)) throw ConfigError("bin_width must be positive");
  if (!(f_lo >= 0.0) || !(f_lo < f_hi)) throw ConfigError("bins require 0 <= f_lo < f_hi");
  if (f_hi > fs / 2.0 + kEps) throw ConfigError("f_hi exceeds the Nyquist frequency");
  const double ratio = (f_hi - f_lo) / bin_width;
  if (std::abs(ratio - std::round(ratio)) > 1e-9)
    throw ConfigError("band width is not a multiple of bin_width");
}

std::size_t default_nfft(std::size_t window_samples) {
  std::size_t n = 1;
  while (n < 2 * window_samples) n <<= 1;
  return n;
}

std::size_t window_count(std::size_t n_samples, std::size_t length, std::size_t step) {
  if (length == 0 || step == 0 || n_samples < length) return 0;
  return (n_samples - length) / step + 1;
}

namespace {

std::vector<Window> make_windows(const Recording& rec, std::size_t first, std::size_t last,
                                 std::size_t length, std::size_t step) {
  std::vector<Window> out;
  const auto& s = rec.samples();
  const auto rows = s.rows();
  const auto stride = s.outerStride();
  const std::size_t count = last > first ? window_count(last - first, length, step) : 0;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t off = first + k * step;
    out.push_back(Window{static_cast<double>(off) / rec.fs(), off,
                         WindowView(s.data() + off, rows, static_cast<Eigen::Index>(length),
                                    Eigen::OuterStride<>(stride))});
  }
  return out;
}

} // namespace

std::vector<Window> slice_windows(const Recording& rec, const WindowSpec& spec) {
  spec.validate(rec.fs());
  const std::size_t len = spec.length_samples(rec.fs());
  if (rec.n_samples() < len)
    throw EmptyInputError("recording (" + std::to_string(rec.duration()) +
                          " s) is shorter than one window");
  return make_windows(rec, 0, rec.n_samples(), len, spec.step_samples(rec.fs()));
}

std::vector<Window> slice_windows(const Recording& rec, const WindowSpec& spec, double start, double end) {
  spec.validate(rec.fs());
  if (!(start >= 0.0) || !(end > start)) throw ConfigError("slice interval must satisfy 0 <= start < end");
  const auto first = static_cast<std::size_t>(std::llround(start * rec.fs()));
  const auto last = std::min(rec.n_samples(), static_cast<std::size_t>(std::llround(end * rec.fs())));
  return make_windows(rec, first, last, spec.length_samples(rec.fs()), spec.step_samples(rec.fs()));
}

SpectralSample band_power(const Eigen::Ref<const SignalMatrix>& window, double fs, const BinSpec& bins,
                          const PsdOptions& opts, std::span<const std::size_t> channels,
                          double window_start) {
  const auto n = static_cast<std::size_t>(window.cols());
  if (n < 2) throw DataError("window needs at least two samples");
  bins.validate(fs);
  const std::size_t nfft = opts.nfft ? opts.nfft : default_nfft(n);
  if (nfft < n) throw ConfigError("nfft shorter than the window");
  const std::size_t n_freq = nfft / 2 + 1;
  const double df = fs / static_cast<double>(nfft);

  std::vector<double> taper(n, 1.0);
  if (opts.taper == Taper::Hamming)
    for (std::size_t i = 0; i < n; ++i)
      taper[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                        static_cast<double>(n - 1));
  const double power_norm = std::inner_product(taper.begin(), taper.end(), taper.begin(), 0.0);

  // Frequency-index range of each bin, [k_begin, k_end).
  const std::size_t n_bins = bins.n_bins();
  std::vector<std::size_t> k_edge(n_bins + 1);
  for (std::size_t b = 0; b <= n_bins; ++b) {
    const double f = bins.f_lo + static_cast<double>(b) * bins.bin_width;
    k_edge[b] = std::min(n_freq, static_cast<std::size_t>(std::ceil(f / df - kEps)));
  }
  if (std::abs(bins.f_hi - fs / 2.0) < kEps) k_edge[n_bins] = n_freq;

  const std::size_t n_ch = channels.empty() ? static_cast<std::size_t>(window.rows()) : channels.size();
  SpectralSample out;
  out.values.setZero(static_cast<Eigen::Index>(n_bins), static_cast<Eigen::Index>(n_ch));
  out.window_start = window_start;
  out.f_lo = bins.f_lo;
  out.bin_width = bins.bin_width;

  std::vector<double> buf(nfft);
  std::vector<std::complex<double>> spec(n_freq);
  std::vector<double> psd(n_freq);
  for (std::size_t c = 0; c < n_ch; ++c) {
    const std::size_t row = channels.empty() ? c : channels[c];
    if (row >= static_cast<std::size_t>(window.rows())) throw GeometryError("channel index out of range");
    const auto x = window.row(static_cast<Eigen::Index>(row));
    if (!x.allFinite()) throw DataError("window contains NaN or Inf");
    // Plain left-to-right sum: Eigen's vectorized reduction peels by pointer
    // alignment, which would make results depend on where the window lives.
    double mean = 0.0;
    if (opts.detrend) {
      for (std::size_t i = 0; i < n; ++i) mean += x(static_cast<Eigen::Index>(i));
      mean /= static_cast<double>(n);
    }
    for (std::size_t i = 0; i < n; ++i) buf[i] = taper[i] * (x(static_cast<Eigen::Index>(i)) - mean);
    std::fill(buf.begin() + static_cast<std::ptrdiff_t>(n), buf.end(), 0.0);
    detail::rfft(buf, spec);
    for (std::size_t k = 0; k < n_freq; ++k) {
      const double one_sided = (k == 0 || 2 * k == nfft) ? 1.0 : 2.0;
      psd[k] = one_sided * std::norm(spec[k]) / (fs * power_norm);
    }
    for (std::size_t b = 0; b < n_bins; ++b) {
      double acc = 0.0;
      for (std::size_t k = k_edge[b]; k < k_edge[b + 1]; ++k) acc += psd[k];
      out.values(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(c)) = acc * df;
    }
  }
  return out;
}

SpectralSample restrict_band(const SpectralSample& sample, double f_lo, double f_hi) {
  const double lo_idx = (f_lo - sample.f_lo) / sample.bin_width;
  const double hi_idx = (f_hi - sample.f_lo) / sample.bin_width;
  if (std::abs(lo_idx - std::round(lo_idx)) > 1e-9 || std::abs(hi_idx - std::round(hi_idx)) > 1e-9)
    throw ConfigError("band [" + std::to_string(f_lo) + ", " + std::to_string(f_hi) +
                      ") is not aligned to the bin grid");
  const auto b0 = std::llround(lo_idx), b1 = std::llround(hi_idx);
  if (b0 < 0 || b1 > static_cast<long long>(sample.n_bins()) || b1 <= b0)
    throw ConfigError("band outside the sample's frequency range");
  SpectralSample out;
  out.values = sample.values.middleRows(b0, b1 - b0);
  out.window_start = sample.window_start;
  out.f_lo = f_lo;
  out.bin_width = sample.bin_width;
  return out;
}

} // namespace gaitbci

namespace gaitbci {

std::vector<SpectralSample> compute_spectra(std::span<const Window> windows, double fs, const BinSpec& bins,
                                            const PsdOptions& opts, std::span<const std::size_t> channels,
                                            Exec exec) {
  std::vector<SpectralSample> out(windows.size());
  const auto n = static_cast<std::ptrdiff_t>(windows.size());
  if (exec == Exec::Serial) {
    for (std::ptrdiff_t i = 0; i < n; ++i)
      out[i] = band_power(windows[i].data, fs, bins, opts, channels, windows[i].start);
    return out;
  }
  // Exceptions cannot cross the OpenMP region boundary; capture the first one.
  std::exception_ptr error;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[i] = band_power(windows[i].data, fs, bins, opts, channels, windows[i].start);
    } catch (...) {
#pragma omp critical(gaitbci_spectra_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

} // namespace gaitbci

#include "gaitbci/spectral.hpp"
#include "gaitbci/random.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <numbers>

using namespace gaitbci;

namespace {

Recording zeros(double seconds, std::size_t channels = 1) {
  return Recording(SignalMatrix::Zero(static_cast<Eigen::Index>(channels), static_cast<Eigen::Index>(std::llround(seconds * 256.0))),
                   256.0, default_channel_labels(channels));
}

SignalMatrix white_noise(std::size_t channels, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> dist(0.0, 3.0);
  SignalMatrix x(static_cast<Eigen::Index>(channels), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = dist(rng) + 1.5;
  return x;
}

std::vector<double> row_vector(const SignalMatrix& x, Eigen::Index r) {
  return std::vector<double>(x.row(r).data(), x.row(r).data() + x.cols());
}

} // namespace

TEST_CASE("window counts") {
  const WindowSpec spec;
  CHECK(slice_windows(zeros(10.0), spec).size() == 38);
  const auto one = slice_windows(zeros(0.75), spec);
  REQUIRE(one.size() == 1);
  CHECK(one[0].start == 0.0);
  const auto many = slice_windows(zeros(300.0), spec);
  CHECK(many.size() == 1198);
  CHECK(many[5].start == 1.25);
  CHECK(many[5].offset == 320);
  for (const auto& w : many) CHECK(w.data.cols() == 192);
  CHECK_THROWS_AS(slice_windows(zeros(0.7), spec), EmptyInputError);
  CHECK_THROWS_AS(slice_windows(zeros(1.0), WindowSpec{0.75, 1.0}), ConfigError);
}

TEST_CASE("windows view the source samples") {
  SignalMatrix x(2, 512);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = static_cast<double>(i);
  const Recording rec(x, 256.0, {"a", "b"});
  const auto w = slice_windows(rec, WindowSpec{});
  CHECK(w[2].data(1, 3) == rec.samples()(1, 128 + 3));
  CHECK(w[2].data.data() == rec.samples().data() + 128);

  const auto sub = slice_windows(rec, WindowSpec{}, 0.5, 2.0);
  REQUIRE(sub.size() == 4);
  CHECK(sub[0].offset == 128);
  CHECK(sub.back().offset + 192 <= 512);
}

TEST_CASE("10 Hz sinusoid against the direct DFT oracle") {
  const std::size_t n = 192;
  SignalMatrix x(1, n);
  for (std::size_t i = 0; i < n; ++i) x(0, static_cast<Eigen::Index>(i)) = std::sin(2.0 * std::numbers::pi * 10.0 * static_cast<double>(i) / 256.0);
  const BinSpec bins{2.0, 0.0, 128.0};
  const auto s = band_power(x, 256.0, bins);
  REQUIRE(s.n_bins() == 64);
  const auto ref = oracle::dft_band_power(row_vector(x, 0), 256.0, 512, true, true, 0.0, 2.0, 64);
  double total = 0.0;
  for (std::size_t b = 0; b < 64; ++b) {
    CHECK(s.values(static_cast<Eigen::Index>(b), 0) == doctest::Approx(ref[b]).epsilon(1e-9).scale(1e-12));
    total += s.values(static_cast<Eigen::Index>(b), 0);
  }
  const double near = s.values(4, 0) + s.values(5, 0);
  CHECK(near / total >= 0.9);
}

TEST_CASE("oracle agreement for random signals and configurations") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 16 + rng() % 200;
    const auto x = white_noise(1, n, rng());
    PsdOptions opts;
    opts.taper = trial % 2 ? Taper::Rectangular : Taper::Hamming;
    opts.detrend = trial % 3 != 0;
    const BinSpec bins{2.0, 2.0, 40.0};
    const auto s = band_power(x, 256.0, bins, opts);
    const auto ref = oracle::dft_band_power(row_vector(x, 0), 256.0, default_nfft(n), opts.taper == Taper::Hamming,
                                            opts.detrend, 2.0, 2.0, 19);
    for (std::size_t b = 0; b < 19; ++b)
      CHECK(s.values(static_cast<Eigen::Index>(b), 0) == doctest::Approx(ref[b]).epsilon(1e-9).scale(1e-12));
  }
}

TEST_CASE("Parseval: rectangular periodogram sums to the sample variance") {
  const BinSpec all{2.0, 0.0, 128.0};
  PsdOptions opts;
  opts.taper = Taper::Rectangular;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const std::size_t n = 64 + seed * 7;
    const auto x = white_noise(2, n, seed);
    const auto s = band_power(x, 256.0, all, opts);
    for (Eigen::Index c = 0; c < 2; ++c) {
      const auto row = x.row(c).array();
      const double var = (row - row.mean()).square().mean();
      CHECK(s.values.col(c).sum() == doctest::Approx(var).epsilon(1e-6));
      CHECK((s.values.col(c).array() >= 0.0).all());
    }
  }
}

TEST_CASE("zero and non-finite input") {
  const auto z = band_power(SignalMatrix::Zero(3, 192), 256.0, BinSpec{});
  CHECK(z.values.isZero(0.0));
  CHECK(z.n_bins() == 19);
  CHECK(z.n_channels() == 3);

  SignalMatrix bad = SignalMatrix::Zero(1, 192);
  bad(0, 7) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(band_power(bad, 256.0, BinSpec{}), DataError);
  CHECK_THROWS_AS(band_power(SignalMatrix::Zero(1, 1), 256.0, BinSpec{}), DataError);
  CHECK_THROWS_AS(band_power(SignalMatrix::Zero(1, 192), 256.0, BinSpec{2.0, 2.0, 200.0}), ConfigError);
  CHECK_THROWS_AS(band_power(SignalMatrix::Zero(1, 192), 256.0, BinSpec{3.0, 2.0, 40.0}), ConfigError);
}

TEST_CASE("channel selection") {
  const auto x = white_noise(4, 192, 5);
  const std::vector<std::size_t> pick{3, 1};
  const auto s = band_power(x, 256.0, BinSpec{}, {}, pick);
  const auto full = band_power(x, 256.0, BinSpec{});
  CHECK(s.values.col(0) == full.values.col(3));
  CHECK(s.values.col(1) == full.values.col(1));
  const std::vector<std::size_t> out_of_range{4};
  CHECK_THROWS_AS(band_power(x, 256.0, BinSpec{}, {}, out_of_range), GeometryError);
}

TEST_CASE("restrict_band") {
  const auto s = band_power(white_noise(2, 192, 8), 256.0, BinSpec{});
  CHECK(restrict_band(s, 2.0, 40.0).values == s.values);
  const auto alpha = restrict_band(s, 8.0, 12.0);
  CHECK(alpha.n_bins() == 2);
  CHECK(alpha.n_channels() == 2);
  CHECK(alpha.values.row(0) == s.values.row(3));
  CHECK(alpha.f_lo == 8.0);
  CHECK(restrict_band(s, 8.0, 10.0).n_bins() == 1);
  CHECK_THROWS_AS(restrict_band(s, 9.0, 12.0), ConfigError);
  CHECK_THROWS_AS(restrict_band(s, 8.0, 44.0), ConfigError);
  CHECK_THROWS_AS(restrict_band(s, 10.0, 10.0), ConfigError);
}

TEST_CASE("shift covariance") {
  const std::size_t step = 64;
  const auto base = white_noise(2, 256 * 6, 17);
  SignalMatrix shifted(2, base.cols() + static_cast<Eigen::Index>(step));
  shifted.leftCols(static_cast<Eigen::Index>(step)) = white_noise(2, step, 18);
  shifted.rightCols(base.cols()) = base;
  const Recording a(base, 256.0, {"a", "b"}), b(shifted, 256.0, {"a", "b"});
  const auto wa = slice_windows(a, WindowSpec{});
  const auto wb = slice_windows(b, WindowSpec{});
  REQUIRE(wb.size() == wa.size() + 1);
  const auto sa = compute_spectra(wa, 256.0, BinSpec{});
  const auto sb = compute_spectra(wb, 256.0, BinSpec{});
  for (std::size_t k = 0; k < sa.size(); ++k) CHECK(sa[k].values == sb[k + 1].values);
}

TEST_CASE("serial and parallel spectra are bitwise identical") {
  const Recording rec(white_noise(6, 256 * 20, 23), 256.0, default_channel_labels(6));
  const auto w = slice_windows(rec, WindowSpec{});
  const auto s = compute_spectra(w, 256.0, BinSpec{}, {}, {}, Exec::Serial);
  const auto p = compute_spectra(w, 256.0, BinSpec{}, {}, {}, Exec::Parallel);
  REQUIRE(s.size() == p.size());
  for (std::size_t k = 0; k < s.size(); ++k) {
    CHECK(s[k].values == p[k].values);
    CHECK(s[k].window_start == p[k].window_start);
    CHECK(s[k].values.allFinite());
  }
}

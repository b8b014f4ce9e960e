// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include "gaitbci/io.hpp"
#include "gaitbci/pipeline.hpp"

#include "oracles.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <bit>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>

namespace fs = std::filesystem;
using namespace gaitbci;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

// Collects failed sub-checks so the detail line says which one broke.
struct Checks {
  std::ostringstream failed;
  bool ok = true;
  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      failed << " [failed: " << what << "]";
    }
  }
};

std::string fmt(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(GAITBCI_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file()) files[e.path().filename().string()] = io::read_file(e.path());
  return files;
}

// Seed-1 pipeline shared by several criteria.
struct Shared {
  PipelineConfig cfg;
  PipelineResult result;
  Recording session_recording;
};

const Shared& shared() {
  static const Shared s = [] {
    PipelineConfig cfg;
    cfg.seed = 1;
    cfg.mc_trials = 0;
    auto result = run_synthetic_pipeline(cfg);
    SynthConfig synth = cfg.synth;
    synth.seed = stream_seed(cfg.seed, SeedStream::Session);
    return Shared{cfg, std::move(result), generate_synthetic(synth, protocol::session_cues())};
  }();
  return s;
}

// ---------------------------------------------------------------------------

Verdict end_to_end_training() {
  Checks c;
  SynthConfig synth;
  synth.seed = stream_seed(1, SeedStream::Training);
  const auto cues = protocol::training_cues();
  const auto t0 = Clock::now();
  const auto model = train(generate_synthetic(synth, cues), cues, TrainConfig{});
  const double runtime = seconds_since(t0);
  synth.erd_depth = 0.0;
  const auto flat = train(generate_synthetic(synth, cues), cues, TrainConfig{});
  c.expect(model.cv.mean >= 0.90, "CV accuracy >= 0.90");
  c.expect(flat.cv.mean >= 0.40 && flat.cv.mean <= 0.60, "erd_depth 0 accuracy in [0.40, 0.60]");
  c.expect(runtime < 60.0, "runtime < 60 s");
  return {c.ok, "CV " + fmt(model.cv.mean, 4) + " +/- " + fmt(model.cv.sd, 4) + " (erd_depth 0.6, 64 ch), " +
                    fmt(flat.cv.mean, 4) + " (erd_depth 0), train " + fmt(runtime, 1) + " s" + c.failed.str()};
}

Verdict closed_loop_session() {
  Checks c;
  std::vector<double> xcorr, lag, om, fa;
  std::ostringstream per_seed;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SessionReport r;
    if (seed == 1) {
      r = shared().result.report;
    } else {
      PipelineConfig cfg;
      cfg.seed = seed;
      cfg.mc_trials = 0;
      r = run_synthetic_pipeline(cfg).report;
    }
    xcorr.push_back(r.xcorr_max);
    lag.push_back(r.lag_at_max);
    om.push_back(static_cast<double>(r.omissions));
    fa.push_back(static_cast<double>(r.false_alarms));
    per_seed << (seed > 1 ? "; " : "") << fmt(r.xcorr_max) << "@" << fmt(r.lag_at_max, 2) << "s OM " << r.omissions
             << " FA " << r.false_alarms;
  }
  c.expect(median(xcorr) >= 0.75, "median xcorr >= 0.75");
  c.expect(median(lag) <= 15.0, "median lag <= 15 s");
  c.expect(median(om) == 0.0, "median omissions == 0");
  c.expect(median(fa) <= 2.0, "median false alarms <= 2");
  return {c.ok, "median xcorr " + fmt(median(xcorr)) + " at lag " + fmt(median(lag), 2) + " s, OM " +
                    fmt(median(om), 0) + ", FA " + fmt(median(fa), 0) + " over 5 seeds (" + per_seed.str() + ")" +
                    c.failed.str()};
}

Verdict significance_control() {
  Checks c;
  const auto& s = shared();
  MonteCarloConfig mc;
  mc.trials = 10000;
  mc.seed = stream_seed(s.cfg.seed, SeedStream::MonteCarlo);
  const auto t0 = Clock::now();
  const auto sig = session_significance(protocol::session_cues(), s.result.session, s.result.decoder, s.cfg.plant, mc);
  const double runtime = seconds_since(t0);
  const double null_max = *std::max_element(sig.result.null_max.begin(), sig.result.null_max.end());
  c.expect(sig.result.null_max.size() == 10000, "10000 trials");
  c.expect(sig.result.p_value < 1e-3, "p < 1e-3");
  c.expect(null_max < 0.6, "null max < 0.6");
  c.expect(runtime < 300.0, "runtime < 5 min");
  return {c.ok, "observed " + fmt(sig.result.observed) + ", p = " + io::format_double(sig.result.p_value) +
                    ", null max " + fmt(null_max) + " (AR alpha " + fmt(sig.null_model.alpha) + ", beta " +
                    fmt(sig.null_model.beta) + "), " + fmt(runtime, 1) + " s" + c.failed.str()};
}

Verdict latency_accounting() {
  Checks c;
  const auto& s = shared();
  const auto& trace = s.result.session.trace;
  const auto& log = s.result.session.plant_log;
  const auto& plant = s.cfg.plant;
  const auto& dec = s.result.decoder;

  // Decoder-only latency on a step posterior, through the calibrated thresholds.
  double worst_decoder = 0.0;
  for (std::size_t i0 = 0; i0 < 20; ++i0) {
    std::vector<double> p(i0 + 40, 0.0);
    std::fill(p.begin() + static_cast<std::ptrdiff_t>(i0), p.end(), 1.0);
    const auto t = run_posteriors(p, dec, 0.75);
    const auto it = std::find(t.states.begin(), t.states.end(), State::Walk);
    c.expect(it != t.states.end(), "step posterior reaches Walk");
    if (it == t.states.end()) break;
    worst_decoder = std::max(worst_decoder, t.times[static_cast<std::size_t>(it - t.states.begin())] - t.times[i0]);
  }
  c.expect(worst_decoder <= dec.avg_horizon + dec.window.step + 1e-12, "decoder latency <= avg_horizon + step");

  // Session: each Walk cue's walking onset = decision time + command latency + startup.
  std::vector<double> onset_lags, decision_delays;
  const auto cues = protocol::session_cues();
  double t = 0.0;
  for (const auto& e : cues.entries()) {
    if (e.state == State::Walk) {
      std::optional<double> decision;
      for (std::size_t i = 0; i < trace.size(); ++i)
        if (trace.times[i] >= t && trace.states[i] == State::Walk && (i == 0 || trace.states[i - 1] == State::Idle)) {
          decision = trace.times[i];
          break;
        }
      std::optional<double> walking;
      for (const auto& ev : log)
        if (ev.t >= t && ev.phase == Phase::Walking) {
          walking = ev.t;
          break;
        }
      c.expect(decision && walking, "walk onset found for every Walk cue");
      if (!decision || !walking) break;
      c.expect(std::abs(*walking - (*decision + plant.command_latency + plant.startup_latency)) < 1e-9,
               "onset = decision + command latency + startup");
      onset_lags.push_back(*walking - t);
      decision_delays.push_back(*decision - t);
    }
    t += e.duration;
  }
  const double window_fill = dec.window.length;
  for (double d : decision_delays)
    c.expect(d <= window_fill + dec.avg_horizon + dec.window.step + 1e-9,
             "decision delay <= window + avg_horizon + step");
  std::ostringstream detail;
  detail << "decoder-only step latency " << fmt(worst_decoder, 2) << " s (bound " << fmt(dec.avg_horizon + dec.window.step, 2)
         << " s); cue->walking onset";
  for (std::size_t i = 0; i < onset_lags.size(); ++i)
    detail << (i ? "," : "") << " " << fmt(onset_lags[i], 2) << " s = " << fmt(decision_delays[i], 2) << " decision + "
           << fmt(plant.command_latency, 2) << " command + " << fmt(plant.startup_latency, 2) << " startup";
  return {c.ok, detail.str() + c.failed.str()};
}

Verdict state_machine_oracle() {
  Checks c;
  Rng rng(2024);
  std::size_t steps = 0, mismatches = 0;
  for (int pair = 0; pair < 100; ++pair) {
    const double a = uniform01(rng), b = uniform01(rng);
    DecoderConfig cfg;
    cfg.t_idle = std::min(a, b);
    cfg.t_walk = std::max(a, b);
    std::vector<double> p(1000);
    double level = uniform01(rng);
    for (auto& v : p) {
      const auto kind = rng() % 8;
      level = std::clamp(level + 0.3 * (uniform01(rng) - 0.5), 0.0, 1.0);
      v = kind == 0 ? cfg.t_walk : kind == 1 ? cfg.t_idle : kind == 2 ? static_cast<double>(rng() % 2) : level;
    }
    HysteresisDecoder d(cfg);
    const auto ref = oracle::hysteresis(p, cfg.t_idle, cfg.t_walk, cfg.ring_size());
    for (std::size_t k = 0; k < p.size(); ++k) {
      const auto got = d.step(p[k]);
      mismatches += got.state != ref.states[k] || got.pbar != ref.pbar[k];
      ++steps;
    }
  }
  c.expect(mismatches == 0, "exact agreement");
  return {c.ok, std::to_string(steps) + " steps over 100 threshold pairs, " + std::to_string(mismatches) +
                    " mismatches" + c.failed.str()};
}

Verdict spectral_correctness() {
  Checks c;
  double worst_parseval = 0.0;
  PsdOptions rect;
  rect.taper = Taper::Rectangular;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const std::size_t n = 64 + seed * 7;
    Rng rng(seed);
    std::normal_distribution<double> dist(1.5, 3.0);
    SignalMatrix x(1, static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < x.cols(); ++i) x(0, i) = dist(rng);
    const auto s = band_power(x, 256.0, BinSpec{2.0, 0.0, 128.0}, rect);
    const double var = (x.row(0).array() - x.row(0).mean()).square().mean();
    worst_parseval = std::max(worst_parseval, std::abs(s.values.sum() - var) / var);
  }
  c.expect(worst_parseval <= 1e-6, "Parseval within 1e-6 relative");

  const std::size_t n = 192;
  SignalMatrix x(1, n);
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i)
    xs[i] = x(0, static_cast<Eigen::Index>(i)) = std::sin(2.0 * std::numbers::pi * 10.0 * static_cast<double>(i) / 256.0);
  const auto s = band_power(x, 256.0, BinSpec{2.0, 0.0, 128.0});
  const auto ref = oracle::dft_band_power(xs, 256.0, default_nfft(n), true, true, 0.0, 2.0, 64);
  double worst_bin = 0.0, total = 0.0;
  for (std::size_t b = 0; b < 64; ++b) {
    worst_bin = std::max(worst_bin, std::abs(s.values(static_cast<Eigen::Index>(b), 0) - ref[b]));
    total += s.values(static_cast<Eigen::Index>(b), 0);
  }
  const double localized = (s.values(4, 0) + s.values(5, 0)) / total;
  c.expect(worst_bin <= 1e-9, "sinusoid bins within 1e-9 of the DFT oracle");
  c.expect(localized >= 0.9, "10 Hz power localized to the 8-12 Hz bins");
  return {c.ok, "Parseval worst relative error " + io::format_double(worst_parseval) +
                    " (50 signals); 10 Hz sinusoid worst bin error " + io::format_double(worst_bin) + ", " +
                    fmt(100.0 * localized, 1) + "% of power in 8-12 Hz" + c.failed.str()};
}

Verdict classifier_properties() {
  Checks c;
  Rng rng(31);
  double worst_norm = 0.0, worst_direct = 0.0;
  std::size_t compared = 0;
  for (int i = 0; i < 20000; ++i) {
    BayesModel m;
    for (auto& b : m.branches) {
      b.idle = {10.0 * uniform01(rng) - 5.0, 0.1 + 4.0 * uniform01(rng)};
      b.walk = {10.0 * uniform01(rng) - 5.0, 0.1 + 4.0 * uniform01(rng)};
    }
    m.prior_walk = 0.05 + 0.9 * uniform01(rng);
    m.prior_idle = 1.0 - m.prior_walk;
    const State branch = i % 2 ? State::Walk : State::Idle;
    const double f = 20.0 * uniform01(rng) - 10.0;
    const double pw = posterior(f, branch, m);
    // P(Idle | f) from the class-swapped model.
    BayesModel swapped = m;
    for (auto& b : swapped.branches) std::swap(b.idle, b.walk);
    std::swap(swapped.prior_idle, swapped.prior_walk);
    const double pi = posterior(f, branch, swapped);
    worst_norm = std::max(worst_norm, std::abs(pw + pi - 1.0));

    const auto& b = m.branches[index_of(branch)];
    const double gi = oracle::normal_pdf(f, b.idle.mean, b.idle.variance);
    const double gw = oracle::normal_pdf(f, b.walk.mean, b.walk.variance);
    const double denom = m.prior_idle * gi + m.prior_walk * gw;
    if (!(denom > 1e-300)) continue;
    worst_direct = std::max(worst_direct, std::abs(pw - m.prior_walk * gw / denom));
    ++compared;
  }
  c.expect(worst_norm <= 1e-12, "posterior normalization within 1e-12");
  c.expect(worst_direct <= 1e-12, "log-domain vs direct Bayes within 1e-12");

  BayesModel sym;
  for (auto& b : sym.branches) {
    b.idle = {-1.0, 1.0};
    b.walk = {1.0, 1.0};
  }
  const bool tie_walk = classify(0.0, State::Idle, sym) == State::Walk && classify(0.0, State::Walk, sym) == State::Walk;
  c.expect(tie_walk, "tie goes to Walk");
  return {c.ok, "normalization error " + io::format_double(worst_norm) + ", direct Bayes error " +
                    io::format_double(worst_direct) + " over " + std::to_string(compared) + " cases, tie -> " +
                    (tie_walk ? "Walk" : "Idle") + c.failed.str()};
}

Eigen::MatrixXd gaussian_cloud(std::size_t n, const Eigen::VectorXd& mean, const Eigen::MatrixXd& q,
                               const Eigen::VectorXd& sd, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), mean.size());
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    Eigen::VectorXd z(mean.size());
    for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = normal(rng) * sd(j);
    out.row(i) = (mean + q * z).transpose();
  }
  return out;
}

Eigen::MatrixXd random_rotation(Eigen::Index p, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd a(p, p);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  return qr.householderQ() * Eigen::MatrixXd::Identity(p, p);
}

TrialSet make_trials(const Eigen::MatrixXd& idle, const Eigen::MatrixXd& walk) {
  TrialSet t;
  t.x.resize(idle.rows() + walk.rows(), idle.cols());
  t.x << idle, walk;
  t.labels.assign(static_cast<std::size_t>(idle.rows()), State::Idle);
  t.labels.insert(t.labels.end(), static_cast<std::size_t>(walk.rows()), State::Walk);
  t.n_bins = static_cast<std::size_t>(idle.cols());
  t.n_channels = 1;
  return t;
}

Verdict feature_extraction() {
  Checks c;
  double worst_ortho = 0.0, worst_unit = 0.0;
  auto audit = [&](const FeatureExtractor& fx) {
    for (const auto& s : fx.subspaces)
      worst_ortho = std::max(worst_ortho, (s.basis.transpose() * s.basis -
                                           Eigen::MatrixXd::Identity(s.basis.cols(), s.basis.cols())).cwiseAbs().maxCoeff());
    for (const auto& d : fx.discriminants) worst_unit = std::max(worst_unit, std::abs(d.w.norm() - 1.0));
  };
  audit(shared().result.model.feature_extractor);

  const Eigen::Index p = 6;
  const Eigen::VectorXd mi = Eigen::VectorXd::Zero(p), mw = Eigen::VectorXd::Constant(p, 4.0);
  const Eigen::VectorXd sd_i = (Eigen::VectorXd(p) << 3, 2, 1, 0.5, 0.3, 0.2).finished();
  const Eigen::VectorXd sd_w = (Eigen::VectorXd(p) << 2.5, 2.5, 0.4, 0.4, 0.4, 0.1).finished();
  const auto qi = random_rotation(p, 21), qw = random_rotation(p, 22);
  FeatureOptions opts;
  opts.variance_fraction = 0.8;
  const auto fx = fit_feature_extractor(
      make_trials(gaussian_cloud(300, mi, qi, sd_i, 1), gaussian_cloud(300, mw, qw, sd_w, 2)), opts);
  audit(fx);
  c.expect(worst_ortho <= 1e-10, "basis orthonormality within 1e-10");
  c.expect(worst_unit <= 1e-10, "unit discriminants within 1e-10");

  // Held-out branch selection against a dense-covariance likelihood.
  const auto held_out = make_trials(gaussian_cloud(500, mi, qi, sd_i, 3), gaussian_cloud(500, mw, qw, sd_w, 4));
  auto oracle_ll = [&](const ClassSubspace& s, const Eigen::VectorXd& x) {
    const Eigen::MatrixXd proj = s.basis * s.basis.transpose();
    const Eigen::MatrixXd cov = s.basis * s.eigenvalues.asDiagonal() * s.basis.transpose() +
                                s.residual_variance * (Eigen::MatrixXd::Identity(p, p) - proj);
    return oracle::mvn_logpdf(x, s.mean, cov);
  };
  std::size_t agree = 0;
  for (Eigen::Index i = 0; i < held_out.x.rows(); ++i) {
    const Eigen::VectorXd x = held_out.x.row(i).transpose();
    const State expected = oracle_ll(fx.subspaces[0], x) > oracle_ll(fx.subspaces[1], x) ? State::Idle : State::Walk;
    agree += select_branch(fx, x) == expected;
  }
  c.expect(agree == held_out.size(), "branch selection matches the likelihood oracle on every held-out trial");

  Rng rng(77);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst_cos = 1.0;
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd a(3, 3);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = normal(rng);
    const Eigen::MatrixXd s = a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(3, 3);
    TwoClassMoments m;
    m.mean_idle = Eigen::Vector3d(normal(rng), normal(rng), normal(rng));
    m.mean_walk = Eigen::Vector3d(normal(rng), normal(rng), normal(rng));
    m.cov_idle = m.cov_walk = s;
    m.n_idle = m.n_walk = 200;
    DiscriminantOptions lda_opts, aida_opts;
    lda_opts.criterion = Criterion::LDA;
    worst_cos = std::min(worst_cos, std::abs(fit_discriminant(m, lda_opts).w.dot(fit_discriminant(m, aida_opts).w)));
  }
  c.expect(worst_cos > 0.999, "equal-covariance AIDA/LDA |cos| > 0.999");
  return {c.ok, "orthonormality error " + io::format_double(worst_ortho) + ", unit-norm error " +
                    io::format_double(worst_unit) + ", AIDA/LDA min |cos| " + fmt(worst_cos, 6) +
                    ", branch oracle agreement " + std::to_string(agree) + "/" + std::to_string(held_out.size()) +
                    c.failed.str()};
}

Verdict null_model_fit() {
  Checks c;
  // Algebra, both from moments and from a fitted sequence.
  bool exact = true;
  Rng rng(9);
  for (int i = 0; i < 1000; ++i) {
    const double mu = 0.05 + 0.9 * uniform01(rng), rho = 1.98 * uniform01(rng) - 0.99;
    const auto m = null_from_moments(mu, rho);
    exact = exact && m.alpha == rho && m.beta == 2.0 * mu * (1.0 - rho);
  }
  const auto fitted = fit_null(shared().result.session.trace.posterior);
  exact = exact && fitted.alpha == fitted.rho && fitted.beta == 2.0 * fitted.mu * (1.0 - fitted.alpha);
  c.expect(exact, "alpha = rho and beta = 2 mu (1 - alpha) exactly");

  // Moment recovery on the (mu, alpha) grid where the clamp is negligible.
  std::size_t tested = 0, excluded = 0;
  double worst_mu = 0.0, worst_rho = 0.0;
  for (int im = 0; im <= 6; ++im) {
    const double mu = 0.2 + 0.1 * im;
    for (int ia = -9; ia <= 9; ++ia) {
      const double alpha = 0.1 * ia;
      const auto m = null_from_moments(mu, alpha);
      Rng r(derive_seed(static_cast<std::uint64_t>(im), static_cast<std::uint64_t>(ia + 9)));
      std::size_t clipped = 0;
      double x = uniform01(r);
      std::vector<double> y(1000000);
      for (auto& v : y) {
        clipped += x < 0.0 || x > 1.0;
        v = std::clamp(x, 0.0, 1.0);
        x = m.alpha * x + m.beta * uniform01(r);
      }
      if (static_cast<double>(clipped) > 0.005 * static_cast<double>(y.size())) {
        ++excluded;
        continue;
      }
      ++tested;
      const auto fit = fit_null(y);
      worst_mu = std::max(worst_mu, std::abs(fit.mu - mu));
      worst_rho = std::max(worst_rho, std::abs(fit.rho - alpha));
    }
  }
  c.expect(worst_mu <= 0.02, "mu recovered within 0.02");
  c.expect(worst_rho <= 0.05, "rho recovered within 0.05");
  c.expect(tested >= 40, "at least 40 grid cells tested");
  return {c.ok, std::string("algebra ") + (exact ? "exact" : "inexact") + "; " + std::to_string(tested) +
                    " (mu, alpha) cells over mu in [0.2, 0.8] (" + std::to_string(excluded) +
                    " excluded for >0.5% clipping), worst |mu err| " + fmt(worst_mu, 4) + ", worst |rho err| " +
                    fmt(worst_rho, 4) + c.failed.str()};
}

Verdict determinism() {
  Checks c;
  const fs::path root = fs::temp_directory_path() / "gaitbci_acceptance";
  fs::remove_all(root);
  const std::string common = " --seed 7 -n 200 --out ";
  const int a = run_cli("pipeline" + common + (root / "a").string());
  const int b = run_cli("pipeline" + common + (root / "b").string());
  c.expect(a == 0 && b == 0, "CLI pipeline runs");
  std::size_t n_files = 0;
  if (a == 0 && b == 0) {
    const auto fa = snapshot(root / "a"), fb = snapshot(root / "b");
    n_files = fa.size();
    c.expect(fa == fb, "byte-identical CLI outputs");
    c.expect(n_files >= 14, "every stage wrote its files");
  }
  fs::remove_all(root);

  // Streaming in uneven chunks versus whole-recording replay.
  const auto& s = shared();
  const auto& rec = s.session_recording;
  const auto replay = run_stream(rec, s.result.model, s.result.decoder);
  const auto serial = run_stream(rec, s.result.model, s.result.decoder, Exec::Serial);
  OnlineDecoder online(s.result.model, s.result.decoder);
  Rng rng(11);
  for (std::size_t at = 0; at < rec.n_samples();) {
    const std::size_t len = std::min<std::size_t>(1 + rng() % 700, rec.n_samples() - at);
    online.push(rec.samples().middleCols(static_cast<Eigen::Index>(at), static_cast<Eigen::Index>(len)));
    at += len;
  }
  const auto& streamed = online.trace();
  auto bits_equal = [](const std::vector<double>& x, const std::vector<double>& y) {
    return x.size() == y.size() && std::equal(x.begin(), x.end(), y.begin(), [](double u, double v) {
             return std::bit_cast<std::uint64_t>(u) == std::bit_cast<std::uint64_t>(v);
           });
  };
  auto same = [&](const StateTrace& x, const StateTrace& y) {
    return x.states == y.states && bits_equal(x.times, y.times) && bits_equal(x.pbar, y.pbar) &&
           bits_equal(x.posterior, y.posterior);
  };
  c.expect(same(streamed, replay), "streamed trace == replayed trace");
  c.expect(same(serial, replay), "serial replay == parallel replay");
  c.expect(s.result.session.trace.size() == replay.size() && same(s.result.session.trace, replay),
           "pipeline session trace == replay");
  return {c.ok, std::to_string(n_files) + " CLI output files byte-identical across runs; streamed (random chunks), "
                                          "serial and parallel replays identical over " +
                    std::to_string(replay.size()) + " decisions" + c.failed.str()};
}

Verdict realtime_budget() {
  Checks c;
  const auto& s = shared();
  const auto& rec = s.session_recording;
  const std::size_t step = s.result.decoder.window.step_samples(rec.fs());
  OnlineDecoder online(s.result.model, s.result.decoder);
  std::vector<double> per_step;
  for (std::size_t at = 0; at + step <= rec.n_samples(); at += step) {
    const auto t0 = Clock::now();
    const auto out = online.push(rec.samples().middleCols(static_cast<Eigen::Index>(at), static_cast<Eigen::Index>(step)));
    const double ms = 1000.0 * seconds_since(t0);
    if (!out.empty()) per_step.push_back(ms / static_cast<double>(out.size()));
  }
  const double worst = *std::max_element(per_step.begin(), per_step.end());
  c.expect(worst < 50.0, "every step < 50 ms");
  return {c.ok, "per-step online path (" + std::to_string(s.result.model.retained_channels.size()) +
                    " channels) median " + fmt(median(per_step), 3) + " ms, max " + fmt(worst, 3) + " ms over " +
                    std::to_string(per_step.size()) + " steps (budget 50 ms)" + c.failed.str()};
}

} // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"end-to-end training", end_to_end_training},
      {"closed-loop session", closed_loop_session},
      {"significance control", significance_control},
      {"latency accounting", latency_accounting},
      {"state-machine oracle", state_machine_oracle},
      {"spectral correctness", spectral_correctness},
      {"classifier", classifier_properties},
      {"feature extraction", feature_extraction},
      {"null-model fit", null_model_fit},
      {"determinism", determinism},
      {"real-time budget", realtime_budget},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    const auto t0 = Clock::now();
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += !v.pass;
    std::cout << "AC" << (i + 1) << ' ' << (v.pass ? "PASS" : "FAIL") << "  " << criteria[i].first << ": " << v.detail
              << "  [" << fmt(seconds_since(t0), 1) << " s]" << std::endl;
  }
  std::cout << (failures ? "acceptance: " + std::to_string(failures) + " criteria failed" : std::string("acceptance: all criteria passed"))
            << std::endl;
  return failures ? 1 : 0;
}

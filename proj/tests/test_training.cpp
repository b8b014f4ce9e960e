#include "gaitbci/random.hpp"
#include "gaitbci/training.hpp"

#include <doctest.h>

#include <algorithm>
#include <cstring>
#include <map>
#include <set>

using namespace gaitbci;

namespace {

const CueSchedule& ten_minutes() {
  static const auto cues = CueSchedule::alternating(20, 30.0);
  return cues;
}

Recording synthetic(double depth, std::uint64_t seed, std::size_t channels = 13) {
  SynthConfig c;
  c.n_channels = channels;
  c.erd_depth = depth;
  c.seed = seed;
  return generate_synthetic(c, ten_minutes());
}

std::vector<std::size_t> all_channels(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

// Shared 13-channel erd 0.6 table; the band-search tests reuse it.
const SpectralTable& erd_table() {
  static const SpectralTable table = [] {
    TrainConfig cfg;
    cfg.search_lo = 4.0;
    cfg.search_hi = 20.0;
    return build_spectral_table(synthetic(0.6, 3), ten_minutes(), all_channels(13), cfg);
  }();
  return table;
}

bool same_bits(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

bool same_fit(const FoldFit& a, const FoldFit& b) {
  for (std::size_t k = 0; k < kStateCount; ++k) {
    const auto& sa = a.extractor.subspaces[k];
    const auto& sb = b.extractor.subspaces[k];
    if (!same_bits(sa.mean, sb.mean) || !same_bits(sa.basis, sb.basis) || !same_bits(sa.eigenvalues, sb.eigenvalues))
      return false;
    if (sa.residual_variance != sb.residual_variance || sa.gauss_1d.mean != sb.gauss_1d.mean ||
        sa.gauss_1d.variance != sb.gauss_1d.variance)
      return false;
    if (!same_bits(a.extractor.discriminants[k].w, b.extractor.discriminants[k].w)) return false;
    const auto& ba = a.bayes.branches[k];
    const auto& bb = b.bayes.branches[k];
    if (ba.idle.mean != bb.idle.mean || ba.idle.variance != bb.idle.variance || ba.walk.mean != bb.walk.mean ||
        ba.walk.variance != bb.walk.variance)
      return false;
  }
  return a.bayes.prior_walk == b.bayes.prior_walk;
}

} // namespace

TEST_CASE("channel rejection") {
  SynthConfig c;
  c.seed = 4;
  const auto cues = CueSchedule::alternating(2, 15.0);
  const auto rec = generate_synthetic(c, cues);

  SUBCASE("homogeneous channels are all retained") {
    CHECK(reject_channels(rec).size() == 64);
  }

  SUBCASE("a channel scaled by 100 is excluded") {
    SignalMatrix x = rec.samples();
    x.row(17) *= 100.0;
    const Recording bad(x, rec.fs(), rec.channel_labels());
    std::vector<ChannelScore> scores;
    const auto kept = reject_channels(bad, {}, &scores);
    CHECK(kept.size() == 63);
    CHECK(std::find(kept.begin(), kept.end(), 17u) == kept.end());
    CHECK_FALSE(scores[17].retained);
    CHECK(scores[17].z_log_variance > 4.0);
  }

  SUBCASE("decisions follow the channel under permutation") {
    SignalMatrix x = rec.samples();
    x.row(3) *= 50.0;
    x.row(40) *= 0.001;
    // Heavy-tailed spikes on one channel.
    for (Eigen::Index i = 0; i < x.cols(); i += 97) x(22, i) += 400.0;
    const Recording bad(x, rec.fs(), rec.channel_labels());
    const auto kept = reject_channels(bad);
    std::set<std::string> kept_labels;
    for (auto k : kept) kept_labels.insert(bad.channel_labels()[k]);
    CHECK(kept_labels.count("EEG3") == 0);
    CHECK(kept_labels.count("EEG40") == 0);
    CHECK(kept_labels.count("EEG22") == 0);

    Rng rng(12);
    for (int t = 0; t < 10; ++t) {
      auto order = all_channels(64);
      std::shuffle(order.begin(), order.end(), rng);
      const auto permuted = bad.with_channel_order(order);
      std::set<std::string> labels;
      for (auto k : reject_channels(permuted)) labels.insert(permuted.channel_labels()[k]);
      CHECK(labels == kept_labels);
    }
  }

  SUBCASE("errors and the keep-one rule") {
    const Recording same(SignalMatrix::Ones(3, 100), 256.0, default_channel_labels(3));
    CHECK_THROWS_AS(reject_channels(same), DegenerateDataError);
    SignalMatrix z = SignalMatrix::Zero(3, 100);
    z(0, 5) = 1.0;
    z(1, 5) = 1.0;
    z.row(1) *= 1e9;
    z(2, 7) = 1.0;
    CHECK_NOTHROW(reject_channels(Recording(z, 256.0, default_channel_labels(3))));
    const Recording one(SignalMatrix::Ones(1, 100), 256.0, default_channel_labels(1));
    CHECK_THROWS_AS(reject_channels(one), InsufficientDataError);
    RejectionConfig tight;
    tight.z_var = 1e-9;
    tight.z_kurt = 1e-9;
    CHECK(reject_channels(rec, tight).size() >= 1);
  }
}

TEST_CASE("stratified folds: class ratio within one trial of the global ratio") {
  Rng rng(2);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const std::size_t n = 40 + rng() % 400;
    std::vector<State> labels(n);
    for (auto& l : labels) l = uniform01(rng) < 0.4 ? State::Walk : State::Idle;
    if (std::count(labels.begin(), labels.end(), State::Walk) < 10 ||
        std::count(labels.begin(), labels.end(), State::Idle) < 10)
      continue;
    const auto folds = stratified_folds(labels, 10, seed);
    const double n_walk = static_cast<double>(std::count(labels.begin(), labels.end(), State::Walk));
    const double ratio = n_walk / static_cast<double>(n);
    for (std::size_t f = 0; f < 10; ++f) {
      double fold_n = 0.0, fold_walk = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        if (folds[i] == f) {
          fold_n += 1.0;
          fold_walk += labels[i] == State::Walk;
        }
      CHECK(std::abs(fold_walk - ratio * fold_n) <= 1.0);
      CHECK(std::abs(fold_n - static_cast<double>(n) / 10.0) <= 1.0);
    }
  }
  std::vector<State> few(15, State::Idle);
  few[0] = State::Walk;
  CHECK_THROWS_AS(stratified_folds(few, 10, 1), InsufficientDataError);
  CHECK_THROWS_AS(stratified_folds(few, 1, 1), ConfigError);
}

TEST_CASE("cross-validation sanity") {
  TrainConfig cfg;
  const auto& table = erd_table();
  const auto trials = table.trials(8.0, 12.0);
  const auto folds = stratified_folds(trials.labels, 10, 1);

  SUBCASE("shuffled labels give chance accuracy") {
    TrialSet shuffled = trials;
    Rng rng(44);
    std::shuffle(shuffled.labels.begin(), shuffled.labels.end(), rng);
    const auto sf = stratified_folds(shuffled.labels, 10, 1);
    const auto r = cross_validate(shuffled, sf, cfg);
    MESSAGE("shuffled-label CV accuracy " << r.mean);
    CHECK(r.mean >= 0.4);
    CHECK(r.mean <= 0.6);
  }

  SUBCASE("serial and parallel agree exactly") {
    const auto a = cross_validate(trials, folds, cfg, Exec::Serial);
    const auto b = cross_validate(trials, folds, cfg, Exec::Parallel);
    CHECK(a.fold_accuracy == b.fold_accuracy);
    CHECK(a.mean == b.mean);
    CHECK(a.sd == b.sd);
    CHECK(a.fold_accuracy.size() == 10);
  }

  SUBCASE("no leakage: corrupting the held-out fold leaves the fit unchanged") {
    Rng rng(5);
    for (std::size_t fold : {0u, 4u, 9u}) {
      const auto clean = fit_fold(trials, folds, fold, cfg);
      TrialSet corrupted = trials;
      for (std::size_t i = 0; i < trials.size(); ++i)
        if (folds[i] == fold) {
          for (Eigen::Index j = 0; j < corrupted.x.cols(); ++j) corrupted.x(static_cast<Eigen::Index>(i), j) = 1e6 * uniform01(rng);
          corrupted.labels[i] = uniform01(rng) < 0.5 ? State::Idle : State::Walk;
        }
      CHECK(same_fit(clean, fit_fold(corrupted, folds, fold, cfg)));
      // Sanity: corrupting a training fold does change the fit.
      TrialSet other = trials;
      const std::size_t victim = (fold + 1) % 10;
      for (std::size_t i = 0; i < trials.size(); ++i)
        if (folds[i] == victim) other.x.row(static_cast<Eigen::Index>(i)) *= 3.0;
      CHECK_FALSE(same_fit(clean, fit_fold(other, folds, fold, cfg)));
    }
  }
}

TEST_CASE("perfectly separable toy trials") {
  TrialSet t;
  const std::size_t n = 100;
  t.x.resize(static_cast<Eigen::Index>(n), 2);
  Rng rng(3);
  for (std::size_t i = 0; i < n; ++i) {
    const bool walk = i % 2 == 1;
    t.labels.push_back(walk ? State::Walk : State::Idle);
    t.x(static_cast<Eigen::Index>(i), 0) = (walk ? 10.0 : -10.0) + uniform01(rng);
    t.x(static_cast<Eigen::Index>(i), 1) = uniform01(rng);
  }
  t.n_bins = 2;
  t.n_channels = 1;
  const auto r = cross_validate(t, stratified_folds(t.labels, 10, 7), TrainConfig{});
  CHECK(r.mean == 1.0);
  CHECK(r.sd == 0.0);
}

TEST_CASE("band search follows the greedy rule over an exhaustive accuracy table") {
  const auto& table = erd_table();
  TrainConfig cfg;
  cfg.search_lo = 4.0;
  cfg.search_hi = 20.0;
  const auto folds = stratified_folds(table.labels, cfg.folds, cfg.seed);

  // Exhaustive table of every band on the grid [4, 20).
  std::map<std::pair<int, int>, double> acc;
  for (int lo = 0; lo < 8; ++lo)
    for (int hi = lo + 1; hi <= 8; ++hi)
      acc[{lo, hi}] = cross_validate(table.trials(4.0 + 2.0 * lo, 4.0 + 2.0 * hi), folds, cfg).mean;

  // Independent greedy walk over the table.
  int lo = 1, hi = 5; // [6, 14)
  std::vector<std::pair<int, int>> path{{lo, hi}};
  for (;;) {
    std::pair<int, int> best{lo, hi};
    double best_acc = -1.0;
    for (auto [l, h] : {std::pair{lo - 1, hi}, std::pair{lo, hi + 1}, std::pair{lo + 1, hi}, std::pair{lo, hi - 1}}) {
      if (l < 0 || h > 8 || h <= l) continue;
      if (acc[{l, h}] > best_acc) {
        best_acc = acc[{l, h}];
        best = {l, h};
      }
    }
    if (!(best_acc - acc[{lo, hi}] > cfg.epsilon)) break;
    std::tie(lo, hi) = best;
    path.push_back(best);
  }

  const auto r = search_band(table, folds, cfg);
  CHECK(r.band.first == 4.0 + 2.0 * lo);
  CHECK(r.band.second == 4.0 + 2.0 * hi);
  REQUIRE(r.path.size() == path.size());
  for (std::size_t i = 0; i < path.size(); ++i) {
    CHECK(r.path[i].band.first == 4.0 + 2.0 * path[i].first);
    CHECK(r.path[i].accuracy == acc[path[i]]);
  }
  CHECK(r.cv.mean >= r.path.front().accuracy);
  for (const auto& e : r.evaluated) {
    const int l = static_cast<int>(std::lround((e.band.first - 4.0) / 2.0));
    const int h = static_cast<int>(std::lround((e.band.second - 4.0) / 2.0));
    CHECK(e.accuracy == acc[{l, h}]);
  }
  MESSAGE("selected band [" << r.band.first << ", " << r.band.second << ") accuracy " << r.cv.mean);
  // The rhythm sits in [8, 12).
  CHECK(r.band.first <= 8.0);
  CHECK(r.band.second >= 12.0);

  CHECK(search_band(table, folds, cfg, Exec::Serial).cv.fold_accuracy == r.cv.fold_accuracy);

  TrainConfig bad = cfg;
  bad.seed_band = {5.0, 13.0};
  CHECK_THROWS_AS(search_band(table, folds, bad), ConfigError);
  bad.seed_band = {16.0, 24.0};
  CHECK_THROWS_AS(search_band(table, folds, bad), ConfigError);
}

TEST_CASE("flat data returns the seed band") {
  // Each spectrum appears once per class in the same fold, so every band
  // scores exactly one half.
  Rng rng(6);
  SpectralTable table;
  std::vector<std::size_t> folds;
  const std::size_t n = 100;
  std::vector<SpectralSample> idle;
  for (std::size_t i = 0; i < n; ++i) {
    SpectralSample s;
    s.f_lo = 2.0;
    s.bin_width = 2.0;
    s.values = Eigen::MatrixXd::NullaryExpr(19, 3, [&] { return uniform01(rng); });
    idle.push_back(s);
  }
  for (State cls : {State::Idle, State::Walk})
    for (std::size_t i = 0; i < n; ++i) {
      table.samples.push_back(idle[i]);
      table.labels.push_back(cls);
      folds.push_back(i % 10);
    }
  const auto r = search_band(table, folds, TrainConfig{});
  CHECK(r.band == std::make_pair(6.0, 14.0));
  CHECK(r.path.size() == 1);
  CHECK(r.cv.mean == 0.5);
}

TEST_CASE("train: accuracy, determinism, round trip") {
  TrainConfig cfg;
  const auto rec = synthetic(0.6, 8);
  TrainReport report;
  const auto model = train(rec, ten_minutes(), cfg, &report);
  MESSAGE("13-channel CV " << model.cv.mean << " band [" << model.band.first << ", " << model.band.second << ")");
  CHECK(model.cv.mean >= 0.9);
  CHECK(model.band.first <= 10.0);
  CHECK(model.band.second >= 10.0);
  CHECK(model.retained_channels.size() == 13);
  CHECK_NOTHROW(model.validate());

  const auto text = serialize_model(model);
  CHECK(serialize_model(train(rec, ten_minutes(), cfg)) == text);
  CHECK(serialize_model(train(rec, ten_minutes(), cfg, nullptr, Exec::Serial)) == text);

  const auto back = deserialize_model(text);
  CHECK(serialize_model(back) == text);
  CHECK(back.training_fingerprint == model.training_fingerprint);
  Rng rng(10);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto& fx = model.feature_extractor;
  for (int i = 0; i < 10000; ++i) {
    SpectralSample s;
    s.f_lo = model.band.first;
    s.bin_width = model.bin_width;
    // Around a class mean so both branches and both decisions are exercised.
    const auto& mean = fx.subspaces[static_cast<std::size_t>(i % 2)].mean;
    s.values = Eigen::Map<const Eigen::MatrixXd>(mean.data(), static_cast<Eigen::Index>(fx.n_bins),
                                                 static_cast<Eigen::Index>(fx.n_channels));
    for (Eigen::Index k = 0; k < s.values.size(); ++k) s.values.data()[k] *= std::exp(0.5 * normal(rng));
    const auto fa = model.feature(s), fb = back.feature(s);
    REQUIRE(std::memcmp(&fa.value, &fb.value, sizeof(double)) == 0);
    REQUIRE(fa.branch == fb.branch);
    const double pa = model.posterior(s), pb = back.posterior(s);
    REQUIRE(std::memcmp(&pa, &pb, sizeof(double)) == 0);
    REQUIRE(classify(fa, model.bayes) == classify(fb, back.bayes));
  }

  SUBCASE("different seed changes the fingerprint") {
    TrainConfig other = cfg;
    other.seed = 2;
    CHECK(train(rec, ten_minutes(), other).training_fingerprint != model.training_fingerprint);
  }
}

TEST_CASE("train at chance when there is no rhythm modulation") {
  const auto model = train(synthetic(0.0, 9), ten_minutes(), TrainConfig{});
  MESSAGE("erd 0 CV " << model.cv.mean);
  CHECK(model.cv.mean >= 0.4);
  CHECK(model.cv.mean <= 0.6);
}

TEST_CASE("model file errors") {
  PredictionModel m;
  m.channel_labels = {"a", "b"};
  m.retained_channels = {0, 1};
  m.band = {8.0, 12.0};
  m.feature_extractor.n_bins = 2;
  m.feature_extractor.n_channels = 2;
  for (State b : {State::Idle, State::Walk}) {
    auto& s = m.feature_extractor.subspaces[index_of(b)];
    s.cls = b;
    s.mean = Eigen::VectorXd::Zero(4);
    s.basis = Eigen::MatrixXd::Identity(4, 1);
    s.eigenvalues = Eigen::VectorXd::Ones(1);
    s.residual_variance = 1.0;
    s.gauss_1d = {0.0, 1.0};
    m.feature_extractor.discriminants[index_of(b)] = {b, Eigen::VectorXd::Ones(1)};
  }
  m.cv.mean = 0.5;
  const auto text = serialize_model(m);
  CHECK_NOTHROW(deserialize_model(text));

  auto replaced = [&](const std::string& from, const std::string& to) {
    std::string t = text;
    const auto pos = t.find(from);
    REQUIRE(pos != std::string::npos);
    return t.replace(pos, from.size(), to);
  };
  CHECK_THROWS_AS(deserialize_model(replaced("\"version\": 1", "\"version\": 2")), FormatError);
  CHECK_THROWS_AS(deserialize_model(replaced("gaitbci.model", "something.else")), FormatError);
  CHECK_THROWS_AS(deserialize_model(text.substr(0, text.size() / 2)), FormatError);
  CHECK_THROWS_AS(deserialize_model(replaced("\"retained_channels\": [", "\"retained_channels\": [7,")), FormatError);
}

TEST_CASE("train config parsing") {
  TrainConfig cfg;
  cfg.folds = 5;
  cfg.seed_band = {8.0, 12.0};
  cfg.criterion = Criterion::LDA;
  const auto back = parse_train_config(train_config_json(cfg));
  CHECK(back.folds == 5);
  CHECK(back.seed_band == cfg.seed_band);
  CHECK(back.criterion == Criterion::LDA);
  CHECK(train_config_json(back) == train_config_json(cfg));

  try {
    parse_train_config(R"({"folds": 10, "kappaa": 0.9})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("kappaa") != std::string::npos);
  }
  try {
    parse_train_config(R"({"folds": "ten"})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("folds") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_train_config("{"), ConfigError);
  TrainConfig one_fold;
  one_fold.folds = 1;
  CHECK_THROWS_AS(one_fold.validate(256.0), ConfigError);
}

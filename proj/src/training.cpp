#include "gaitbci/training.hpp"

#include "gaitbci/io.hpp"
#include "gaitbci/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <exception>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

namespace gaitbci {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Channel rejection

namespace {

double median_of(std::vector<double> v) {
  const std::size_t n = v.size();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  double m = *mid;
  if (n % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), mid));
  return m;
}

} // namespace

std::vector<std::size_t> reject_channels(const Recording& rec, const RejectionConfig& cfg,
                                         std::vector<ChannelScore>* scores_out) {
  const std::size_t n_ch = rec.n_channels();
  if (n_ch < 2) throw InsufficientDataError("channel rejection needs at least 2 channels");
  if (!(cfg.z_var > 0.0) || !(cfg.z_kurt > 0.0)) throw ConfigError("rejection thresholds must be positive");
  const auto& s = rec.samples();

  bool all_identical = true;
  for (std::size_t c = 1; c < n_ch && all_identical; ++c)
    all_identical = s.row(static_cast<Eigen::Index>(c)) == s.row(0);
  if (all_identical) throw DegenerateDataError("all channels are identical");

  std::vector<ChannelScore> scores(n_ch);
  std::vector<double> lv, ku;
  const auto n = static_cast<double>(rec.n_samples());
  for (std::size_t c = 0; c < n_ch; ++c) {
    const auto row = s.row(static_cast<Eigen::Index>(c)).array();
    const double mean = row.mean();
    const auto d = row - mean;
    const double m2 = d.square().sum() / n;
    const double m4 = d.square().square().sum() / n;
    auto& sc = scores[c];
    if (m2 > 0.0) {
      sc.log_variance = std::log(m2);
      sc.kurtosis = m4 / (m2 * m2);
      lv.push_back(sc.log_variance);
      ku.push_back(sc.kurtosis);
    } else {
      sc.log_variance = -std::numeric_limits<double>::infinity();
      sc.retained = false;
    }
  }
  if (lv.empty()) throw DegenerateDataError("all channels have zero variance");

  auto robust = [](const std::vector<double>& v, double floor) {
    const double med = median_of(v);
    std::vector<double> dev(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) dev[i] = std::abs(v[i] - med);
    return std::make_pair(med, std::max(1.4826 * median_of(dev), floor));
  };
  const auto [lv_med, lv_scale] = robust(lv, cfg.logvar_scale_floor);
  const auto [ku_med, ku_scale] = robust(ku, cfg.kurt_scale_floor);

  std::vector<std::size_t> kept;
  for (std::size_t c = 0; c < n_ch; ++c) {
    auto& sc = scores[c];
    if (!std::isfinite(sc.log_variance)) continue;
    sc.z_log_variance = (sc.log_variance - lv_med) / lv_scale;
    sc.z_kurtosis = (sc.kurtosis - ku_med) / ku_scale;
    sc.retained = std::abs(sc.z_log_variance) <= cfg.z_var && std::abs(sc.z_kurtosis) <= cfg.z_kurt;
    if (sc.retained) kept.push_back(c);
  }
  if (kept.empty()) {
    // Keep the least-bad channel.
    std::size_t best = n_ch;
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n_ch; ++c) {
      if (!std::isfinite(scores[c].log_variance)) continue;
      const double score = std::max(std::abs(scores[c].z_log_variance) / cfg.z_var,
                                    std::abs(scores[c].z_kurtosis) / cfg.z_kurt);
      if (score < best_score) {
        best_score = score;
        best = c;
      }
    }
    scores[best].retained = true;
    kept.push_back(best);
  }
  if (scores_out) *scores_out = std::move(scores);
  return kept;
}

// ---------------------------------------------------------------------------
// Config

void TrainConfig::validate(double fs) const {
  if (!(variance_fraction > 0.0 && variance_fraction <= 1.0)) throw ConfigError("variance_fraction must lie in (0, 1]");
  if (folds < 2) throw ConfigError("folds must be at least 2");
  if (!(epsilon >= 0.0)) throw ConfigError("epsilon must be non-negative");
  if (!(rejection.z_var > 0.0) || !(rejection.z_kurt > 0.0)) throw ConfigError("rejection thresholds must be positive");
  window.validate(fs);
  BinSpec{bin_width, search_lo, search_hi}.validate(fs);
  const BinSpec seed{bin_width, seed_band.first, seed_band.second};
  seed.validate(fs);
  if (seed_band.first < search_lo - 1e-9 || seed_band.second > search_hi + 1e-9)
    throw ConfigError("seed band lies outside the search range");
  const double off = (seed_band.first - search_lo) / bin_width;
  if (std::abs(off - std::round(off)) > 1e-9) throw ConfigError("seed band is not aligned to the bin grid");
}

FeatureOptions TrainConfig::feature_options() const {
  FeatureOptions o;
  o.variance_fraction = variance_fraction;
  o.discriminant.criterion = criterion;
  o.discriminant.seed = seed;
  return o;
}

BayesOptions TrainConfig::bayes_options() const {
  BayesOptions o;
  o.prior_walk = prior_walk;
  return o;
}

// ---------------------------------------------------------------------------
// Cross-validation

std::vector<std::size_t> stratified_folds(std::span<const State> labels, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("folds must be at least 2");
  std::vector<std::size_t> fold_of(labels.size(), 0);
  std::size_t deal = 0;
  for (State cls : {State::Idle, State::Walk}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cls) idx.push_back(i);
    if (idx.size() < k)
      throw InsufficientDataError("class '" + std::string(to_string(cls)) + "' has " + std::to_string(idx.size()) +
                                  " trials, fewer than " + std::to_string(k) + " folds");
    Rng rng(derive_seed(seed, index_of(cls), 0xF01D));
    for (std::size_t i = idx.size() - 1; i > 0; --i) {
      const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i + 1));
      std::swap(idx[i], idx[std::min(j, i)]);
    }
    for (std::size_t i : idx) fold_of[i] = deal++ % k;
  }
  return fold_of;
}

FoldFit fit_fold(const TrialSet& trials, std::span<const std::size_t> fold_of, std::size_t fold,
                 const TrainConfig& cfg) {
  if (fold_of.size() != trials.size()) throw GeometryError("fold assignment size mismatch");
  std::vector<std::size_t> train_rows;
  for (std::size_t i = 0; i < trials.size(); ++i)
    if (fold_of[i] != fold) train_rows.push_back(i);
  const TrialSet train_set = trials.subset(train_rows);
  FoldFit fit;
  fit.extractor = fit_feature_extractor(train_set, cfg.feature_options());
  fit.bayes = fit_bayes(route_all(fit.extractor, train_set), train_set.labels, cfg.bayes_options());
  return fit;
}

namespace {

double fold_accuracy(const TrialSet& trials, std::span<const std::size_t> fold_of, std::size_t fold,
                     const TrainConfig& cfg) {
  const FoldFit fit = fit_fold(trials, fold_of, fold, cfg);
  std::size_t correct = 0, n_test = 0;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    if (fold_of[i] != fold) continue;
    ++n_test;
    const Feature f = extract(fit.extractor, trials.x.row(static_cast<Eigen::Index>(i)).transpose());
    correct += classify(f, fit.bayes) == trials.labels[i];
  }
  if (n_test == 0) throw InsufficientDataError("empty test fold " + std::to_string(fold));
  return static_cast<double>(correct) / static_cast<double>(n_test);
}

} // namespace

CvResult cross_validate(const TrialSet& trials, std::span<const std::size_t> fold_of, const TrainConfig& cfg,
                        Exec exec) {
  if (fold_of.size() != trials.size()) throw GeometryError("fold assignment size mismatch");
  if (trials.size() == 0) throw InsufficientDataError("no trials");
  const std::size_t k = *std::max_element(fold_of.begin(), fold_of.end()) + 1;
  if (k < 2) throw InsufficientDataError("cross-validation needs at least 2 folds");
  CvResult r;
  r.fold_accuracy.assign(k, 0.0);
  const auto nk = static_cast<std::ptrdiff_t>(k);
  if (exec == Exec::Serial) {
    for (std::ptrdiff_t f = 0; f < nk; ++f)
      r.fold_accuracy[f] = fold_accuracy(trials, fold_of, static_cast<std::size_t>(f), cfg);
  } else {
    std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t f = 0; f < nk; ++f) {
      try {
        r.fold_accuracy[f] = fold_accuracy(trials, fold_of, static_cast<std::size_t>(f), cfg);
      } catch (...) {
#pragma omp critical(gaitbci_cv_error)
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
  }
  r.mean = std::accumulate(r.fold_accuracy.begin(), r.fold_accuracy.end(), 0.0) / static_cast<double>(k);
  double ss = 0.0;
  for (double a : r.fold_accuracy) ss += (a - r.mean) * (a - r.mean);
  r.sd = std::sqrt(ss / static_cast<double>(k - 1));
  return r;
}

// ---------------------------------------------------------------------------
// Band search

TrialSet SpectralTable::trials(double f_lo, double f_hi) const {
  std::vector<SpectralSample> restricted;
  restricted.reserve(samples.size());
  for (const auto& s : samples) restricted.push_back(restrict_band(s, f_lo, f_hi));
  return TrialSet::from_samples(restricted, labels);
}

BandSearchResult search_band(const SpectralTable& table, std::span<const std::size_t> fold_of,
                             const TrainConfig& cfg, Exec exec) {
  if (table.samples.empty()) throw InsufficientDataError("no trials for band search");
  const double lo0 = table.samples.front().f_lo, bw = table.samples.front().bin_width;
  const auto max_bin = static_cast<long>(table.samples.front().n_bins());
  if (std::abs(bw - cfg.bin_width) > 1e-12) throw ConfigError("table bin width differs from config");
  const double a = (cfg.seed_band.first - lo0) / bw, b = (cfg.seed_band.second - lo0) / bw;
  if (std::abs(a - std::round(a)) > 1e-9 || std::abs(b - std::round(b)) > 1e-9)
    throw ConfigError("seed band is not aligned to the bin grid");
  long lo = std::lround(a), hi = std::lround(b);
  if (lo < 0 || hi > max_bin || hi <= lo) throw ConfigError("seed band lies outside the available bins");

  auto band_of = [&](long l, long h) { return std::make_pair(lo0 + bw * static_cast<double>(l), lo0 + bw * static_cast<double>(h)); };
  std::map<std::pair<long, long>, CvResult> cache;
  BandSearchResult out;
  auto score = [&](long l, long h) -> const CvResult& {
    auto key = std::make_pair(l, h);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    const auto band = band_of(l, h);
    CvResult r = cross_validate(table.trials(band.first, band.second), fold_of, cfg, exec);
    out.evaluated.push_back({band, r.mean});
    return cache.emplace(key, std::move(r)).first->second;
  };

  CvResult current = score(lo, hi);
  out.path.push_back({band_of(lo, hi), current.mean});
  for (;;) {
    const std::pair<long, long> moves[] = {{lo - 1, hi}, {lo, hi + 1}, {lo + 1, hi}, {lo, hi - 1}};
    long best_lo = lo, best_hi = hi;
    double best_acc = -1.0;
    for (const auto& [l, h] : moves) {
      if (l < 0 || h > max_bin || h <= l) continue;
      const double acc = score(l, h).mean;
      if (acc > best_acc) {
        best_acc = acc;
        best_lo = l;
        best_hi = h;
      }
    }
    if (!(best_acc - current.mean > cfg.epsilon)) break;
    lo = best_lo;
    hi = best_hi;
    current = cache.at({lo, hi});
    out.path.push_back({band_of(lo, hi), current.mean});
  }
  out.band = band_of(lo, hi);
  out.cv = current;
  return out;
}

// ---------------------------------------------------------------------------
// Training

SpectralTable build_spectral_table(const Recording& rec, const CueSchedule& cues,
                                   std::span<const std::size_t> channels, const TrainConfig& cfg, Exec exec) {
  const auto epochs = label_epochs(rec, cues, cfg.guard);
  std::vector<Window> windows;
  SpectralTable table;
  for (const auto& e : epochs) {
    auto w = slice_windows(rec, cfg.window, e.start, e.end);
    for (auto& win : w) {
      windows.push_back(win);
      table.labels.push_back(e.cls);
    }
  }
  if (windows.empty()) throw InsufficientDataError("no complete windows inside the cue epochs");
  table.samples = compute_spectra(windows, rec.fs(), BinSpec{cfg.bin_width, cfg.search_lo, cfg.search_hi}, cfg.psd,
                                  channels, exec);
  return table;
}

SpectralSample PredictionModel::spectrum(const Eigen::Ref<const SignalMatrix>& retained_window,
                                         double window_start) const {
  if (static_cast<std::size_t>(retained_window.rows()) != retained_channels.size())
    throw GeometryError("window has " + std::to_string(retained_window.rows()) + " channels, model retains " +
                        std::to_string(retained_channels.size()));
  return band_power(retained_window, fs, bins(), psd, {}, window_start);
}

void PredictionModel::validate() const {
  if (retained_channels.empty()) throw FormatError("model retains no channels");
  for (auto c : retained_channels)
    if (c >= channel_labels.size()) throw FormatError("retained channel index out of range");
  bins().validate(fs);
  window.validate(fs);
  if (feature_extractor.n_channels != retained_channels.size() || feature_extractor.n_bins != bins().n_bins())
    throw FormatError("feature extractor geometry does not match band/channels");
  bayes.validate();
  if (!(cv.mean >= 0.0 && cv.mean <= 1.0)) throw FormatError("cv accuracy outside [0, 1]");
}

namespace {

struct Fnv1a {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  void add(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  }
  void add(const std::string& s) { add(s.data(), s.size()); }
  std::string hex() const {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 0; i < 16; ++i) out[static_cast<std::size_t>(15 - i)] = digits[(h >> (4 * i)) & 0xF];
    return out;
  }
};

std::string fingerprint(const Recording& rec, const CueSchedule& cues, const TrainConfig& cfg) {
  Fnv1a f;
  const double fs = rec.fs();
  f.add(&fs, sizeof fs);
  for (const auto& l : rec.channel_labels()) f.add(l);
  f.add(rec.samples().data(), static_cast<std::size_t>(rec.samples().size()) * sizeof(double));
  std::ostringstream c;
  io::write_cues(c, cues);
  f.add(c.str());
  f.add(train_config_json(cfg));
  return f.hex();
}

} // namespace

PredictionModel train(const Recording& rec, const CueSchedule& cues, const TrainConfig& cfg, TrainReport* report,
                      Exec exec) {
  cfg.validate(rec.fs());
  std::vector<ChannelScore> scores;
  const auto retained = reject_channels(rec, cfg.rejection, &scores);
  const SpectralTable table = build_spectral_table(rec, cues, retained, cfg, exec);
  const auto folds = stratified_folds(table.labels, cfg.folds, cfg.seed);
  BandSearchResult search = search_band(table, folds, cfg, exec);

  const TrialSet trials = table.trials(search.band.first, search.band.second);
  PredictionModel model;
  model.fs = rec.fs();
  model.channel_labels = rec.channel_labels();
  model.retained_channels = retained;
  model.band = search.band;
  model.bin_width = cfg.bin_width;
  model.window = cfg.window;
  model.psd = cfg.psd;
  model.feature_extractor = fit_feature_extractor(trials, cfg.feature_options());
  model.bayes = fit_bayes(route_all(model.feature_extractor, trials), trials.labels, cfg.bayes_options());
  model.cv = search.cv;
  model.training_fingerprint = fingerprint(rec, cues, cfg);
  if (report) {
    report->channel_scores = std::move(scores);
    report->n_trials = trials.size();
    report->search = std::move(search);
  }
  return model;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vec_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json mat_json(const Eigen::MatrixXd& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

Eigen::MatrixXd mat_from(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>(), cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw FormatError("matrix data size mismatch");
  return Eigen::Map<const Eigen::MatrixXd>(data.data(), rows, cols);
}

json gauss_json(const Gauss1d& g) { return {{"mean", g.mean}, {"variance", g.variance}}; }
Gauss1d gauss_from(const json& j) { return {j.at("mean").get<double>(), j.at("variance").get<double>()}; }

const char* taper_name(Taper t) { return t == Taper::Hamming ? "hamming" : "rectangular"; }
Taper taper_from(const std::string& s) {
  if (s == "hamming") return Taper::Hamming;
  if (s == "rectangular") return Taper::Rectangular;
  throw ConfigError("unknown taper '" + s + "'");
}

} // namespace

std::string serialize_model(const PredictionModel& m) {
  json j;
  j["format"] = "gaitbci.model";
  j["version"] = PredictionModel::kVersion;
  j["fs"] = m.fs;
  j["channel_labels"] = m.channel_labels;
  j["retained_channels"] = m.retained_channels;
  j["band"] = {m.band.first, m.band.second};
  j["bin_width"] = m.bin_width;
  j["window"] = {{"length", m.window.length}, {"step", m.window.step}};
  j["psd"] = {{"taper", taper_name(m.psd.taper)}, {"detrend", m.psd.detrend}, {"nfft", m.psd.nfft}};
  json fx;
  fx["n_bins"] = m.feature_extractor.n_bins;
  fx["n_channels"] = m.feature_extractor.n_channels;
  fx["variance_fraction"] = m.feature_extractor.variance_fraction;
  for (const auto& s : m.feature_extractor.subspaces)
    fx["subspaces"].push_back({{"class", to_string(s.cls)},
                               {"mean", vec_json(s.mean)},
                               {"basis", mat_json(s.basis)},
                               {"eigenvalues", vec_json(s.eigenvalues)},
                               {"residual_variance", s.residual_variance},
                               {"gauss_1d", gauss_json(s.gauss_1d)}});
  for (const auto& d : m.feature_extractor.discriminants)
    fx["discriminants"].push_back({{"branch", to_string(d.branch)}, {"w", vec_json(d.w)}});
  j["feature_extractor"] = fx;
  json bayes;
  bayes["prior_idle"] = m.bayes.prior_idle;
  bayes["prior_walk"] = m.bayes.prior_walk;
  for (std::size_t b = 0; b < kStateCount; ++b)
    bayes["branches"].push_back({{"branch", to_string(static_cast<State>(b))},
                                 {"idle", gauss_json(m.bayes.branches[b].idle)},
                                 {"walk", gauss_json(m.bayes.branches[b].walk)}});
  j["bayes"] = bayes;
  j["cv_accuracy"] = {{"mean", m.cv.mean}, {"sd", m.cv.sd}, {"folds", m.cv.fold_accuracy}};
  j["training_fingerprint"] = m.training_fingerprint;
  return j.dump(1) + "\n";
}

PredictionModel deserialize_model(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "gaitbci.model") throw FormatError("not a gaitbci model file");
    const int version = j.at("version").get<int>();
    if (version != PredictionModel::kVersion)
      throw FormatError("model version " + std::to_string(version) + " is not supported (expected " +
                        std::to_string(PredictionModel::kVersion) + ")");
    PredictionModel m;
    m.fs = j.at("fs").get<double>();
    m.channel_labels = j.at("channel_labels").get<std::vector<std::string>>();
    m.retained_channels = j.at("retained_channels").get<std::vector<std::size_t>>();
    const auto band = j.at("band").get<std::vector<double>>();
    if (band.size() != 2) throw FormatError("band must have two entries");
    m.band = {band[0], band[1]};
    m.bin_width = j.at("bin_width").get<double>();
    m.window = {j.at("window").at("length").get<double>(), j.at("window").at("step").get<double>()};
    m.psd.taper = taper_from(j.at("psd").at("taper").get<std::string>());
    m.psd.detrend = j.at("psd").at("detrend").get<bool>();
    m.psd.nfft = j.at("psd").at("nfft").get<std::size_t>();
    const auto& fx = j.at("feature_extractor");
    m.feature_extractor.n_bins = fx.at("n_bins").get<std::size_t>();
    m.feature_extractor.n_channels = fx.at("n_channels").get<std::size_t>();
    m.feature_extractor.variance_fraction = fx.at("variance_fraction").get<double>();
    if (fx.at("subspaces").size() != kStateCount || fx.at("discriminants").size() != kStateCount)
      throw FormatError("feature extractor must have exactly two branches");
    for (std::size_t b = 0; b < kStateCount; ++b) {
      const auto& s = fx.at("subspaces")[b];
      auto& sub = m.feature_extractor.subspaces[b];
      sub.cls = parse_state(s.at("class").get<std::string>());
      sub.mean = vec_from(s.at("mean"));
      sub.basis = mat_from(s.at("basis"));
      sub.eigenvalues = vec_from(s.at("eigenvalues"));
      sub.residual_variance = s.at("residual_variance").get<double>();
      sub.gauss_1d = gauss_from(s.at("gauss_1d"));
      const auto& d = fx.at("discriminants")[b];
      m.feature_extractor.discriminants[b].branch = parse_state(d.at("branch").get<std::string>());
      m.feature_extractor.discriminants[b].w = vec_from(d.at("w"));
      if (sub.cls != static_cast<State>(b) || m.feature_extractor.discriminants[b].branch != static_cast<State>(b))
        throw FormatError("branches out of order");
      if (sub.basis.rows() != sub.mean.size() || sub.basis.cols() != sub.eigenvalues.size() ||
          m.feature_extractor.discriminants[b].w.size() != sub.basis.cols())
        throw FormatError("inconsistent subspace dimensions");
    }
    const auto& bayes = j.at("bayes");
    m.bayes.prior_idle = bayes.at("prior_idle").get<double>();
    m.bayes.prior_walk = bayes.at("prior_walk").get<double>();
    if (bayes.at("branches").size() != kStateCount) throw FormatError("bayes model must have two branches");
    for (std::size_t b = 0; b < kStateCount; ++b) {
      m.bayes.branches[b].idle = gauss_from(bayes.at("branches")[b].at("idle"));
      m.bayes.branches[b].walk = gauss_from(bayes.at("branches")[b].at("walk"));
    }
    m.cv.mean = j.at("cv_accuracy").at("mean").get<double>();
    m.cv.sd = j.at("cv_accuracy").at("sd").get<double>();
    m.cv.fold_accuracy = j.at("cv_accuracy").at("folds").get<std::vector<double>>();
    m.training_fingerprint = j.at("training_fingerprint").get<std::string>();
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed model file: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("malformed model file: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// TrainConfig JSON

std::string train_config_json(const TrainConfig& c) {
  json j;
  j["variance_fraction"] = c.variance_fraction;
  j["criterion"] = c.criterion == Criterion::AIDA ? "aida" : "lda";
  j["z_var"] = c.rejection.z_var;
  j["z_kurt"] = c.rejection.z_kurt;
  j["logvar_scale_floor"] = c.rejection.logvar_scale_floor;
  j["kurt_scale_floor"] = c.rejection.kurt_scale_floor;
  j["seed_band"] = {c.seed_band.first, c.seed_band.second};
  j["bin_width"] = c.bin_width;
  j["search_lo"] = c.search_lo;
  j["search_hi"] = c.search_hi;
  j["epsilon"] = c.epsilon;
  j["folds"] = c.folds;
  j["seed"] = c.seed;
  j["window_length"] = c.window.length;
  j["window_step"] = c.window.step;
  j["taper"] = taper_name(c.psd.taper);
  j["detrend"] = c.psd.detrend;
  j["nfft"] = c.psd.nfft;
  j["guard"] = c.guard;
  j["prior_walk"] = c.prior_walk ? json(*c.prior_walk) : json(nullptr);
  return j.dump(1) + "\n";
}

TrainConfig parse_train_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("train config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("train config must be a JSON object");
  TrainConfig c;
  for (const auto& [key, v] : j.items()) {
    try {
      if (key == "variance_fraction") c.variance_fraction = v.get<double>();
      else if (key == "criterion") {
        const auto s = v.get<std::string>();
        if (s == "aida") c.criterion = Criterion::AIDA;
        else if (s == "lda") c.criterion = Criterion::LDA;
        else throw ConfigError("field 'criterion': expected \"aida\" or \"lda\"");
      } else if (key == "z_var") c.rejection.z_var = v.get<double>();
      else if (key == "z_kurt") c.rejection.z_kurt = v.get<double>();
      else if (key == "logvar_scale_floor") c.rejection.logvar_scale_floor = v.get<double>();
      else if (key == "kurt_scale_floor") c.rejection.kurt_scale_floor = v.get<double>();
      else if (key == "seed_band") {
        const auto b = v.get<std::vector<double>>();
        if (b.size() != 2) throw ConfigError("field 'seed_band': expected [lo, hi]");
        c.seed_band = {b[0], b[1]};
      } else if (key == "bin_width") c.bin_width = v.get<double>();
      else if (key == "search_lo") c.search_lo = v.get<double>();
      else if (key == "search_hi") c.search_hi = v.get<double>();
      else if (key == "epsilon") c.epsilon = v.get<double>();
      else if (key == "folds") c.folds = v.get<std::size_t>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "window_length") c.window.length = v.get<double>();
      else if (key == "window_step") c.window.step = v.get<double>();
      else if (key == "taper") c.psd.taper = taper_from(v.get<std::string>());
      else if (key == "detrend") c.psd.detrend = v.get<bool>();
      else if (key == "nfft") c.psd.nfft = v.get<std::size_t>();
      else if (key == "guard") c.guard = v.get<double>();
      else if (key == "prior_walk") c.prior_walk = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
      else throw ConfigError("unknown field '" + key + "'");
    } catch (const json::exception& e) {
      throw ConfigError("field '" + key + "': " + e.what());
    }
  }
  return c;
}

} // namespace gaitbci

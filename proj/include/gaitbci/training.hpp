#pragma once

#include "gaitbci/classifier.hpp"
#include "gaitbci/exec.hpp"
#include "gaitbci/features.hpp"
#include "gaitbci/spectral.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace gaitbci {

struct RejectionConfig {
  double z_var = 4.0;
  double z_kurt = 4.0;
  // Lower bounds on the robust scale (1.4826 * MAD); keep homogeneous
  // channels from producing huge z-scores out of tiny spreads.
  double logvar_scale_floor = 0.5;
  double kurt_scale_floor = 1.0;
};

struct ChannelScore {
  double log_variance = 0.0;
  double kurtosis = 0.0;
  double z_log_variance = 0.0;
  double z_kurtosis = 0.0;
  bool retained = true;
};

// Indices of channels kept after robust z-scoring of log-variance and kurtosis.
std::vector<std::size_t> reject_channels(const Recording& rec, const RejectionConfig& cfg = {},
                                         std::vector<ChannelScore>* scores = nullptr);

struct TrainConfig {
  double variance_fraction = 0.9;
  Criterion criterion = Criterion::AIDA;
  RejectionConfig rejection;
  std::pair<double, double> seed_band{6.0, 14.0};
  double bin_width = 2.0;
  double search_lo = 2.0;  // lowest frequency the band search may reach
  double search_hi = 40.0; // highest
  double epsilon = 0.001;  // minimum CV improvement for a move
  std::size_t folds = 10;
  std::uint64_t seed = 1;
  WindowSpec window;
  PsdOptions psd;
  double guard = 0.0;
  std::optional<double> prior_walk;

  void validate(double fs) const;
  FeatureOptions feature_options() const;
  BayesOptions bayes_options() const;
};

// Stratified assignment of trials to folds: per class, a seeded shuffle dealt
// round-robin, continuing the rotation across classes.
std::vector<std::size_t> stratified_folds(std::span<const State> labels, std::size_t k, std::uint64_t seed);

struct CvResult {
  double mean = 0.0;
  double sd = 0.0;
  std::vector<double> fold_accuracy;
};

// Transform and classifier fitted for held-out fold `fold`, from the trials
// of every other fold only.
struct FoldFit {
  FeatureExtractor extractor;
  BayesModel bayes;
};

FoldFit fit_fold(const TrialSet& trials, std::span<const std::size_t> fold_of, std::size_t fold,
                 const TrainConfig& cfg);

// Every transform and classifier parameter of fold f is fit on trials whose
// fold id differs from f.
CvResult cross_validate(const TrialSet& trials, std::span<const std::size_t> fold_of, const TrainConfig& cfg,
                        Exec exec = Exec::Parallel);

// Spectra of all trials over [search_lo, search_hi), restricted per candidate.
struct SpectralTable {
  std::vector<SpectralSample> samples;
  std::vector<State> labels;

  TrialSet trials(double f_lo, double f_hi) const;
};

struct BandStep {
  std::pair<double, double> band;
  double accuracy = 0.0;
};

struct BandSearchResult {
  std::pair<double, double> band;
  CvResult cv;
  std::vector<BandStep> path;      // bands moved into, starting with the seed
  std::vector<BandStep> evaluated; // every candidate scored, in evaluation order
};

// Greedy hill climbing over single-bin boundary moves, tried in the fixed
// order: lower F_L, raise F_H, raise F_L, lower F_H.
BandSearchResult search_band(const SpectralTable& table, std::span<const std::size_t> fold_of,
                             const TrainConfig& cfg, Exec exec = Exec::Parallel);

struct PredictionModel {
  static constexpr int kVersion = 1;

  double fs = 256.0;
  std::vector<std::string> channel_labels; // all channels of the training recording
  std::vector<std::size_t> retained_channels;
  std::pair<double, double> band{6.0, 14.0};
  double bin_width = 2.0;
  WindowSpec window;
  PsdOptions psd;
  FeatureExtractor feature_extractor;
  BayesModel bayes;
  CvResult cv;
  std::string training_fingerprint;

  std::size_t n_channels_total() const { return channel_labels.size(); }
  BinSpec bins() const { return {bin_width, band.first, band.second}; }

  // Window of retained channels only (rows) -> feature.
  SpectralSample spectrum(const Eigen::Ref<const SignalMatrix>& retained_window, double window_start = 0.0) const;
  Feature feature(const SpectralSample& s) const { return extract(s, feature_extractor); }
  double posterior(const SpectralSample& s) const { return gaitbci::posterior(feature(s), bayes); }
  void validate() const;
};

// Recording + cues -> trials on the training window grid (retained channels).
SpectralTable build_spectral_table(const Recording& rec, const CueSchedule& cues,
                                   std::span<const std::size_t> channels, const TrainConfig& cfg,
                                   Exec exec = Exec::Parallel);

struct TrainReport {
  std::vector<ChannelScore> channel_scores;
  BandSearchResult search;
  std::size_t n_trials = 0;
};

PredictionModel train(const Recording& rec, const CueSchedule& cues, const TrainConfig& cfg,
                      TrainReport* report = nullptr, Exec exec = Exec::Parallel);

std::string serialize_model(const PredictionModel& model);
PredictionModel deserialize_model(const std::string& text);

std::string train_config_json(const TrainConfig& cfg);
TrainConfig parse_train_config(const std::string& json_text);

} // namespace gaitbci

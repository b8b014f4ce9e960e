#include "gaitbci/classifier.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace gaitbci {

void BayesModel::validate() const {
  if (!(prior_idle >= 0.0) || !(prior_walk >= 0.0) || std::abs(prior_idle + prior_walk - 1.0) > 1e-12)
    throw ConfigError("priors must be non-negative and sum to 1");
  for (const auto& b : branches)
    if (!(b.idle.variance > 0.0) || !(b.walk.variance > 0.0) || !std::isfinite(b.idle.mean) ||
        !std::isfinite(b.walk.mean))
      throw ConfigError("class variances must be positive and means finite");
}

namespace {

double log_gauss(double f, const Gauss1d& g) {
  const double d = f - g.mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * g.variance) + d * d / g.variance);
}

} // namespace

double posterior(double f, State branch, const BayesModel& model) {
  if (!std::isfinite(f)) throw InputError("feature is not finite");
  if (model.prior_walk <= 0.0) return 0.0;
  if (model.prior_idle <= 0.0) return 1.0;
  const auto& b = model.branches[index_of(branch)];
  const double li = std::log(model.prior_idle) + log_gauss(f, b.idle);
  const double lw = std::log(model.prior_walk) + log_gauss(f, b.walk);
  // Logistic of the log-odds, written to avoid overflow on either side.
  const double odds = lw - li;
  if (odds >= 0.0) return 1.0 / (1.0 + std::exp(-odds));
  const double e = std::exp(odds);
  return e / (1.0 + e);
}

State classify(double f, State branch, const BayesModel& model) {
  const double pw = posterior(f, branch, model);
  const double pi = 1.0 - pw;
  return pi > pw ? State::Idle : State::Walk;
}

BayesModel fit_bayes(std::span<const RoutedFeature> features, std::span<const State> labels,
                     const BayesOptions& opts) {
  if (features.size() != labels.size()) throw GeometryError("feature and label counts differ");
  BayesModel model;
  std::size_t n_walk = 0;
  for (State s : labels) n_walk += s == State::Walk;
  const std::size_t n_idle = labels.size() - n_walk;
  if (n_idle < 2 || n_walk < 2) throw InsufficientDataError("need at least 2 trials per class");

  const double pw = opts.prior_walk.value_or(static_cast<double>(n_walk) / static_cast<double>(labels.size()));
  if (!(pw >= 0.0 && pw <= 1.0)) throw ConfigError("walk prior must lie in [0, 1]");
  model.prior_walk = pw;
  model.prior_idle = 1.0 - pw;

  auto fit = [](const std::vector<double>& v) {
    Gauss1d g;
    double sum = 0.0;
    for (double x : v) sum += x;
    g.mean = sum / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - g.mean) * (x - g.mean);
    g.variance = ss / static_cast<double>(v.size() - 1);
    g.variance = std::max(g.variance, 1e-12 * std::max(1.0, g.mean * g.mean));
    return g;
  };

  for (State b : {State::Idle, State::Walk}) {
    for (State c : {State::Idle, State::Walk}) {
      std::vector<double> routed, all;
      for (std::size_t i = 0; i < features.size(); ++i) {
        if (labels[i] != c) continue;
        all.push_back(features[i].through[index_of(b)]);
        if (features[i].branch == b) routed.push_back(features[i].through[index_of(b)]);
      }
      const Gauss1d g = fit(routed.size() >= std::max<std::size_t>(opts.min_routed, 2) ? routed : all);
      (c == State::Idle ? model.branches[index_of(b)].idle : model.branches[index_of(b)].walk) = g;
    }
  }
  return model;
}

} // namespace gaitbci

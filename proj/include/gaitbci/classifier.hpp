#pragma once

#include "gaitbci/features.hpp"

#include <array>
#include <optional>
#include <span>

namespace gaitbci {

// Gaussian class-conditional models of the 1-D feature, one pair per branch,
// plus class priors. Posteriors are evaluated in the log domain.
struct BayesModel {
  struct Branch {
    Gauss1d idle;
    Gauss1d walk;
  };
  std::array<Branch, kStateCount> branches;
  double prior_idle = 0.5;
  double prior_walk = 0.5;

  void validate() const;
};

// P(Walk | f) for a feature that selected `branch`. P(Idle | f) is exactly
// 1 - P(Walk | f).
double posterior(double f, State branch, const BayesModel& model);
inline double posterior(const Feature& f, const BayesModel& model) { return posterior(f.value, f.branch, model); }

// Idle iff P(Idle|f) > P(Walk|f); ties go to Walk.
State classify(double f, State branch, const BayesModel& model);
inline State classify(const Feature& f, const BayesModel& model) { return classify(f.value, f.branch, model); }

struct BayesOptions {
  // Priors default to the training class frequencies.
  std::optional<double> prior_walk;
  // Branch/class cells with fewer routed trials fall back to all trials
  // evaluated through that branch.
  std::size_t min_routed = 5;
};

BayesModel fit_bayes(std::span<const RoutedFeature> features, std::span<const State> labels,
                     const BayesOptions& opts = {});

} // namespace gaitbci

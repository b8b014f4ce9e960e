#pragma once

#include "gaitbci/signal.hpp"
#include "gaitbci/spectral.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace gaitbci {

// Trials as rows of vec(B x C) (column-major: bin index varies fastest).
struct TrialSet {
  Eigen::MatrixXd x;
  std::vector<State> labels;
  std::size_t n_bins = 0;
  std::size_t n_channels = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return n_bins * n_channels; }
  std::size_t count(State s) const;

  static TrialSet from_samples(std::span<const SpectralSample> samples, std::span<const State> labels);
  TrialSet subset(std::span<const std::size_t> rows) const;
};

Eigen::VectorXd flatten(const SpectralSample& sample);

struct Gauss1d {
  double mean = 0.0;
  double variance = 1.0;
};

// Per-class principal subspace. Eigenvalues and the residual (discarded)
// variance define the subspace Gaussian used to pick a branch.
struct ClassSubspace {
  State cls = State::Idle;
  Eigen::VectorXd mean;        // p
  Eigen::MatrixXd basis;       // p x m, orthonormal columns
  Eigen::VectorXd eigenvalues; // m, descending
  double residual_variance = 0.0;
  Gauss1d gauss_1d;            // feature moments of training trials routed here

  std::size_t dim() const { return static_cast<std::size_t>(basis.cols()); }
  Eigen::VectorXd project(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  double log_likelihood(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

enum class Criterion { AIDA, LDA };

struct DiscriminantVector {
  State branch = State::Idle;
  Eigen::VectorXd w; // unit norm
};

struct FeatureExtractor {
  std::size_t n_bins = 0;
  std::size_t n_channels = 0;
  double variance_fraction = 0.9;
  std::array<ClassSubspace, kStateCount> subspaces;
  std::array<DiscriminantVector, kStateCount> discriminants;

  std::size_t dim() const { return n_bins * n_channels; }
};

struct Feature {
  double value = 0.0;
  State branch = State::Idle;
};

// Feature through both branches plus the branch the selector picked.
struct RoutedFeature {
  std::array<double, kStateCount> through{};
  State branch = State::Idle;
  double value() const { return through[index_of(branch)]; }
};

// Top principal components of each class capturing at least `kappa` of that
// class's variance.
std::array<ClassSubspace, kStateCount> fit_cpca(const TrialSet& trials, double kappa);

// First and second moments of the two classes in some projected space.
struct TwoClassMoments {
  Eigen::VectorXd mean_idle, mean_walk;
  Eigen::MatrixXd cov_idle, cov_walk;
  std::size_t n_idle = 0, n_walk = 0;

  static TwoClassMoments from_samples(const Eigen::Ref<const Eigen::MatrixXd>& idle,
                                      const Eigen::Ref<const Eigen::MatrixXd>& walk);
  std::size_t dim() const { return static_cast<std::size_t>(mean_idle.size()); }
};

struct DiscriminantOptions {
  Criterion criterion = Criterion::AIDA;
  double ridge = 1e-6;       // lambda in lambda * trace(S) / m * I
  std::size_t random_starts = 8;
  std::size_t max_iterations = 500;
  double tolerance = 1e-8;
  std::uint64_t seed = 1;
};

// Information surrogate for a unit direction w:
//   1/2 ln(s_avg / sqrt(s_I s_W)) + 1/4 (m_I - m_W)^2 / s_avg
// with projected means m and variances s.
double aida_objective(const TwoClassMoments& m, const Eigen::Ref<const Eigen::VectorXd>& w);

// Adds lambda * trace(S) / m * I to both class covariances, as fit_discriminant
// does before optimizing.
TwoClassMoments with_ridge(const TwoClassMoments& m, double lambda);

// Returned direction is oriented so the Walk mean projects above the Idle mean.
DiscriminantVector fit_discriminant(const TwoClassMoments& moments, const DiscriminantOptions& opts,
                                    State branch = State::Idle);

struct FeatureOptions {
  double variance_fraction = 0.9;
  DiscriminantOptions discriminant;
};

FeatureExtractor fit_feature_extractor(const TrialSet& trials, const FeatureOptions& opts);

// Higher subspace likelihood wins; equal likelihoods select Walk.
State select_branch(const FeatureExtractor& fx, const Eigen::Ref<const Eigen::VectorXd>& x);
RoutedFeature route(const FeatureExtractor& fx, const Eigen::Ref<const Eigen::VectorXd>& x);
Feature extract(const SpectralSample& x, const FeatureExtractor& fx);
Feature extract(const FeatureExtractor& fx, const Eigen::Ref<const Eigen::VectorXd>& x);
std::vector<RoutedFeature> route_all(const FeatureExtractor& fx, const TrialSet& trials);

} // namespace gaitbci

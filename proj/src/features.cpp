#include "gaitbci/features.hpp"

#include "gaitbci/random.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace gaitbci {

std::size_t TrialSet::count(State s) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), s));
}

Eigen::VectorXd flatten(const SpectralSample& sample) {
  return Eigen::Map<const Eigen::VectorXd>(sample.values.data(), sample.values.size());
}

TrialSet TrialSet::from_samples(std::span<const SpectralSample> samples, std::span<const State> labels) {
  if (samples.size() != labels.size()) throw GeometryError("sample and label counts differ");
  if (samples.empty()) throw InsufficientDataError("no trials");
  TrialSet t;
  t.n_bins = samples.front().n_bins();
  t.n_channels = samples.front().n_channels();
  t.x.resize(static_cast<Eigen::Index>(samples.size()), static_cast<Eigen::Index>(t.dim()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].n_bins() != t.n_bins || samples[i].n_channels() != t.n_channels)
      throw GeometryError("trials have inconsistent shapes");
    t.x.row(static_cast<Eigen::Index>(i)) = flatten(samples[i]).transpose();
  }
  t.labels.assign(labels.begin(), labels.end());
  return t;
}

TrialSet TrialSet::subset(std::span<const std::size_t> rows) const {
  TrialSet t;
  t.n_bins = n_bins;
  t.n_channels = n_channels;
  t.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
  t.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    t.x.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
    t.labels.push_back(labels[rows[i]]);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Classwise PCA

Eigen::VectorXd ClassSubspace::project(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return basis.transpose() * (x - mean);
}

double ClassSubspace::log_likelihood(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const Eigen::VectorXd centered = x - mean;
  const Eigen::VectorXd z = basis.transpose() * centered;
  const auto p = static_cast<double>(mean.size());
  const auto m = static_cast<double>(z.size());
  double quad = 0.0, logdet = 0.0;
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    quad += z(j) * z(j) / eigenvalues(j);
    logdet += std::log(eigenvalues(j));
  }
  if (p > m) {
    const double residual = std::max(0.0, centered.squaredNorm() - z.squaredNorm());
    quad += residual / residual_variance;
    logdet += (p - m) * std::log(residual_variance);
  }
  return -0.5 * (quad + logdet + p * std::log(2.0 * std::numbers::pi));
}

namespace {

void orient_columns(Eigen::MatrixXd& basis) {
  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    Eigen::Index arg = 0;
    basis.col(j).cwiseAbs().maxCoeff(&arg);
    if (basis(arg, j) < 0.0) basis.col(j) *= -1.0;
  }
}

// Two passes of modified Gram-Schmidt; near-orthonormal input is only nudged.
void reorthonormalize(Eigen::MatrixXd& q) {
  for (int pass = 0; pass < 2; ++pass) {
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
      for (Eigen::Index i = 0; i < j; ++i) q.col(j) -= q.col(i).dot(q.col(j)) * q.col(i);
      const double norm = q.col(j).norm();
      if (!(norm > 0.0)) throw NumericalError("principal basis lost rank during orthonormalization");
      q.col(j) /= norm;
    }
  }
}

ClassSubspace fit_class_subspace(const Eigen::MatrixXd& x, double kappa, State cls) {
  const Eigen::Index n = x.rows(), p = x.cols();
  if (n < 2)
    throw InsufficientDataError("class '" + std::string(to_string(cls)) + "' has fewer than 2 trials");
  ClassSubspace sub;
  sub.cls = cls;
  sub.mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - sub.mean.transpose();
  const double denom = static_cast<double>(n - 1);
  const double total = centered.squaredNorm() / denom;
  if (!(total > 0.0) || !std::isfinite(total))
    throw DegenerateDataError("class '" + std::string(to_string(cls)) + "' has zero total variance");

  Eigen::VectorXd evals;
  Eigen::MatrixXd evecs;
  if (p <= n) {
    const Eigen::MatrixXd cov = (centered.transpose() * centered) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    if (es.info() != Eigen::Success) throw NumericalError("covariance eigendecomposition failed");
    evals = es.eigenvalues().reverse();
    evecs = es.eigenvectors().rowwise().reverse();
  } else {
    // Gram-matrix route for p > n.
    const Eigen::MatrixXd gram = (centered * centered.transpose()) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    if (es.info() != Eigen::Success) throw NumericalError("Gram eigendecomposition failed");
    evals = es.eigenvalues().reverse();
    evecs.resize(p, n);
    const Eigen::MatrixXd u = es.eigenvectors().rowwise().reverse();
    for (Eigen::Index j = 0; j < n; ++j) {
      const double lam = evals(j);
      evecs.col(j) = lam > 0.0 ? Eigen::VectorXd(centered.transpose() * u.col(j) / std::sqrt(denom * lam))
                               : Eigen::VectorXd::Zero(p);
    }
  }

  const Eigen::Index cap = std::min(p, n - 1);
  Eigen::Index m = 0;
  double kept = 0.0;
  const double target = kappa * total * (1.0 - 1e-12);
  while (m < cap) {
    kept += std::max(evals(m), 0.0);
    ++m;
    if (kept >= target) break;
  }
  m = std::max<Eigen::Index>(m, 1);

  sub.basis = evecs.leftCols(m);
  if (p > n) reorthonormalize(sub.basis);
  orient_columns(sub.basis);
  const double floor = 1e-12 * total;
  sub.eigenvalues = evals.head(m).cwiseMax(floor);
  if (p > m) {
    const double retained = evals.head(m).cwiseMax(0.0).sum();
    sub.residual_variance =
        std::max((total - retained) / static_cast<double>(p - m), 1e-9 * total / static_cast<double>(p));
  }
  return sub;
}

} // namespace

std::array<ClassSubspace, kStateCount> fit_cpca(const TrialSet& trials, double kappa) {
  if (!(kappa > 0.0 && kappa <= 1.0)) throw ConfigError("variance fraction must lie in (0, 1]");
  std::array<ClassSubspace, kStateCount> out;
  for (State cls : {State::Idle, State::Walk}) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < trials.size(); ++i)
      if (trials.labels[i] == cls) rows.push_back(i);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), trials.x.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
      x.row(static_cast<Eigen::Index>(i)) = trials.x.row(static_cast<Eigen::Index>(rows[i]));
    out[index_of(cls)] = fit_class_subspace(x, kappa, cls);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Discriminant

namespace {

void moments_of(const Eigen::Ref<const Eigen::MatrixXd>& x, Eigen::VectorXd& mean, Eigen::MatrixXd& cov) {
  if (x.rows() < 2) throw InsufficientDataError("discriminant needs at least 2 trials per class");
  mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd c = x.rowwise() - mean.transpose();
  cov = (c.transpose() * c) / static_cast<double>(x.rows() - 1);
}

Eigen::MatrixXd ridge(const Eigen::MatrixXd& s, double lambda) {
  const auto m = static_cast<double>(s.rows());
  double add = lambda * s.trace() / m;
  if (!(add > 0.0)) add = lambda;
  return s + add * Eigen::MatrixXd::Identity(s.rows(), s.cols());
}

struct Objective {
  const Eigen::MatrixXd& a;
  const Eigen::MatrixXd& b;
  const Eigen::VectorXd& delta; // walk - idle

  double value(const Eigen::VectorXd& u) const {
    const double va = u.dot(a * u), vb = u.dot(b * u);
    const double s = 0.5 * (va + vb), d = u.dot(delta);
    return 0.5 * std::log(s) - 0.25 * std::log(va) - 0.25 * std::log(vb) + 0.25 * d * d / s;
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& u) const {
    const Eigen::VectorXd au = a * u, bu = b * u;
    const double va = u.dot(au), vb = u.dot(bu);
    const double s = 0.5 * (va + vb), d = u.dot(delta);
    const Eigen::VectorXd su = au + bu;
    return su / (2.0 * s) - au / (2.0 * va) - bu / (2.0 * vb) + d * delta / (2.0 * s) -
           d * d * su / (4.0 * s * s);
  }
};

struct Ascent {
  Eigen::VectorXd u;
  double value;
};

Ascent ascend(const Objective& obj, Eigen::VectorXd u, std::size_t max_iter, double tol) {
  u.normalize();
  double value = obj.value(u);
  Eigen::VectorXd g = obj.gradient(u);
  double step = 1.0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    if (!(g.norm() > tol)) break;
    bool accepted = false;
    Eigen::VectorXd cand;
    double cand_value = value;
    while (step > 1e-18) {
      cand = (u + step * g).normalized();
      cand_value = obj.value(cand);
      if (cand_value > value) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    const double gain = cand_value - value;
    u = cand;
    value = cand_value;
    g = obj.gradient(u);
    step *= 2.0;
    if (gain < tol * std::max(1.0, std::abs(value))) break;
  }
  return {u, value};
}

void orient(Eigen::VectorXd& w, const Eigen::VectorXd& delta) {
  const double d = w.dot(delta);
  if (d < 0.0) {
    w = -w;
  } else if (d == 0.0) {
    Eigen::Index arg = 0;
    w.cwiseAbs().maxCoeff(&arg);
    if (w(arg) < 0.0) w = -w;
  }
}

} // namespace

TwoClassMoments TwoClassMoments::from_samples(const Eigen::Ref<const Eigen::MatrixXd>& idle,
                                              const Eigen::Ref<const Eigen::MatrixXd>& walk) {
  if (idle.cols() != walk.cols()) throw GeometryError("class samples differ in dimension");
  TwoClassMoments m;
  moments_of(idle, m.mean_idle, m.cov_idle);
  moments_of(walk, m.mean_walk, m.cov_walk);
  m.n_idle = static_cast<std::size_t>(idle.rows());
  m.n_walk = static_cast<std::size_t>(walk.rows());
  return m;
}

TwoClassMoments with_ridge(const TwoClassMoments& m, double lambda) {
  TwoClassMoments out = m;
  out.cov_idle = ridge(m.cov_idle, lambda);
  out.cov_walk = ridge(m.cov_walk, lambda);
  return out;
}

double aida_objective(const TwoClassMoments& m, const Eigen::Ref<const Eigen::VectorXd>& w) {
  const Eigen::VectorXd delta = m.mean_walk - m.mean_idle;
  const Objective obj{m.cov_idle, m.cov_walk, delta};
  return obj.value(w);
}

DiscriminantVector fit_discriminant(const TwoClassMoments& moments, const DiscriminantOptions& opts,
                                    State branch) {
  const auto m = static_cast<Eigen::Index>(moments.dim());
  if (m == 0) throw GeometryError("empty projected space");
  const Eigen::MatrixXd si = ridge(moments.cov_idle, opts.ridge);
  const Eigen::MatrixXd sw = ridge(moments.cov_walk, opts.ridge);
  const double ni = static_cast<double>(std::max<std::size_t>(moments.n_idle, 1));
  const double nw = static_cast<double>(std::max<std::size_t>(moments.n_walk, 1));
  const double dof = std::max(ni + nw - 2.0, 1.0);
  const Eigen::MatrixXd pooled = ((ni - 1.0) * si + (nw - 1.0) * sw) / dof;
  const Eigen::VectorXd delta = moments.mean_walk - moments.mean_idle;

  Eigen::LLT<Eigen::MatrixXd> llt(pooled);
  if (llt.info() != Eigen::Success)
    throw NumericalError("pooled covariance is singular after regularization (dim " + std::to_string(m) +
                         ", trace " + std::to_string(pooled.trace()) + ")");
  Eigen::VectorXd lda = llt.solve(delta);
  const bool lda_defined = delta.norm() > 0.0 && lda.norm() > 0.0 && lda.allFinite();

  DiscriminantVector out;
  out.branch = branch;
  if (opts.criterion == Criterion::LDA) {
    if (!lda_defined) throw NumericalError("class means coincide; LDA direction is undefined");
    out.w = lda.normalized();
    orient(out.w, delta);
    return out;
  }

  // Optimize in coordinates whitened by the pooled covariance; the objective is
  // scale free, so directions map back through the same transform.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(pooled);
  if (es.info() != Eigen::Success || !(es.eigenvalues().minCoeff() > 0.0))
    throw NumericalError("pooled covariance is not positive definite");
  const Eigen::MatrixXd white =
      es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  const Eigen::MatrixXd a = white * si * white;
  const Eigen::MatrixXd b = white * sw * white;
  const Eigen::VectorXd wd = white * delta;
  const Objective obj{a, b, wd};

  std::vector<Eigen::VectorXd> starts;
  if (lda_defined) starts.push_back(wd.normalized()); // the LDA direction in whitened space
  Rng rng(derive_seed(opts.seed, static_cast<std::uint64_t>(branch), 0xA1DA));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t s = 0; s < opts.random_starts; ++s) {
    Eigen::VectorXd u(m);
    for (Eigen::Index i = 0; i < m; ++i) u(i) = normal(rng);
    if (u.norm() == 0.0) u(0) = 1.0;
    starts.push_back(u);
  }
  if (starts.empty()) starts.push_back(Eigen::VectorXd::Unit(m, 0));

  Ascent best{starts.front(), -std::numeric_limits<double>::infinity()};
  for (const auto& s : starts) {
    Ascent r = ascend(obj, s, opts.max_iterations, opts.tolerance);
    if (std::isfinite(r.value) && r.value > best.value) best = std::move(r);
  }
  if (!std::isfinite(best.value)) throw NumericalError("discriminant objective is not finite");
  out.w = (white * best.u).normalized();
  orient(out.w, delta);
  return out;
}

// ---------------------------------------------------------------------------
// Feature extractor

namespace {

Gauss1d moments_1d(const std::vector<double>& v) {
  Gauss1d g;
  if (v.empty()) return g;
  double sum = 0.0;
  for (double x : v) sum += x;
  g.mean = sum / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - g.mean) * (x - g.mean);
  g.variance = v.size() > 1 ? ss / static_cast<double>(v.size() - 1) : 0.0;
  return g;
}

} // namespace

FeatureExtractor fit_feature_extractor(const TrialSet& trials, const FeatureOptions& opts) {
  if (trials.count(State::Idle) < 2 || trials.count(State::Walk) < 2)
    throw InsufficientDataError("need at least 2 trials per class");
  FeatureExtractor fx;
  fx.n_bins = trials.n_bins;
  fx.n_channels = trials.n_channels;
  fx.variance_fraction = opts.variance_fraction;
  fx.subspaces = fit_cpca(trials, opts.variance_fraction);

  for (State b : {State::Idle, State::Walk}) {
    const ClassSubspace& sub = fx.subspaces[index_of(b)];
    const Eigen::MatrixXd z = (trials.x.rowwise() - sub.mean.transpose()) * sub.basis;
    std::vector<Eigen::Index> idle_rows, walk_rows;
    for (std::size_t i = 0; i < trials.size(); ++i)
      (trials.labels[i] == State::Idle ? idle_rows : walk_rows).push_back(static_cast<Eigen::Index>(i));
    const Eigen::MatrixXd zi = z(idle_rows, Eigen::all);
    const Eigen::MatrixXd zw = z(walk_rows, Eigen::all);
    fx.discriminants[index_of(b)] = fit_discriminant(TwoClassMoments::from_samples(zi, zw), opts.discriminant, b);
  }

  const auto routed = route_all(fx, trials);
  for (State b : {State::Idle, State::Walk}) {
    std::vector<double> mine, all;
    for (const auto& r : routed) {
      all.push_back(r.through[index_of(b)]);
      if (r.branch == b) mine.push_back(r.value());
    }
    Gauss1d g = moments_1d(mine.size() >= 2 ? mine : all);
    g.variance = std::max(g.variance, 1e-12 * std::max(1.0, g.mean * g.mean));
    fx.subspaces[index_of(b)].gauss_1d = g;
  }
  return fx;
}

State select_branch(const FeatureExtractor& fx, const Eigen::Ref<const Eigen::VectorXd>& x) {
  const double li = fx.subspaces[index_of(State::Idle)].log_likelihood(x);
  const double lw = fx.subspaces[index_of(State::Walk)].log_likelihood(x);
  return li > lw ? State::Idle : State::Walk;
}

RoutedFeature route(const FeatureExtractor& fx, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (static_cast<std::size_t>(x.size()) != fx.dim())
    throw GeometryError("feature vector has dimension " + std::to_string(x.size()) + ", model expects " +
                        std::to_string(fx.dim()));
  RoutedFeature r;
  for (State b : {State::Idle, State::Walk}) {
    const auto& sub = fx.subspaces[index_of(b)];
    r.through[index_of(b)] = fx.discriminants[index_of(b)].w.dot(sub.project(x));
  }
  r.branch = select_branch(fx, x);
  return r;
}

Feature extract(const FeatureExtractor& fx, const Eigen::Ref<const Eigen::VectorXd>& x) {
  const RoutedFeature r = route(fx, x);
  return {r.value(), r.branch};
}

Feature extract(const SpectralSample& x, const FeatureExtractor& fx) {
  if (x.n_bins() != fx.n_bins || x.n_channels() != fx.n_channels)
    throw GeometryError("sample is " + std::to_string(x.n_bins()) + "x" + std::to_string(x.n_channels()) +
                        ", model expects " + std::to_string(fx.n_bins) + "x" + std::to_string(fx.n_channels));
  return extract(fx, flatten(x));
}

std::vector<RoutedFeature> route_all(const FeatureExtractor& fx, const TrialSet& trials) {
  std::vector<RoutedFeature> out(trials.size());
  for (std::size_t i = 0; i < trials.size(); ++i)
    out[i] = route(fx, trials.x.row(static_cast<Eigen::Index>(i)).transpose());
  return out;
}

} // namespace gaitbci

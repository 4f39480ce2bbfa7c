#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "behgan/errors.hpp"
#include "behgan/metrics.hpp"

namespace behgan {

namespace {

struct Gaussian {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

Gaussian fit(const FeatureSet& set) {
  if (set.size() < 2) throw TooFewSamples(set.size(), 2);
  const auto d = static_cast<Eigen::Index>(set.front().size());
  Eigen::MatrixXd x(static_cast<Eigen::Index>(set.size()), d);
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (static_cast<Eigen::Index>(set[i].size()) != d) throw DimensionMismatch();
    for (Eigen::Index j = 0; j < d; ++j) x(static_cast<Eigen::Index>(i), j) = set[i][static_cast<std::size_t>(j)];
  }
  Gaussian g;
  g.mean = x.colwise().mean().transpose();
  x.rowwise() -= g.mean.transpose();
  g.cov = (x.transpose() * x) / static_cast<double>(set.size() - 1);
  return g;
}

// Symmetric PSD square root; tiny negative eigenvalues from rounding are clamped.
Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

bool singular(const Eigen::MatrixXd& cov) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
  const double top = std::max(es.eigenvalues().maxCoeff(), 0.0);
  return es.eigenvalues().minCoeff() <= 1e-12 * std::max(top, 1.0);
}

}  // namespace

FidResult fid(const FeatureSet& real, const FeatureSet& generated) {
  Gaussian a = fit(real), b = fit(generated);
  if (a.mean.size() != b.mean.size()) throw DimensionMismatch();

  FidResult r;
  if (singular(a.cov) || singular(b.cov)) {
    const auto eye = Eigen::MatrixXd::Identity(a.cov.rows(), a.cov.cols());
    a.cov += kFidEpsilon * eye;
    b.cov += kFidEpsilon * eye;
    r.regularized = true;
  }

  const Eigen::MatrixXd ra = sqrt_psd(a.cov);
  Eigen::MatrixXd inner = ra * b.cov * ra;
  inner = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(inner, Eigen::EigenvaluesOnly);
  const double tr_sqrt = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();

  const double value = (a.mean - b.mean).squaredNorm() + a.cov.trace() + b.cov.trace() - 2.0 * tr_sqrt;
  if (!std::isfinite(value)) throw NumericalDivergence("fid");
  r.value = std::max(value, 0.0);
  return r;
}

}  // namespace behgan

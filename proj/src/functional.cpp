#include "dmvfc/functional.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dmvfc/parallel.hpp"
#include "dmvfc/rng.hpp"

namespace dmvfc {

FunctionalInput downsample_signals(const EndpointSignals& s, int target_len,
                                   std::uint64_t seed) {
  const int t = int(s.series.cols());
  if (target_len < 2)
    throw std::invalid_argument("downsample_signals: target_len must be >= 2");
  if (target_len > t)
    throw std::invalid_argument("downsample_signals: target_len " +
                                std::to_string(target_len) + " exceeds T " +
                                std::to_string(t));

  // partial Fisher-Yates: the first target_len slots become the sample
  std::vector<int> idx{};
  idx.resize(std::size_t(t));
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  for (int k = 0; k < target_len; ++k) {
    const int j = k + int(rng.below(std::uint64_t(t - k)));
    std::swap(idx[std::size_t(k)], idx[std::size_t(j)]);
  }
  idx.resize(std::size_t(target_len));
  std::sort(idx.begin(), idx.end());

  FunctionalInput out;
  out.fiber_id = s.fiber_id;
  out.matrix.resize(2, target_len);
  for (int k = 0; k < target_len; ++k)
    out.matrix.col(k) = s.series.col(idx[std::size_t(k)]);
  return out;
}

std::vector<FunctionalInput> downsample_all(const FiberSet& fs, int target_len,
                                            std::uint64_t seed) {
  std::vector<FunctionalInput> out(fs.signals.size());
  parallel_for(std::int64_t(fs.signals.size()), [&](std::int64_t i) {
    const auto& s = fs.signals[std::size_t(i)];
    out[std::size_t(i)] = downsample_signals(
        s, target_len, derive_seed(seed, std::uint64_t(s.fiber_id)));
  });
  return out;
}

PCAModel fit_pca(const std::vector<Eigen::VectorXd>& signals, int n_c) {
  if (n_c < 1) throw std::invalid_argument("fit_pca: n_c must be >= 1");
  if (signals.size() < std::size_t(n_c) + 1)
    throw std::invalid_argument("fit_pca: need at least n_c + 1 signals");
  const Eigen::Index t = signals.front().size();
  const Eigen::Index n = Eigen::Index(signals.size());
  Eigen::MatrixXd x(n, t);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (signals[std::size_t(i)].size() != t)
      throw std::invalid_argument("fit_pca: inconsistent signal lengths");
    x.row(i) = signals[std::size_t(i)].transpose();
  }

  PCAModel model;
  model.mean = x.colwise().mean();
  x.rowwise() -= model.mean.transpose();

  Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double rank_tol =
      double(std::max(n, t)) * 2.220446049250313e-16 * (sv.size() ? sv(0) : 0.0);
  Eigen::Index rank = 0;
  while (rank < sv.size() && sv(rank) > rank_tol) ++rank;
  if (rank < n_c)
    throw std::runtime_error("rank error: data rank " + std::to_string(rank) +
                             " below requested " + std::to_string(n_c) +
                             " components");

  model.components.resize(n_c, t);
  model.explained_variance.resize(n_c);
  for (int c = 0; c < n_c; ++c) {
    Eigen::VectorXd v = svd.matrixV().col(c);
    Eigen::Index peak = 0;
    v.cwiseAbs().maxCoeff(&peak);
    if (v(peak) < 0.0) v = -v;
    model.components.row(c) = v.transpose();
    model.explained_variance(c) = sv(c) * sv(c) / double(n - 1);
  }
  return model;
}

PCAModel fit_pca_pooled(const FiberSet& fs, int n_c) {
  std::vector<Eigen::VectorXd> pool;
  pool.reserve(fs.signals.size() * 2);
  for (const EndpointSignals& s : fs.signals) {
    pool.push_back(s.series.row(0).transpose());
    pool.push_back(s.series.row(1).transpose());
  }
  return fit_pca(pool, n_c);
}

Eigen::VectorXd project_pca(const PCAModel& model, const Eigen::VectorXd& signal) {
  if (signal.size() != model.mean.size())
    throw std::invalid_argument("project_pca: signal length " +
                                std::to_string(signal.size()) +
                                " does not match model length " +
                                std::to_string(model.mean.size()));
  return model.components * (signal - model.mean);
}

Eigen::VectorXd srvf_transform(const Eigen::VectorXd& reduced) {
  if (reduced.size() < 2)
    throw std::invalid_argument("srvf_transform: need at least 2 samples");
  Eigen::VectorXd q(reduced.size() - 1);
  for (Eigen::Index k = 0; k + 1 < reduced.size(); ++k) {
    const double d = reduced(k + 1) - reduced(k);
    q(k) = std::fabs(d) > 1e-12 ? d / std::sqrt(std::fabs(d)) : 0.0;
  }
  return q;
}

FunctionalFeature functional_feature(const EndpointSignals& s, const PCAModel& model) {
  FunctionalFeature f;
  f.end_a = srvf_transform(project_pca(model, s.series.row(0).transpose()));
  f.end_b = srvf_transform(project_pca(model, s.series.row(1).transpose()));
  return f;
}

namespace {

double mean_squared_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).squaredNorm() / double(a.size());
}

}  // namespace

double functional_pseudolabel(const FunctionalFeature& a, const FunctionalFeature& b) {
  const double straight =
      0.5 * (mean_squared_error(a.end_a, b.end_a) + mean_squared_error(a.end_b, b.end_b));
  const double crossed =
      0.5 * (mean_squared_error(a.end_a, b.end_b) + mean_squared_error(a.end_b, b.end_a));
  return std::min(straight, crossed);
}

double functional_pseudolabel(const EndpointSignals& a, const EndpointSignals& b,
                              const PCAModel& model) {
  if (a.series.cols() != model.mean.size() || b.series.cols() != model.mean.size())
    throw std::invalid_argument("functional_pseudolabel: signal length mismatch");
  return functional_pseudolabel(functional_feature(a, model),
                                functional_feature(b, model));
}

Eigen::MatrixXd pairwise_functional(const std::vector<FunctionalFeature>& features) {
  if (features.empty())
    throw std::invalid_argument("pairwise_functional: empty input");
  const std::int64_t n = std::int64_t(features.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  parallel_for(n, [&](std::int64_t i) {
    for (std::int64_t j = i + 1; j < n; ++j)
      m(i, j) = functional_pseudolabel(features[std::size_t(i)],
                                       features[std::size_t(j)]);
  });
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < i; ++j) m(i, j) = m(j, i);
  return m;
}

namespace {

double pearson(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  const Eigen::VectorXd cx = x.array() - x.mean();
  const Eigen::VectorXd cy = y.array() - y.mean();
  const double sxx = cx.squaredNorm(), syy = cy.squaredNorm();
  if (sxx == 0.0 || syy == 0.0)
    throw std::runtime_error("degenerate signal: zero variance in Pearson input");
  return cx.dot(cy) / std::sqrt(sxx * syy);
}

}  // namespace

double signal_pair_correlation(const EndpointSignals& sa, const EndpointSignals& sb) {
  const auto& a = sa.series;
  const auto& b = sb.series;
  if (a.cols() != b.cols())
    throw std::invalid_argument("signal_pair_correlation: signal length mismatch");
  const double straight = 0.5 * (pearson(a.row(0).transpose(), b.row(0).transpose()) +
                                 pearson(a.row(1).transpose(), b.row(1).transpose()));
  const double crossed = 0.5 * (pearson(a.row(0).transpose(), b.row(1).transpose()) +
                                pearson(a.row(1).transpose(), b.row(0).transpose()));
  return std::max(straight, crossed);
}

double cluster_pearson(const std::vector<EndpointSignals>& cluster_signals) {
  if (cluster_signals.size() < 2)
    throw std::invalid_argument("cluster_pearson: need at least 2 fibers");
  double sum = 0.0;
  int pairs = 0;
  for (std::size_t i = 0; i < cluster_signals.size(); ++i)
    for (std::size_t j = i + 1; j < cluster_signals.size(); ++j) {
      sum += signal_pair_correlation(cluster_signals[i], cluster_signals[j]);
      ++pairs;
    }
  return sum / double(pairs);
}

}  // namespace dmvfc

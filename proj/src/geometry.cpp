#include "dmvfc/geometry.hpp"

#include <stdexcept>

#include "dmvfc/parallel.hpp"

namespace dmvfc {

ResampledFiber resample(const Fiber& f, int n_p) {
  if (n_p < 2) throw std::invalid_argument("resample: n_p must be >= 2");
  if (f.points.size() < 2)
    throw std::invalid_argument("resample: fiber needs >= 2 points");

  const std::size_t m = f.points.size();
  std::vector<double> cum(m, 0.0);
  for (std::size_t k = 1; k < m; ++k)
    cum[k] = cum[k - 1] + (f.points[k] - f.points[k - 1]).norm();
  const double total = cum.back();
  if (total <= 0.0)
    throw std::runtime_error("degenerate input: fiber " + std::to_string(f.id) +
                             " has zero arc length");

  ResampledFiber out;
  out.id = f.id;
  out.points.resize(n_p, 3);
  out.points.row(0) = f.points.front().transpose();
  out.points.row(n_p - 1) = f.points.back().transpose();
  std::size_t seg = 0;
  for (int k = 1; k < n_p - 1; ++k) {
    const double target = total * double(k) / double(n_p - 1);
    while (seg + 2 < m && cum[seg + 1] < target) ++seg;
    const double seg_len = cum[seg + 1] - cum[seg];
    const double t = seg_len > 0.0 ? (target - cum[seg]) / seg_len : 0.0;
    out.points.row(k) =
        ((1.0 - t) * f.points[seg] + t * f.points[seg + 1]).transpose();
  }
  return out;
}

std::vector<ResampledFiber> resample_all(const FiberSet& fs, int n_p) {
  std::vector<ResampledFiber> out(fs.fibers.size());
  parallel_for(std::int64_t(fs.fibers.size()), [&](std::int64_t i) {
    out[std::size_t(i)] = resample(fs.fibers[std::size_t(i)], n_p);
  });
  return out;
}

double mdf_distance(const ResampledFiber& a, const ResampledFiber& b) {
  const Eigen::Index n = a.points.rows();
  if (b.points.rows() != n)
    throw std::invalid_argument("mdf_distance: point-count mismatch");
  double direct = 0.0, flipped = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    direct += (a.points.row(k) - b.points.row(k)).norm();
    flipped += (a.points.row(k) - b.points.row(n - 1 - k)).norm();
  }
  return std::min(direct, flipped) / double(n);
}

Eigen::MatrixXd pairwise_mdf(const std::vector<ResampledFiber>& fibers) {
  if (fibers.empty()) throw std::invalid_argument("pairwise_mdf: empty input");
  const std::int64_t n = std::int64_t(fibers.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  parallel_for(n, [&](std::int64_t i) {
    for (std::int64_t j = i + 1; j < n; ++j)
      m(i, j) = mdf_distance(fibers[std::size_t(i)], fibers[std::size_t(j)]);
  });
  // mirror after the parallel fill so each (i, j) is written by one worker
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < i; ++j) m(i, j) = m(j, i);
  return m;
}

double alpha_metric(const std::vector<ResampledFiber>& cluster) {
  if (cluster.empty()) throw std::invalid_argument("alpha_metric: empty cluster");
  const std::size_t n = cluster.size();
  if (n == 1) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      sum += mdf_distance(cluster[i], cluster[j]);
  return sum / (double(n) * double(n - 1) / 2.0);
}

QBModel quickbundles(const std::vector<ResampledFiber>& fibers, double threshold) {
  if (!(threshold > 0.0))
    throw std::invalid_argument("quickbundles: threshold must be > 0");

  QBModel model;
  model.threshold = threshold;
  std::vector<int> counts;

  for (const ResampledFiber& f : fibers) {
    const Eigen::Index n = f.points.rows();
    int best = -1;
    double best_dist = 0.0;
    bool best_flip = false;
    for (std::size_t c = 0; c < model.centroids.size(); ++c) {
      const auto& cp = model.centroids[c].points;
      if (cp.rows() != n)
        throw std::invalid_argument("quickbundles: point-count mismatch");
      double direct = 0.0, flipped = 0.0;
      for (Eigen::Index k = 0; k < n; ++k) {
        direct += (f.points.row(k) - cp.row(k)).norm();
        flipped += (f.points.row(k) - cp.row(n - 1 - k)).norm();
      }
      const bool flip = flipped < direct;
      const double d = std::min(direct, flipped) / double(n);
      if (best < 0 || d < best_dist) {
        best = int(c);
        best_dist = d;
        best_flip = flip;
      }
    }
    if (best >= 0 && best_dist < threshold) {
      Eigen::Matrix<double, Eigen::Dynamic, 3> aligned = f.points;
      if (best_flip) aligned = aligned.colwise().reverse().eval();
      auto& cp = model.centroids[std::size_t(best)].points;
      const double m = double(counts[std::size_t(best)]);
      cp = (cp * m + aligned) / (m + 1.0);
      counts[std::size_t(best)] += 1;
      model.member_ids[std::size_t(best)].push_back(f.id);
    } else {
      ResampledFiber centroid;
      centroid.id = std::int64_t(model.centroids.size());
      centroid.points = f.points;
      model.centroids.push_back(std::move(centroid));
      counts.push_back(1);
      model.member_ids.push_back({f.id});
    }
  }
  return model;
}

}  // namespace dmvfc

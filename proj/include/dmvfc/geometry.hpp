#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "dmvfc/fiberset.hpp"

namespace dmvfc {

struct ResampledFiber {
  std::int64_t id = 0;
  // n_p rows of (x, y, z)
  Eigen::Matrix<double, Eigen::Dynamic, 3> points;
};

// Arc-length resampling to n_p equally spaced positions on the piecewise
// linear curve; first/last output points equal the input endpoints.
ResampledFiber resample(const Fiber& f, int n_p);
std::vector<ResampledFiber> resample_all(const FiberSet& fs, int n_p);

// Minimum average direct-flip distance: min over fiber orientation reversal
// of the mean pointwise Euclidean distance.
double mdf_distance(const ResampledFiber& a, const ResampledFiber& b);

Eigen::MatrixXd pairwise_mdf(const std::vector<ResampledFiber>& fibers);

// Mean pairwise MDF within a cluster; 0 for singletons.
double alpha_metric(const std::vector<ResampledFiber>& cluster);

struct QBModel {
  double threshold = 0.0;
  std::vector<ResampledFiber> centroids;
  std::vector<std::vector<std::int64_t>> member_ids;
};

// Single-pass incremental QuickBundles. A fiber joins the nearest centroid
// when its MDF is below threshold (flipped to match the centroid orientation
// when the flipped distance was the minimum) and updates that centroid as the
// running mean; otherwise it seeds a new centroid.
QBModel quickbundles(const std::vector<ResampledFiber>& fibers, double threshold);

}  // namespace dmvfc

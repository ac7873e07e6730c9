#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "dmvfc/fiberset.hpp"

namespace dmvfc {

struct FunctionalInput {
  std::int64_t fiber_id = 0;
  Eigen::Matrix2Xd matrix;  // downsampled endpoint signals, 2 x target_len
};

struct PCAModel {
  Eigen::VectorXd mean;                // length T
  Eigen::MatrixXd components;          // n_c x T, rows orthonormal
  Eigen::VectorXd explained_variance;  // length n_c, non-increasing
};

// Per-endpoint functional signature: SRVF of the PCA projection. Computing
// these once per fiber makes pairwise pseudo-labels O(n_c) per pair.
struct FunctionalFeature {
  Eigen::VectorXd end_a, end_b;  // length n_c - 1
};

// Selects one sorted random index subset (shared by both rows) of size
// target_len and keeps those columns.
FunctionalInput downsample_signals(const EndpointSignals& s, int target_len,
                                   std::uint64_t seed);

// Per-fiber subsets drawn from fiber-id-derived sub-seeds, so a fiber keeps
// its subset under reordering.
std::vector<FunctionalInput> downsample_all(const FiberSet& fs, int target_len,
                                            std::uint64_t seed);

PCAModel fit_pca(const std::vector<Eigen::VectorXd>& signals, int n_c);

// Pools both endpoint rows of every fiber into one training corpus.
PCAModel fit_pca_pooled(const FiberSet& fs, int n_c);

Eigen::VectorXd project_pca(const PCAModel& model, const Eigen::VectorXd& signal);

// Square-root velocity transform of a scalar curve on a unit-spaced grid.
Eigen::VectorXd srvf_transform(const Eigen::VectorXd& reduced);

FunctionalFeature functional_feature(const EndpointSignals& s, const PCAModel& model);

// Functional pseudo-label: min over the two endpoint pairings of the mean MSE
// between matched per-endpoint signatures.
double functional_pseudolabel(const FunctionalFeature& a, const FunctionalFeature& b);
double functional_pseudolabel(const EndpointSignals& a, const EndpointSignals& b,
                              const PCAModel& model);

Eigen::MatrixXd pairwise_functional(const std::vector<FunctionalFeature>& features);

// Best-endpoint-pairing mean Pearson correlation between two fibers' raw
// endpoint signals.
double signal_pair_correlation(const EndpointSignals& a, const EndpointSignals& b);

// Mean of signal_pair_correlation over all fiber pairs in the cluster.
double cluster_pearson(const std::vector<EndpointSignals>& cluster_signals);

}  // namespace dmvfc

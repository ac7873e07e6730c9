#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dmvfc/fiberset.hpp"
#include "dmvfc/geometry.hpp"
#include "dmvfc/training.hpp"

namespace dmvfc {

// Which view's soft assignment drives the final labels. `geometric` alone
// reproduces a single-view deep-clustering baseline.
enum class PredictView { fused, geometric, functional };

PredictView predict_view_from_name(const std::string& name);
std::string predict_view_name(PredictView v);

struct ClusterPrediction {
  std::vector<int> labels;                    // argmax of fused_q, ties -> lower index
  Eigen::MatrixXd fused_q;                    // N x K, row-stochastic
  std::array<Eigen::MatrixXd, 2> per_view_q;  // geometric, functional
};

struct EvalReport {
  // Indexed by cluster; Pearson is absent for clusters with < 2 members.
  std::vector<std::optional<double>> per_cluster_pearson;
  std::vector<double> per_cluster_alpha;  // mm; 0 for singletons
  std::vector<int> cluster_sizes;
  // Pearson mean covers multi-member clusters only; alpha mean covers every
  // non-empty cluster (singletons contribute 0).
  std::optional<double> mean_pearson;
  std::optional<double> mean_alpha;
  std::optional<double> ari;  // present when the fiberset carries true labels
  std::optional<double> nmi;
};

// Network inputs in fiber order: resampled polylines (n_points x 3) and
// downsampled endpoint signals (2 x target_len).
std::vector<Eigen::MatrixXd> geometric_inputs(const FiberSet& fs, int n_points);
std::vector<Eigen::MatrixXd> functional_inputs(const FiberSet& fs, int target_len,
                                               std::uint64_t seed);

// Row argmax of a soft assignment; equal maxima resolve to the lower index.
std::vector<int> labels_from_assignment(const Eigen::MatrixXd& q);

// Soft-assigns every fiber in both views and fuses by probability averaging.
// `seed` drives the inference-time signal downsampling only.
ClusterPrediction predict(const ViewModel& geo, const ViewModel& func,
                          const FiberSet& fs, PredictView view = PredictView::fused,
                          std::uint64_t seed = 0);

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);
double normalized_mutual_information(const std::vector<int>& a,
                                     const std::vector<int>& b);

// Per-cluster alpha over fibers resampled to n_points, per-cluster Pearson over
// raw endpoint signals, plus agreement scores against fs.true_labels if present.
EvalReport evaluate_labels(const std::vector<int>& labels, const FiberSet& fs,
                           int n_points);
EvalReport evaluate(const ClusterPrediction& pred, const FiberSet& fs, int n_points);

// Cluster index per fiber, in fiberset order, from a QuickBundles model.
std::vector<int> labels_from_quickbundles(const QBModel& model, const FiberSet& fs);

struct ComparisonRow {
  std::string method;
  std::string bundle;
  std::optional<double> mean_pearson;
  std::optional<double> mean_alpha;
  std::optional<double> ari;
  std::optional<double> nmi;
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;
  std::string to_csv() const;   // drops ari/nmi columns when no row has them
  std::string to_text() const;  // aligned columns for terminals
};

// One row per named method; every label vector must cover the same fiberset.
ComparisonTable compare_methods(
    const FiberSet& fs,
    const std::vector<std::pair<std::string, std::vector<int>>>& methods,
    int n_points);

// labels.txt (one integer per line) and fused_q.txt (one row per fiber).
void save_prediction(const ClusterPrediction& pred, const std::filesystem::path& dir);
std::vector<int> load_labels(const std::filesystem::path& file);

}  // namespace dmvfc

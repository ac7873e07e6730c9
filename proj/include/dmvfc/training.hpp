#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "dmvfc/encoder.hpp"

namespace dmvfc {

struct PairSample {
  int i = 0, j = 0;       // distinct fiber indices
  double s1 = 0, s2 = 0;  // geometric / functional pseudo-labels
};

struct TrainConfig {
  double pretrain_lr = 3e-3;
  int pretrain_epochs = 450;
  int lr_decay_epochs = 200;     // step the pretrain lr every this many epochs
  double lr_decay_factor = 0.1;
  double finetune_lr = 1e-5;
  int finetune_epochs = 20;
  int batch_size = 1024;
  double gamma = 0.1;            // weight of the clustering term
  int k_clusters = 2;
  int pairs_per_fiber = 10;      // pairs drawn per epoch = this * n_fibers
  std::uint64_t seed = 0;

  void validate() const;
};

struct ViewModel {
  Encoder encoder;
  Eigen::MatrixXd centroids;  // K x embedding_dim, empty until initialized
};

struct TrainLogRow {
  int epoch = 0;
  std::string stage;  // "pretrain" | "finetune"
  std::string view;   // "geometric" | "functional"
  double l_s = 0, l_c = 0, l_f = 0;
};

std::vector<std::pair<int, int>> sample_pairs(int n_fibers, int n_pairs,
                                              std::uint64_t seed);

// Adaptive-moment gradient descent with bias correction.
class Adam {
 public:
  Adam(Eigen::Index n, double lr);
  void set_lr(double lr) { lr_ = lr; }
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);

 private:
  double lr_;
  int t_ = 0;
  Eigen::VectorXd m_, v_;
};

// Student's t soft assignment (row-stochastic N x K).
Eigen::MatrixXd soft_assign(const Eigen::MatrixXd& z, const Eigen::MatrixXd& centroids);

// Squared-and-mass-renormalized sharpening of q.
Eigen::MatrixXd target_distribution(const Eigen::MatrixXd& q);

double kl_clustering_loss(const Eigen::MatrixXd& p, const Eigen::MatrixXd& q);

// k-means with spread-out probabilistic seeding; several deterministic
// restarts, lowest within-cluster SSE wins.
Eigen::MatrixXd init_centroids(const Eigen::MatrixXd& points, int k, std::uint64_t seed);

// Cluster indices are arbitrary per view after independent initialization, but
// fused inference and the collaborative KL terms read index j as the same
// cluster in both views. Returns perm such that relabeling the second view's
// cluster j as perm[j] maximizes hard-assignment agreement with the first view
// (exhaustive for K <= 8, greedy beyond).
std::vector<int> align_cluster_indices(const Eigen::MatrixXd& q_ref,
                                       const Eigen::MatrixXd& q_other);

// Reorders centroid rows so that row perm[j] moves to row j's slot, making the
// second view's soft assignments use the first view's cluster indexing.
Eigen::MatrixXd apply_cluster_permutation(const Eigen::MatrixXd& centroids,
                                          const std::vector<int>& perm);

struct LossParts {
  double l_s = 0, l_c = 0;
  double total(double gamma) const { return l_s + gamma * l_c; }
};

// Loss and gradients for one view over one batch: pairwise regression over
// `pairs` plus gamma-weighted KL of the batch rows against frozen `targets`.
// Both training stages and the finite-difference tests go through here.
LossParts view_loss_grad(const Encoder& enc, const Eigen::MatrixXd& centroids,
                         const std::vector<Eigen::MatrixXd>& inputs,
                         const std::vector<PairSample>& pairs, int view_index,
                         const std::vector<int>& kl_rows,
                         const Eigen::MatrixXd& targets, double gamma,
                         Eigen::VectorXd* grad_params,
                         Eigen::MatrixXd* grad_centroids);

// Siamese pretraining: per-pair squared regression of embedding distance onto
// the pseudo-label matrix entry.
void pretrain_view(Encoder& enc, const std::vector<Eigen::MatrixXd>& inputs,
                   const Eigen::MatrixXd& labels, int view_index,
                   const TrainConfig& cfg, std::vector<TrainLogRow>* log);

struct FinetuneEpochInfo {
  int epoch = 0;
  int anchor_view = 0;  // 1 or 2
  double l_s[2] = {0, 0}, l_c[2] = {0, 0}, l_f[2] = {0, 0};
};
using FinetuneObserver = std::function<void(const FinetuneEpochInfo&)>;

// Collaborative fine-tuning: per epoch, soft assignments and targets are
// computed for both views; odd epochs anchor on view 1's targets, even on
// view 2's; encoders and centroids both receive gradients.
void finetune_collaborative(ViewModel& vm1, ViewModel& vm2,
                            const std::vector<Eigen::MatrixXd>& inputs1,
                            const std::vector<Eigen::MatrixXd>& inputs2,
                            const Eigen::MatrixXd& labels1,
                            const Eigen::MatrixXd& labels2,
                            const TrainConfig& cfg, std::vector<TrainLogRow>* log,
                            const FinetuneObserver& observer = {});

void save_centroids(const Eigen::MatrixXd& centroids, const std::filesystem::path& file);
Eigen::MatrixXd load_centroids(const std::filesystem::path& file);

}  // namespace dmvfc

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace dmvfc {

struct EncoderConfig {
  enum class View { geometric, functional };
  View view = View::geometric;
  int input_channels = 3;
  int num_points = 25;
  int knn_k = 5;
  std::vector<int> layer_widths{64, 64, 128};
  int embedding_dim = 10;

  void validate() const;
  bool operator==(const EncoderConfig&) const = default;
};

struct EmbeddingBatch {
  Eigen::MatrixXd matrix;  // B x embedding_dim
  std::vector<std::int64_t> fiber_ids;
};

// Everything the backward pass needs from one forward evaluation. The kNN
// graph and all argmax choices are treated as constants of the trace.
struct EncoderTrace {
  int batch = 0;
  std::vector<Eigen::MatrixXi> knn;         // per block: (B*P) x k global rows
  std::vector<Eigen::MatrixXd> edges;       // per block: (B*P*k) x 2C_in
  std::vector<Eigen::MatrixXd> preact;      // per block: (B*P*k) x C_out
  std::vector<Eigen::MatrixXi> agg_argmax;  // per block: (B*P) x C_out, in [0,k)
  Eigen::MatrixXd pooled;                   // B x C_last
  Eigen::MatrixXi pool_argmax;              // B x C_last, in [0,P)
};

// Edge-convolution point-cloud encoder. Each block connects every point to
// its k nearest neighbors in the current feature space, maps the edge feature
// [x_p, x_n - x_p] through an affine layer plus leaky rectifier (slope 0.2),
// and max-aggregates over neighbors; a global max-pool and affine head
// produce the embedding. Neighbors are recomputed per block.
class Encoder {
 public:
  Encoder(const EncoderConfig& cfg, std::uint64_t seed);

  const EncoderConfig& config() const { return cfg_; }

  // batch: one P x C matrix per fiber. Fills *trace when given.
  Eigen::MatrixXd forward(const std::vector<Eigen::MatrixXd>& batch,
                          EncoderTrace* trace = nullptr) const;

  EmbeddingBatch embed(const std::vector<Eigen::MatrixXd>& batch,
                       const std::vector<std::int64_t>& fiber_ids) const;

  // Accumulates dL/dparams into grad (flat layout, see parameters()).
  void backward(const EncoderTrace& trace, const Eigen::MatrixXd& dz,
                Eigen::VectorXd& grad) const;

  // Flat layout: per block W row-major then bias, then head W row-major and
  // head bias. Initialization draws follow the same order.
  Eigen::Index parameter_count() const;
  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::VectorXd& flat);

  void save(const std::filesystem::path& file) const;
  static Encoder load(const std::filesystem::path& file);

 private:
  explicit Encoder(const EncoderConfig& cfg);

  EncoderConfig cfg_;
  std::vector<Eigen::MatrixXd> block_w_;  // 2C_in x C_out
  std::vector<Eigen::VectorXd> block_b_;
  Eigen::MatrixXd head_w_;  // C_last x embedding_dim
  Eigen::VectorXd head_b_;
};

double pairwise_embedding_distance(const EmbeddingBatch& e, int i, int j);

std::string view_name(EncoderConfig::View v);
EncoderConfig::View view_from_name(const std::string& name);

}  // namespace dmvfc

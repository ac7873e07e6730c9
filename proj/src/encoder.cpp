#include "dmvfc/encoder.hpp"

#include <fstream>
#include <stdexcept>

#include "dmvfc/rng.hpp"
#include "dmvfc/textio.hpp"

namespace dmvfc {

namespace {

constexpr double kLeakySlope = 0.2;

double leaky(double x) { return x > 0.0 ? x : kLeakySlope * x; }
double leaky_grad(double x) { return x > 0.0 ? 1.0 : kLeakySlope; }

}  // namespace

void EncoderConfig::validate() const {
  if (input_channels < 1)
    throw std::invalid_argument("encoder config: input_channels must be >= 1");
  if (num_points < 2)
    throw std::invalid_argument("encoder config: num_points must be >= 2");
  if (knn_k < 1 || knn_k >= num_points)
    throw std::invalid_argument("encoder config: need 1 <= knn_k < num_points");
  if (layer_widths.empty())
    throw std::invalid_argument("encoder config: layer_widths must be nonempty");
  for (int w : layer_widths)
    if (w < 1) throw std::invalid_argument("encoder config: layer widths must be >= 1");
  if (embedding_dim < 2)
    throw std::invalid_argument("encoder config: embedding_dim must be >= 2");
}

Encoder::Encoder(const EncoderConfig& cfg) : cfg_(cfg) { cfg_.validate(); }

Encoder::Encoder(const EncoderConfig& cfg, std::uint64_t seed) : Encoder(cfg) {
  Rng rng(seed);
  auto glorot = [&rng](Eigen::MatrixXd& w) {
    const double limit = std::sqrt(6.0 / double(w.rows() + w.cols()));
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c)
        w(r, c) = rng.uniform(-limit, limit);
  };

  int c_in = cfg_.input_channels;
  for (int width : cfg_.layer_widths) {
    Eigen::MatrixXd w(2 * c_in, width);
    glorot(w);
    block_w_.push_back(std::move(w));
    block_b_.push_back(Eigen::VectorXd::Zero(width));
    c_in = width;
  }
  head_w_.resize(c_in, cfg_.embedding_dim);
  glorot(head_w_);
  head_b_ = Eigen::VectorXd::Zero(cfg_.embedding_dim);
}

Eigen::MatrixXd Encoder::forward(const std::vector<Eigen::MatrixXd>& batch,
                                 EncoderTrace* trace) const {
  const int b_count = int(batch.size());
  if (b_count == 0) throw std::invalid_argument("encoder: empty batch");
  const int p = cfg_.num_points;
  const int k = cfg_.knn_k;
  for (const Eigen::MatrixXd& m : batch)
    if (m.rows() != p || m.cols() != cfg_.input_channels)
      throw std::invalid_argument(
          "encoder: input shape " + std::to_string(m.rows()) + "x" +
          std::to_string(m.cols()) + " does not match config " +
          std::to_string(p) + "x" + std::to_string(cfg_.input_channels));

  if (trace) {
    *trace = EncoderTrace{};
    trace->batch = b_count;
  }

  // Each fiber is evaluated through per-fiber matrix products so that a given
  // input yields bit-identical embeddings regardless of batch position or
  // batch composition (batched GEMM rounding varies with row placement).
  Eigen::MatrixXd x(b_count * p, cfg_.input_channels);
  for (int f = 0; f < b_count; ++f) x.middleRows(f * p, p) = batch[std::size_t(f)];

  for (std::size_t blk = 0; blk < block_w_.size(); ++blk) {
    const int c_in = int(x.cols());
    const int c_out = int(block_w_[blk].cols());

    Eigen::MatrixXi knn(b_count * p, k);
    Eigen::MatrixXd edges(b_count * p * k, 2 * c_in);
    Eigen::MatrixXd preact(b_count * p * k, c_out);
    Eigen::MatrixXd y(b_count * p, c_out);
    Eigen::MatrixXi argmax(b_count * p, c_out);

    for (int f = 0; f < b_count; ++f) {
      const auto xf = x.middleRows(f * p, p);

      // kNN in the current feature space; ties resolve to the lower point
      // index so the graph is deterministic
      for (int i = 0; i < p; ++i) {
        std::vector<std::pair<double, int>> dist;
        dist.reserve(std::size_t(p) - 1);
        for (int j = 0; j < p; ++j) {
          if (j == i) continue;
          dist.emplace_back((xf.row(i) - xf.row(j)).squaredNorm(), j);
        }
        std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
        for (int a = 0; a < k; ++a)
          knn(f * p + i, a) = f * p + dist[std::size_t(a)].second;
      }

      Eigen::MatrixXd edge_f(p * k, 2 * c_in);
      for (int i = 0; i < p; ++i)
        for (int a = 0; a < k; ++a) {
          edge_f.block(i * k + a, 0, 1, c_in) = xf.row(i);
          edge_f.block(i * k + a, c_in, 1, c_in) =
              x.row(knn(f * p + i, a)) - xf.row(i);
        }
      Eigen::MatrixXd pre_f = edge_f * block_w_[blk];
      pre_f.rowwise() += block_b_[blk].transpose();

      for (int i = 0; i < p; ++i)
        for (int c = 0; c < c_out; ++c) {
          double best = leaky(pre_f(i * k, c));
          int best_a = 0;
          for (int a = 1; a < k; ++a) {
            const double v = leaky(pre_f(i * k + a, c));
            if (v > best) {
              best = v;
              best_a = a;
            }
          }
          y(f * p + i, c) = best;
          argmax(f * p + i, c) = best_a;
        }
      edges.middleRows(f * p * k, p * k) = edge_f;
      preact.middleRows(f * p * k, p * k) = pre_f;
    }

    if (trace) {
      trace->knn.push_back(std::move(knn));
      trace->edges.push_back(std::move(edges));
      trace->preact.push_back(std::move(preact));
      trace->agg_argmax.push_back(std::move(argmax));
    }
    x = std::move(y);
  }

  const int c_last = int(x.cols());
  Eigen::MatrixXd pooled(b_count, c_last);
  Eigen::MatrixXi pool_argmax(b_count, c_last);
  Eigen::MatrixXd z(b_count, cfg_.embedding_dim);
  for (int f = 0; f < b_count; ++f) {
    for (int c = 0; c < c_last; ++c) {
      double best = x(f * p, c);
      int best_p = 0;
      for (int i = 1; i < p; ++i)
        if (x(f * p + i, c) > best) {
          best = x(f * p + i, c);
          best_p = i;
        }
      pooled(f, c) = best;
      pool_argmax(f, c) = best_p;
    }
    z.row(f) = pooled.row(f) * head_w_ + head_b_.transpose();
  }
  if (trace) {
    trace->pooled = std::move(pooled);
    trace->pool_argmax = std::move(pool_argmax);
  }
  if (!z.allFinite()) throw std::runtime_error("model error: non-finite embedding");
  return z;
}

EmbeddingBatch Encoder::embed(const std::vector<Eigen::MatrixXd>& batch,
                              const std::vector<std::int64_t>& fiber_ids) const {
  if (fiber_ids.size() != batch.size())
    throw std::invalid_argument("encoder: id count does not match batch");
  EmbeddingBatch out;
  out.matrix = forward(batch, nullptr);
  out.fiber_ids = fiber_ids;
  return out;
}

void Encoder::backward(const EncoderTrace& trace, const Eigen::MatrixXd& dz,
                       Eigen::VectorXd& grad) const {
  const int b_count = trace.batch;
  const int p = cfg_.num_points;
  const int k = cfg_.knn_k;
  if (dz.rows() != b_count || dz.cols() != cfg_.embedding_dim)
    throw std::invalid_argument("encoder backward: dz shape mismatch");
  if (grad.size() != parameter_count())
    throw std::invalid_argument("encoder backward: grad size mismatch");

  // flat offsets mirror parameters()
  std::vector<Eigen::Index> w_off(block_w_.size()), b_off(block_w_.size());
  Eigen::Index off = 0;
  for (std::size_t blk = 0; blk < block_w_.size(); ++blk) {
    w_off[blk] = off;
    off += block_w_[blk].size();
    b_off[blk] = off;
    off += block_b_[blk].size();
  }
  const Eigen::Index head_w_off = off;
  const Eigen::Index head_b_off = off + head_w_.size();

  // head
  Eigen::MatrixXd d_head_w = trace.pooled.transpose() * dz;
  Eigen::VectorXd d_head_b = dz.colwise().sum().transpose();
  for (Eigen::Index r = 0; r < head_w_.rows(); ++r)
    for (Eigen::Index c = 0; c < head_w_.cols(); ++c)
      grad(head_w_off + r * head_w_.cols() + c) += d_head_w(r, c);
  grad.segment(head_b_off, head_b_.size()) += d_head_b;

  Eigen::MatrixXd d_pooled = dz * head_w_.transpose();  // B x C_last

  // un-pool into per-point feature gradients
  const int c_last = int(head_w_.rows());
  Eigen::MatrixXd dy = Eigen::MatrixXd::Zero(b_count * p, c_last);
  for (int f = 0; f < b_count; ++f)
    for (int c = 0; c < c_last; ++c)
      dy(f * p + trace.pool_argmax(f, c), c) += d_pooled(f, c);

  for (int blk = int(block_w_.size()) - 1; blk >= 0; --blk) {
    const Eigen::MatrixXd& preact = trace.preact[std::size_t(blk)];
    const Eigen::MatrixXi& argmax = trace.agg_argmax[std::size_t(blk)];
    const Eigen::MatrixXi& knn = trace.knn[std::size_t(blk)];
    const int c_out = int(block_w_[std::size_t(blk)].cols());
    const int c_in = int(block_w_[std::size_t(blk)].rows()) / 2;

    // route dy through the neighbor argmax and the rectifier
    Eigen::MatrixXd da = Eigen::MatrixXd::Zero(preact.rows(), c_out);
    for (Eigen::Index row = 0; row < Eigen::Index(b_count) * p; ++row)
      for (int c = 0; c < c_out; ++c) {
        const Eigen::Index edge = row * k + argmax(row, c);
        da(edge, c) = dy(row, c) * leaky_grad(preact(edge, c));
      }

    Eigen::MatrixXd dw = trace.edges[std::size_t(blk)].transpose() * da;
    Eigen::VectorXd db = da.colwise().sum().transpose();
    for (Eigen::Index r = 0; r < dw.rows(); ++r)
      for (Eigen::Index c = 0; c < dw.cols(); ++c)
        grad(w_off[std::size_t(blk)] + r * dw.cols() + c) += dw(r, c);
    grad.segment(b_off[std::size_t(blk)], db.size()) += db;

    if (blk == 0) break;  // input gradients are not needed

    Eigen::MatrixXd de = da * block_w_[std::size_t(blk)].transpose();
    Eigen::MatrixXd dx = Eigen::MatrixXd::Zero(b_count * p, c_in);
    for (Eigen::Index row = 0; row < Eigen::Index(b_count) * p; ++row)
      for (int a = 0; a < k; ++a) {
        const Eigen::Index edge = row * k + a;
        dx.row(row) += de.block(edge, 0, 1, c_in) - de.block(edge, c_in, 1, c_in);
        dx.row(knn(row, a)) += de.block(edge, c_in, 1, c_in);
      }
    dy = std::move(dx);
  }
}

Eigen::Index Encoder::parameter_count() const {
  Eigen::Index n = 0;
  for (std::size_t blk = 0; blk < block_w_.size(); ++blk)
    n += block_w_[blk].size() + block_b_[blk].size();
  return n + head_w_.size() + head_b_.size();
}

Eigen::VectorXd Encoder::parameters() const {
  Eigen::VectorXd flat(parameter_count());
  Eigen::Index off = 0;
  auto pack_matrix = [&](const Eigen::MatrixXd& w) {
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) flat(off++) = w(r, c);
  };
  for (std::size_t blk = 0; blk < block_w_.size(); ++blk) {
    pack_matrix(block_w_[blk]);
    flat.segment(off, block_b_[blk].size()) = block_b_[blk];
    off += block_b_[blk].size();
  }
  pack_matrix(head_w_);
  flat.segment(off, head_b_.size()) = head_b_;
  return flat;
}

void Encoder::set_parameters(const Eigen::VectorXd& flat) {
  if (flat.size() != parameter_count())
    throw std::invalid_argument("encoder: parameter vector size mismatch");
  Eigen::Index off = 0;
  auto unpack_matrix = [&](Eigen::MatrixXd& w) {
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = flat(off++);
  };
  for (std::size_t blk = 0; blk < block_w_.size(); ++blk) {
    unpack_matrix(block_w_[blk]);
    block_b_[blk] = flat.segment(off, block_b_[blk].size());
    off += block_b_[blk].size();
  }
  unpack_matrix(head_w_);
  head_b_ = flat.segment(off, head_b_.size());
}

void Encoder::save(const std::filesystem::path& file) const {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << "dmvfc-encoder-v1\n";
  out << "view " << view_name(cfg_.view) << "\n";
  out << "input_channels " << cfg_.input_channels << "\n";
  out << "num_points " << cfg_.num_points << "\n";
  out << "knn_k " << cfg_.knn_k << "\n";
  out << "layer_widths " << cfg_.layer_widths.size();
  for (int w : cfg_.layer_widths) out << " " << w;
  out << "\n";
  out << "embedding_dim " << cfg_.embedding_dim << "\n";
  const Eigen::VectorXd flat = parameters();
  out << "params " << flat.size() << "\n";
  for (Eigen::Index i = 0; i < flat.size(); ++i)
    out << format_double(flat(i)) << "\n";
}

Encoder Encoder::load(const std::filesystem::path& file) {
  TextReader in(file.string(), file.filename().string());
  in.expect_literal("dmvfc-encoder-v1");
  EncoderConfig cfg;
  in.expect_literal("view");
  cfg.view = view_from_name(in.expect_token("view name"));
  in.expect_literal("input_channels");
  cfg.input_channels = int(in.expect_int("input_channels"));
  in.expect_literal("num_points");
  cfg.num_points = int(in.expect_int("num_points"));
  in.expect_literal("knn_k");
  cfg.knn_k = int(in.expect_int("knn_k"));
  in.expect_literal("layer_widths");
  const long long n_widths = in.expect_int("layer count");
  cfg.layer_widths.clear();
  for (long long i = 0; i < n_widths; ++i)
    cfg.layer_widths.push_back(int(in.expect_int("layer width")));
  in.expect_literal("embedding_dim");
  cfg.embedding_dim = int(in.expect_int("embedding_dim"));

  Encoder enc(cfg);
  int c_in = cfg.input_channels;
  for (int width : cfg.layer_widths) {
    enc.block_w_.push_back(Eigen::MatrixXd::Zero(2 * c_in, width));
    enc.block_b_.push_back(Eigen::VectorXd::Zero(width));
    c_in = width;
  }
  enc.head_w_ = Eigen::MatrixXd::Zero(c_in, cfg.embedding_dim);
  enc.head_b_ = Eigen::VectorXd::Zero(cfg.embedding_dim);

  in.expect_literal("params");
  const long long n_params = in.expect_int("parameter count");
  if (n_params != enc.parameter_count())
    throw std::runtime_error(
        "model error: " + file.string() + " holds " + std::to_string(n_params) +
        " parameters, config needs " + std::to_string(enc.parameter_count()));
  Eigen::VectorXd flat(n_params);
  for (long long i = 0; i < n_params; ++i)
    flat(i) = in.expect_double("parameter value");
  in.expect_end();
  enc.set_parameters(flat);
  return enc;
}

double pairwise_embedding_distance(const EmbeddingBatch& e, int i, int j) {
  if (i < 0 || j < 0 || i >= e.matrix.rows() || j >= e.matrix.rows())
    throw std::invalid_argument("pairwise_embedding_distance: index out of range");
  return (e.matrix.row(i) - e.matrix.row(j)).norm();
}

std::string view_name(EncoderConfig::View v) {
  return v == EncoderConfig::View::geometric ? "geometric" : "functional";
}

EncoderConfig::View view_from_name(const std::string& name) {
  if (name == "geometric") return EncoderConfig::View::geometric;
  if (name == "functional") return EncoderConfig::View::functional;
  throw std::invalid_argument("unknown view '" + name + "'");
}

}  // namespace dmvfc

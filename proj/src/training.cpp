#include "dmvfc/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>

#include "dmvfc/rng.hpp"
#include "dmvfc/textio.hpp"

namespace dmvfc {

void TrainConfig::validate() const {
  if (pretrain_lr <= 0 || finetune_lr <= 0 || lr_decay_factor <= 0)
    throw std::invalid_argument("train config: rates must be positive");
  if (pretrain_epochs < 0 || finetune_epochs < 0)
    throw std::invalid_argument("train config: epoch counts must be >= 0");
  if (lr_decay_epochs < 1)
    throw std::invalid_argument("train config: lr_decay_epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be >= 1");
  if (gamma < 0) throw std::invalid_argument("train config: gamma must be >= 0");
  if (k_clusters < 2) throw std::invalid_argument("train config: k_clusters must be >= 2");
  if (pairs_per_fiber < 1)
    throw std::invalid_argument("train config: pairs_per_fiber must be >= 1");
}

std::vector<std::pair<int, int>> sample_pairs(int n_fibers, int n_pairs,
                                              std::uint64_t seed) {
  if (n_fibers < 2)
    throw std::invalid_argument("sample_pairs: need at least 2 fibers");
  if (n_pairs < 0) throw std::invalid_argument("sample_pairs: negative count");
  Rng rng(seed);
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(std::size_t(n_pairs));
  for (int p = 0; p < n_pairs; ++p) {
    const int i = int(rng.below(std::uint64_t(n_fibers)));
    int j = int(rng.below(std::uint64_t(n_fibers) - 1));
    if (j >= i) ++j;
    pairs.emplace_back(i, j);
  }
  return pairs;
}

Adam::Adam(Eigen::Index n, double lr)
    : lr_(lr), m_(Eigen::VectorXd::Zero(n)), v_(Eigen::VectorXd::Zero(n)) {}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  ++t_;
  m_ = beta1 * m_ + (1.0 - beta1) * grad;
  v_ = beta2 * v_ + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double corr1 = 1.0 - std::pow(beta1, t_);
  const double corr2 = 1.0 - std::pow(beta2, t_);
  params -= (lr_ / corr1) *
            (m_.array() / ((v_ / corr2).array().sqrt() + eps)).matrix();
}

Eigen::MatrixXd soft_assign(const Eigen::MatrixXd& z, const Eigen::MatrixXd& centroids) {
  if (z.cols() != centroids.cols())
    throw std::invalid_argument("soft_assign: dimension mismatch");
  const Eigen::Index n = z.rows(), k = centroids.rows();
  Eigen::MatrixXd q(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    double denom = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      q(i, j) = 1.0 / (1.0 + (z.row(i) - centroids.row(j)).squaredNorm());
      denom += q(i, j);
    }
    q.row(i) /= denom;
  }
  return q;
}

Eigen::MatrixXd target_distribution(const Eigen::MatrixXd& q) {
  const Eigen::VectorXd f = q.colwise().sum().transpose();
  for (Eigen::Index j = 0; j < f.size(); ++j)
    if (f(j) <= 0.0)
      throw std::runtime_error("degenerate-cluster error: cluster " +
                               std::to_string(j) +
                               " has zero soft mass; consider a smaller K");
  Eigen::MatrixXd p(q.rows(), q.cols());
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    double denom = 0.0;
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
      p(i, j) = q(i, j) * q(i, j) / f(j);
      denom += p(i, j);
    }
    p.row(i) /= denom;
  }
  return p;
}

double kl_clustering_loss(const Eigen::MatrixXd& p, const Eigen::MatrixXd& q) {
  if (p.rows() != q.rows() || p.cols() != q.cols())
    throw std::invalid_argument("kl_clustering_loss: shape mismatch");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      if (p(i, j) <= 0.0) continue;
      if (q(i, j) <= 0.0)
        throw std::runtime_error("infinite-loss error: q is zero where p > 0");
      sum += p(i, j) * std::log(p(i, j) / q(i, j));
    }
  return sum;
}

namespace {

// One restart of spread-out probabilistic seeding plus Lloyd iterations.
// Returns the within-cluster SSE.
double kmeans_once(const Eigen::MatrixXd& x, int k, Rng& rng,
                   Eigen::MatrixXd& centroids) {
  const Eigen::Index n = x.rows();

  std::vector<Eigen::Index> chosen;
  chosen.push_back(Eigen::Index(rng.below(std::uint64_t(n))));
  Eigen::VectorXd d2 = (x.rowwise() - x.row(chosen[0])).rowwise().squaredNorm();
  while (Eigen::Index(chosen.size()) < k) {
    const double total = d2.sum();
    Eigen::Index pick = -1;
    if (total > 0.0) {
      double r = rng.uniform() * total;
      for (Eigen::Index i = 0; i < n; ++i) {
        r -= d2(i);
        if (r <= 0.0) {
          pick = i;
          break;
        }
      }
      if (pick < 0) pick = n - 1;
    } else {
      // all remaining points coincide with chosen centers; take the first
      // index not yet used so the requested k is still honored
      std::set<Eigen::Index> used(chosen.begin(), chosen.end());
      for (Eigen::Index i = 0; i < n; ++i)
        if (!used.count(i)) {
          pick = i;
          break;
        }
      if (pick < 0) pick = Eigen::Index(rng.below(std::uint64_t(n)));
    }
    chosen.push_back(pick);
    d2 = d2.cwiseMin((x.rowwise() - x.row(pick)).rowwise().squaredNorm());
  }

  centroids.resize(k, x.cols());
  for (int j = 0; j < k; ++j) centroids.row(j) = x.row(chosen[std::size_t(j)]);

  std::vector<int> assign(std::size_t(n), 0);
  for (int iter = 0; iter < 100; ++iter) {
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = (x.row(i) - centroids.row(0)).squaredNorm();
      for (int j = 1; j < k; ++j) {
        const double d = (x.row(i) - centroids.row(j)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = j;
        }
      }
      assign[std::size_t(i)] = best;
    }
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, x.cols());
    Eigen::VectorXi counts = Eigen::VectorXi::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(assign[std::size_t(i)]) += x.row(i);
      counts(assign[std::size_t(i)]) += 1;
    }
    double shift = 0.0;
    for (int j = 0; j < k; ++j) {
      if (counts(j) == 0) {
        // adopt the point farthest from its own centroid
        Eigen::Index far = 0;
        double far_d = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          const double d =
              (x.row(i) - centroids.row(assign[std::size_t(i)])).squaredNorm();
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        shift = std::max(shift, (centroids.row(j) - x.row(far)).norm());
        centroids.row(j) = x.row(far);
        assign[std::size_t(far)] = j;
        continue;
      }
      const Eigen::RowVectorXd mean = sums.row(j) / double(counts(j));
      shift = std::max(shift, (centroids.row(j) - mean).norm());
      centroids.row(j) = mean;
    }
    if (shift <= 1e-6) break;
  }

  double sse = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double best = (x.row(i) - centroids.row(0)).squaredNorm();
    for (int j = 1; j < k; ++j)
      best = std::min(best, (x.row(i) - centroids.row(j)).squaredNorm());
    sse += best;
  }
  return sse;
}

}  // namespace

Eigen::MatrixXd init_centroids(const Eigen::MatrixXd& points, int k,
                               std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("init_centroids: k must be >= 1");
  if (points.rows() < k)
    throw std::invalid_argument("init_centroids: fewer points than clusters");

  constexpr int kRestarts = 8;
  Eigen::MatrixXd best;
  double best_sse = 0.0;
  for (int r = 0; r < kRestarts; ++r) {
    Rng rng(derive_seed(seed, std::uint64_t(r)));
    Eigen::MatrixXd candidate;
    const double sse = kmeans_once(points, k, rng, candidate);
    if (r == 0 || sse < best_sse) {
      best_sse = sse;
      best = candidate;
    }
  }
  return best;
}

std::vector<int> align_cluster_indices(const Eigen::MatrixXd& q_ref,
                                       const Eigen::MatrixXd& q_other) {
  if (q_ref.rows() != q_other.rows() || q_ref.cols() != q_other.cols())
    throw std::invalid_argument("align_cluster_indices: assignment shapes differ");
  const int k = int(q_ref.cols());
  if (k < 1 || q_ref.rows() < 1)
    throw std::invalid_argument("align_cluster_indices: empty assignment");

  auto row_argmax = [](const Eigen::MatrixXd& q, Eigen::Index i) {
    int best = 0;
    for (Eigen::Index j = 1; j < q.cols(); ++j)
      if (q(i, j) > q(i, best)) best = int(j);
    return best;
  };
  Eigen::MatrixXd overlap = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index i = 0; i < q_ref.rows(); ++i)
    overlap(row_argmax(q_ref, i), row_argmax(q_other, i)) += 1.0;

  std::vector<int> perm;
  perm.resize(std::size_t(k));
  if (k <= 8) {
    // exhaustive search; ties keep the lexicographically first permutation
    std::vector<int> p = perm;
    std::iota(p.begin(), p.end(), 0);
    double best = -1.0;
    do {
      double score = 0.0;
      for (int r = 0; r < k; ++r) score += overlap(r, p[std::size_t(r)]);
      if (score > best) {
        best = score;
        perm = p;
      }
    } while (std::next_permutation(p.begin(), p.end()));
  } else {
    std::vector<bool> row_used(std::size_t(k), false), col_used(std::size_t(k), false);
    for (int step = 0; step < k; ++step) {
      int br = -1, bc = -1;
      double best = -1.0;
      for (int r = 0; r < k; ++r)
        for (int c = 0; c < k; ++c)
          if (!row_used[std::size_t(r)] && !col_used[std::size_t(c)] &&
              overlap(r, c) > best) {
            best = overlap(r, c);
            br = r;
            bc = c;
          }
      perm[std::size_t(br)] = bc;
      row_used[std::size_t(br)] = true;
      col_used[std::size_t(bc)] = true;
    }
  }
  return perm;
}

Eigen::MatrixXd apply_cluster_permutation(const Eigen::MatrixXd& centroids,
                                          const std::vector<int>& perm) {
  if (perm.size() != std::size_t(centroids.rows()))
    throw std::invalid_argument("apply_cluster_permutation: size mismatch");
  std::vector<bool> seen(perm.size(), false);
  for (int p : perm) {
    if (p < 0 || std::size_t(p) >= perm.size() || seen[std::size_t(p)])
      throw std::invalid_argument("apply_cluster_permutation: not a permutation");
    seen[std::size_t(p)] = true;
  }
  Eigen::MatrixXd out(centroids.rows(), centroids.cols());
  for (Eigen::Index j = 0; j < centroids.rows(); ++j)
    out.row(j) = centroids.row(perm[std::size_t(j)]);
  return out;
}

LossParts view_loss_grad(const Encoder& enc, const Eigen::MatrixXd& centroids,
                         const std::vector<Eigen::MatrixXd>& inputs,
                         const std::vector<PairSample>& pairs, int view_index,
                         const std::vector<int>& kl_rows,
                         const Eigen::MatrixXd& targets, double gamma,
                         Eigen::VectorXd* grad_params,
                         Eigen::MatrixXd* grad_centroids) {
  if (view_index != 0 && view_index != 1)
    throw std::invalid_argument("view_loss_grad: view_index must be 0 or 1");

  // dedupe the fibers touched by this batch; one forward pass serves both
  // loss terms
  std::vector<int> fiber_of_slot;
  std::vector<int> slot_of_fiber(inputs.size(), -1);
  auto slot = [&](int fiber) {
    if (slot_of_fiber[std::size_t(fiber)] < 0) {
      slot_of_fiber[std::size_t(fiber)] = int(fiber_of_slot.size());
      fiber_of_slot.push_back(fiber);
    }
    return slot_of_fiber[std::size_t(fiber)];
  };
  for (const PairSample& p : pairs) {
    slot(p.i);
    slot(p.j);
  }
  const bool use_kl = gamma > 0.0 && !kl_rows.empty();
  if (use_kl)
    for (int i : kl_rows) slot(i);

  std::vector<Eigen::MatrixXd> batch;
  batch.reserve(fiber_of_slot.size());
  for (int fiber : fiber_of_slot) batch.push_back(inputs[std::size_t(fiber)]);

  const bool want_grad = grad_params != nullptr;
  EncoderTrace trace;
  Eigen::MatrixXd z = enc.forward(batch, want_grad ? &trace : nullptr);
  Eigen::MatrixXd dz = Eigen::MatrixXd::Zero(z.rows(), z.cols());

  LossParts parts;
  for (const PairSample& p : pairs) {
    const int a = slot_of_fiber[std::size_t(p.i)];
    const int b = slot_of_fiber[std::size_t(p.j)];
    const double label = view_index == 0 ? p.s1 : p.s2;
    Eigen::RowVectorXd diff = z.row(a) - z.row(b);
    const double d = diff.norm();
    const double err = d - label;
    parts.l_s += err * err;
    if (want_grad && d > 0.0) {
      const Eigen::RowVectorXd g = (2.0 * err / d) * diff;
      dz.row(a) += g;
      dz.row(b) -= g;
    }
  }

  if (use_kl) {
    if (targets.rows() != Eigen::Index(inputs.size()) ||
        targets.cols() != centroids.rows())
      throw std::invalid_argument("view_loss_grad: target shape mismatch");
    const Eigen::Index k = centroids.rows();
    for (int fiber : kl_rows) {
      const int s = slot_of_fiber[std::size_t(fiber)];
      Eigen::VectorXd kern(k);
      double denom = 0.0;
      for (Eigen::Index j = 0; j < k; ++j) {
        kern(j) = 1.0 / (1.0 + (z.row(s) - centroids.row(j)).squaredNorm());
        denom += kern(j);
      }
      for (Eigen::Index j = 0; j < k; ++j) {
        const double q = kern(j) / denom;
        const double p = targets(fiber, j);
        if (p > 0.0) parts.l_c += p * std::log(p / q);
        if (want_grad) {
          const Eigen::RowVectorXd dir = z.row(s) - centroids.row(j);
          const Eigen::RowVectorXd g = (2.0 * kern(j) * (p - q)) * dir;
          dz.row(s) += gamma * g;
          if (grad_centroids) grad_centroids->row(j) -= gamma * g;
        }
      }
    }
  }

  if (want_grad) enc.backward(trace, dz, *grad_params);
  if (!std::isfinite(parts.l_s) || !std::isfinite(parts.l_c))
    throw std::runtime_error("divergence error: non-finite batch loss");
  return parts;
}

void pretrain_view(Encoder& enc, const std::vector<Eigen::MatrixXd>& inputs,
                   const Eigen::MatrixXd& labels, int view_index,
                   const TrainConfig& cfg, std::vector<TrainLogRow>* log) {
  cfg.validate();
  const int n = int(inputs.size());
  if (n < 2) throw std::invalid_argument("pretrain_view: need at least 2 fibers");
  if (labels.rows() != n || labels.cols() != n)
    throw std::invalid_argument("pretrain_view: label matrix shape mismatch");

  Eigen::VectorXd params = enc.parameters();
  Adam opt(params.size(), cfg.pretrain_lr);
  const Eigen::MatrixXd no_centroids;
  const Eigen::MatrixXd no_targets;

  for (int epoch = 1; epoch <= cfg.pretrain_epochs; ++epoch) {
    opt.set_lr(cfg.pretrain_lr *
               std::pow(cfg.lr_decay_factor, (epoch - 1) / cfg.lr_decay_epochs));
    const auto index_pairs =
        sample_pairs(n, cfg.pairs_per_fiber * n,
                     derive_seed(cfg.seed, 100 + std::uint64_t(view_index),
                                 std::uint64_t(epoch)));
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < index_pairs.size();
         start += std::size_t(cfg.batch_size)) {
      const std::size_t stop =
          std::min(index_pairs.size(), start + std::size_t(cfg.batch_size));
      std::vector<PairSample> pairs;
      pairs.reserve(stop - start);
      for (std::size_t p = start; p < stop; ++p) {
        PairSample ps;
        ps.i = index_pairs[p].first;
        ps.j = index_pairs[p].second;
        const double label = labels(ps.i, ps.j);
        ps.s1 = label;
        ps.s2 = label;
        pairs.push_back(ps);
      }
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.size());
      enc.set_parameters(params);
      LossParts parts = view_loss_grad(enc, no_centroids, inputs, pairs,
                                       view_index, {}, no_targets, 0.0, &grad,
                                       nullptr);
      epoch_loss += parts.l_s;
      opt.step(params, grad);
    }
    if (!std::isfinite(epoch_loss))
      throw std::runtime_error("divergence error: non-finite loss at epoch " +
                               std::to_string(epoch));
    if (log)
      log->push_back({epoch, "pretrain",
                      view_name(enc.config().view), epoch_loss, 0.0, epoch_loss});
  }
  enc.set_parameters(params);
}

void finetune_collaborative(ViewModel& vm1, ViewModel& vm2,
                            const std::vector<Eigen::MatrixXd>& inputs1,
                            const std::vector<Eigen::MatrixXd>& inputs2,
                            const Eigen::MatrixXd& labels1,
                            const Eigen::MatrixXd& labels2,
                            const TrainConfig& cfg, std::vector<TrainLogRow>* log,
                            const FinetuneObserver& observer) {
  cfg.validate();
  const int n = int(inputs1.size());
  if (int(inputs2.size()) != n)
    throw std::invalid_argument("finetune: view input counts differ");
  if (n < 2) throw std::invalid_argument("finetune: need at least 2 fibers");
  const int k = cfg.k_clusters;
  if (vm1.centroids.rows() != k || vm2.centroids.rows() != k)
    throw std::invalid_argument("finetune: centroids not initialized for K");

  ViewModel* vms[2] = {&vm1, &vm2};
  const std::vector<Eigen::MatrixXd>* inputs[2] = {&inputs1, &inputs2};
  const Eigen::MatrixXd* labels[2] = {&labels1, &labels2};

  // one optimizer per view over [encoder params | centroids]
  Eigen::VectorXd theta[2];
  std::vector<Adam> opts;
  for (int v = 0; v < 2; ++v) {
    const Eigen::VectorXd enc_params = vms[v]->encoder.parameters();
    theta[v].resize(enc_params.size() + Eigen::Index(k) * vms[v]->centroids.cols());
    theta[v] << enc_params,
        Eigen::Map<const Eigen::VectorXd>(vms[v]->centroids.data(),
                                          vms[v]->centroids.size());
    opts.emplace_back(theta[v].size(), cfg.finetune_lr);
  }
  auto unpack = [&](int v) {
    const Eigen::Index np = vms[v]->encoder.parameter_count();
    vms[v]->encoder.set_parameters(theta[v].head(np));
    Eigen::Map<Eigen::VectorXd>(vms[v]->centroids.data(),
                                vms[v]->centroids.size()) = theta[v].tail(
        theta[v].size() - np);
  };

  for (int epoch = 1; epoch <= cfg.finetune_epochs; ++epoch) {
    // frozen targets for the epoch
    Eigen::MatrixXd targets[2];
    for (int v = 0; v < 2; ++v) {
      unpack(v);
      const Eigen::MatrixXd z = vms[v]->encoder.forward(*inputs[v]);
      const Eigen::MatrixXd q = soft_assign(z, vms[v]->centroids);
      const Eigen::VectorXd mass = q.colwise().sum().transpose();
      for (Eigen::Index j = 0; j < mass.size(); ++j)
        if (mass(j) < 1e-8)
          throw std::runtime_error(
              "degenerate-cluster error: cluster " + std::to_string(j) +
              " lost all soft mass in epoch " + std::to_string(epoch) +
              "; consider a smaller K");
      targets[v] = target_distribution(q);
    }
    const int anchor = (epoch % 2 == 1) ? 0 : 1;

    // shared pair stream; per-view labels
    const auto index_pairs = sample_pairs(
        n, cfg.pairs_per_fiber * n, derive_seed(cfg.seed, 200, std::uint64_t(epoch)));
    const std::size_t n_batches =
        (index_pairs.size() + std::size_t(cfg.batch_size) - 1) /
        std::size_t(cfg.batch_size);

    // fibers partitioned across the same batches for the KL term
    std::vector<int> fiber_order;
    fiber_order.resize(std::size_t(n));
    for (int i = 0; i < n; ++i) fiber_order[std::size_t(i)] = i;
    Rng shuffle_rng(derive_seed(cfg.seed, 300, std::uint64_t(epoch)));
    shuffle_rng.shuffle(fiber_order);

    FinetuneEpochInfo info;
    info.epoch = epoch;
    info.anchor_view = anchor + 1;

    for (std::size_t b = 0; b < n_batches; ++b) {
      const std::size_t p_lo = b * std::size_t(cfg.batch_size);
      const std::size_t p_hi =
          std::min(index_pairs.size(), p_lo + std::size_t(cfg.batch_size));
      const std::size_t f_lo = b * std::size_t(n) / n_batches;
      const std::size_t f_hi = (b + 1) * std::size_t(n) / n_batches;
      std::vector<int> kl_rows(fiber_order.begin() + std::ptrdiff_t(f_lo),
                               fiber_order.begin() + std::ptrdiff_t(f_hi));

      for (int v = 0; v < 2; ++v) {
        std::vector<PairSample> pairs;
        pairs.reserve(p_hi - p_lo);
        for (std::size_t p = p_lo; p < p_hi; ++p) {
          PairSample ps;
          ps.i = index_pairs[p].first;
          ps.j = index_pairs[p].second;
          ps.s1 = (*labels[0])(ps.i, ps.j);
          ps.s2 = (*labels[1])(ps.i, ps.j);
          pairs.push_back(ps);
        }
        unpack(v);
        const Eigen::Index np = vms[v]->encoder.parameter_count();
        Eigen::VectorXd grad = Eigen::VectorXd::Zero(theta[v].size());
        Eigen::VectorXd grad_params = Eigen::VectorXd::Zero(np);
        Eigen::MatrixXd grad_centroids =
            Eigen::MatrixXd::Zero(k, vms[v]->centroids.cols());
        LossParts parts = view_loss_grad(
            vms[v]->encoder, vms[v]->centroids, *inputs[v], pairs, v, kl_rows,
            targets[std::size_t(anchor)], cfg.gamma, &grad_params,
            &grad_centroids);
        grad.head(np) = grad_params;
        grad.tail(grad.size() - np) = Eigen::Map<const Eigen::VectorXd>(
            grad_centroids.data(), grad_centroids.size());
        opts[std::size_t(v)].step(theta[v], grad);
        info.l_s[v] += parts.l_s;
        info.l_c[v] += parts.l_c;
      }
    }
    for (int v = 0; v < 2; ++v) {
      info.l_f[v] = info.l_s[v] + cfg.gamma * info.l_c[v];
      if (!std::isfinite(info.l_f[v]))
        throw std::runtime_error("divergence error: non-finite loss at epoch " +
                                 std::to_string(epoch));
      if (log)
        log->push_back({epoch, "finetune", view_name(vms[v]->encoder.config().view),
                        info.l_s[v], info.l_c[v], info.l_f[v]});
    }
    if (observer) observer(info);
  }
  unpack(0);
  unpack(1);
}

void save_centroids(const Eigen::MatrixXd& centroids,
                    const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << "dmvfc-centroids-v1\n"
      << "rows " << centroids.rows() << "\n"
      << "cols " << centroids.cols() << "\n";
  for (Eigen::Index i = 0; i < centroids.rows(); ++i) {
    for (Eigen::Index j = 0; j < centroids.cols(); ++j) {
      if (j) out << " ";
      out << format_double(centroids(i, j));
    }
    out << "\n";
  }
}

Eigen::MatrixXd load_centroids(const std::filesystem::path& file) {
  TextReader in(file.string(), file.filename().string());
  in.expect_literal("dmvfc-centroids-v1");
  in.expect_literal("rows");
  const long long rows = in.expect_int("row count");
  in.expect_literal("cols");
  const long long cols = in.expect_int("column count");
  if (rows < 1 || cols < 1)
    throw std::runtime_error("model error: invalid centroid shape in " +
                             file.string());
  Eigen::MatrixXd m(rows, cols);
  for (long long i = 0; i < rows; ++i)
    for (long long j = 0; j < cols; ++j) m(i, j) = in.expect_double("centroid value");
  in.expect_end();
  return m;
}

}  // namespace dmvfc

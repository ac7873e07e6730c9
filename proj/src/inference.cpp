#include "dmvfc/inference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>

#include "dmvfc/functional.hpp"
#include "dmvfc/textio.hpp"

namespace dmvfc {

PredictView predict_view_from_name(const std::string& name) {
  if (name == "fused") return PredictView::fused;
  if (name == "geometric") return PredictView::geometric;
  if (name == "functional") return PredictView::functional;
  throw std::invalid_argument("unknown view '" + name +
                              "' (expected fused, geometric, or functional)");
}

std::string predict_view_name(PredictView v) {
  switch (v) {
    case PredictView::fused: return "fused";
    case PredictView::geometric: return "geometric";
    case PredictView::functional: return "functional";
  }
  throw std::invalid_argument("unknown view value");
}

std::vector<Eigen::MatrixXd> geometric_inputs(const FiberSet& fs, int n_points) {
  std::vector<Eigen::MatrixXd> inputs;
  inputs.reserve(fs.fibers.size());
  for (const auto& rf : resample_all(fs, n_points)) inputs.emplace_back(rf.points);
  return inputs;
}

std::vector<Eigen::MatrixXd> functional_inputs(const FiberSet& fs, int target_len,
                                               std::uint64_t seed) {
  std::vector<Eigen::MatrixXd> inputs;
  inputs.reserve(fs.fibers.size());
  for (const auto& fi : downsample_all(fs, target_len, seed))
    inputs.emplace_back(fi.matrix);
  return inputs;
}

std::vector<int> labels_from_assignment(const Eigen::MatrixXd& q) {
  std::vector<int> labels(std::size_t(q.rows()));
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    int best = 0;
    for (Eigen::Index j = 1; j < q.cols(); ++j)
      if (q(i, j) > q(i, best)) best = int(j);
    labels[std::size_t(i)] = best;
  }
  return labels;
}

ClusterPrediction predict(const ViewModel& geo, const ViewModel& func,
                          const FiberSet& fs, PredictView view, std::uint64_t seed) {
  if (geo.centroids.rows() != func.centroids.rows())
    throw std::runtime_error(
        "model error: centroid counts differ between views (" +
        std::to_string(geo.centroids.rows()) + " vs " +
        std::to_string(func.centroids.rows()) + ")");
  if (geo.centroids.cols() != geo.encoder.config().embedding_dim ||
      func.centroids.cols() != func.encoder.config().embedding_dim)
    throw std::runtime_error("model error: centroid width does not match embedding");
  if (!fs.has_signals())
    throw std::invalid_argument("predict: fiberset has no endpoint signals");

  const auto in_geo = geometric_inputs(fs, geo.encoder.config().num_points);
  const auto in_func =
      functional_inputs(fs, func.encoder.config().input_channels, seed);

  ClusterPrediction pred;
  pred.per_view_q[0] = soft_assign(geo.encoder.forward(in_geo), geo.centroids);
  pred.per_view_q[1] = soft_assign(func.encoder.forward(in_func), func.centroids);
  switch (view) {
    case PredictView::fused:
      pred.fused_q = 0.5 * (pred.per_view_q[0] + pred.per_view_q[1]);
      break;
    case PredictView::geometric: pred.fused_q = pred.per_view_q[0]; break;
    case PredictView::functional: pred.fused_q = pred.per_view_q[1]; break;
  }
  pred.labels = labels_from_assignment(pred.fused_q);
  return pred;
}

namespace {

double choose2(double n) { return 0.5 * n * (n - 1.0); }

// Contingency table between two label vectors plus its margins.
struct Contingency {
  std::map<std::pair<int, int>, double> cells;
  std::map<int, double> margin_a, margin_b;
  double n = 0.0;
};

Contingency contingency(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("label vectors have different lengths");
  if (a.empty()) throw std::invalid_argument("label vectors are empty");
  Contingency c;
  for (std::size_t i = 0; i < a.size(); ++i) {
    c.cells[{a[i], b[i]}] += 1.0;
    c.margin_a[a[i]] += 1.0;
    c.margin_b[b[i]] += 1.0;
  }
  c.n = double(a.size());
  return c;
}

}  // namespace

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  const Contingency c = contingency(a, b);
  double sum_cells = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (const auto& [key, v] : c.cells) sum_cells += choose2(v);
  for (const auto& [key, v] : c.margin_a) sum_a += choose2(v);
  for (const auto& [key, v] : c.margin_b) sum_b += choose2(v);
  const double total = choose2(c.n);
  if (total == 0.0) return 1.0;  // single element: trivially identical partitions
  const double expected = sum_a * sum_b / total;
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;  // both partitions trivial
  return (sum_cells - expected) / (max_index - expected);
}

double normalized_mutual_information(const std::vector<int>& a,
                                     const std::vector<int>& b) {
  const Contingency c = contingency(a, b);
  auto entropy = [&](const std::map<int, double>& margin) {
    double h = 0.0;
    for (const auto& [key, v] : margin) {
      const double p = v / c.n;
      h -= p * std::log(p);
    }
    return h;
  };
  const double ha = entropy(c.margin_a), hb = entropy(c.margin_b);
  if (ha == 0.0 && hb == 0.0) return 1.0;  // both trivial: identical partitions
  if (ha == 0.0 || hb == 0.0) return 0.0;
  double mi = 0.0;
  for (const auto& [key, v] : c.cells) {
    const double pij = v / c.n;
    const double pa = c.margin_a.at(key.first) / c.n;
    const double pb = c.margin_b.at(key.second) / c.n;
    mi += pij * std::log(pij / (pa * pb));
  }
  mi = std::max(mi, 0.0);  // guard tiny negative round-off
  return mi / std::sqrt(ha * hb);
}

EvalReport evaluate_labels(const std::vector<int>& labels, const FiberSet& fs,
                           int n_points) {
  if (labels.empty()) throw std::invalid_argument("evaluate: empty prediction");
  if (labels.size() != fs.fibers.size())
    throw std::invalid_argument("evaluate: prediction does not cover the fiberset");
  int k = 0;
  for (int l : labels) {
    if (l < 0) throw std::invalid_argument("evaluate: negative cluster label");
    k = std::max(k, l + 1);
  }

  std::vector<std::vector<std::size_t>> members;
  members.resize(std::size_t(k));
  for (std::size_t i = 0; i < labels.size(); ++i)
    members[std::size_t(labels[i])].push_back(i);

  const auto resampled = resample_all(fs, n_points);

  EvalReport rep;
  rep.per_cluster_pearson.resize(std::size_t(k));
  rep.per_cluster_alpha.assign(std::size_t(k), 0.0);
  rep.cluster_sizes.assign(std::size_t(k), 0);
  double alpha_sum = 0.0, pearson_sum = 0.0;
  int alpha_count = 0, pearson_count = 0;
  for (int j = 0; j < k; ++j) {
    const auto& m = members[std::size_t(j)];
    rep.cluster_sizes[std::size_t(j)] = int(m.size());
    if (m.empty()) continue;

    std::vector<ResampledFiber> cluster_fibers;
    for (std::size_t idx : m) cluster_fibers.push_back(resampled[idx]);
    const double alpha = alpha_metric(cluster_fibers);
    rep.per_cluster_alpha[std::size_t(j)] = alpha;
    alpha_sum += alpha;
    ++alpha_count;

    if (m.size() >= 2 && fs.has_signals()) {
      std::vector<EndpointSignals> cluster_signals;
      for (std::size_t idx : m) cluster_signals.push_back(fs.signals[idx]);
      const double p = cluster_pearson(cluster_signals);
      rep.per_cluster_pearson[std::size_t(j)] = p;
      pearson_sum += p;
      ++pearson_count;
    }
  }
  if (alpha_count > 0) rep.mean_alpha = alpha_sum / alpha_count;
  if (pearson_count > 0) rep.mean_pearson = pearson_sum / pearson_count;

  if (fs.has_labels()) {
    rep.ari = adjusted_rand_index(labels, fs.true_labels);
    rep.nmi = normalized_mutual_information(labels, fs.true_labels);
  }
  return rep;
}

EvalReport evaluate(const ClusterPrediction& pred, const FiberSet& fs, int n_points) {
  return evaluate_labels(pred.labels, fs, n_points);
}

std::vector<int> labels_from_quickbundles(const QBModel& model, const FiberSet& fs) {
  std::map<std::int64_t, int> by_id;
  for (std::size_t c = 0; c < model.member_ids.size(); ++c)
    for (std::int64_t id : model.member_ids[c]) by_id[id] = int(c);
  std::vector<int> labels;
  labels.reserve(fs.fibers.size());
  for (const auto& f : fs.fibers) {
    const auto it = by_id.find(f.id);
    if (it == by_id.end())
      throw std::invalid_argument("quickbundles model does not cover fiber " +
                                  std::to_string(f.id));
    labels.push_back(it->second);
  }
  return labels;
}

namespace {

std::string cell(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

std::string cell_fixed(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", *v);
  return buf;
}

}  // namespace

std::string ComparisonTable::to_csv() const {
  bool any_truth = false;
  for (const auto& r : rows) any_truth = any_truth || r.ari || r.nmi;
  std::string out = "method,bundle,mean_pearson,mean_alpha";
  if (any_truth) out += ",ari,nmi";
  out += "\n";
  for (const auto& r : rows) {
    out += r.method + "," + r.bundle + "," + cell(r.mean_pearson) + "," +
           cell(r.mean_alpha);
    if (any_truth) out += "," + cell(r.ari) + "," + cell(r.nmi);
    out += "\n";
  }
  return out;
}

std::string ComparisonTable::to_text() const {
  bool any_truth = false;
  for (const auto& r : rows) any_truth = any_truth || r.ari || r.nmi;
  std::vector<std::vector<std::string>> grid;
  grid.push_back({"method", "bundle", "mean_pearson", "mean_alpha"});
  if (any_truth) {
    grid.back().push_back("ari");
    grid.back().push_back("nmi");
  }
  for (const auto& r : rows) {
    std::vector<std::string> line{r.method, r.bundle, cell_fixed(r.mean_pearson),
                                  cell_fixed(r.mean_alpha)};
    if (any_truth) {
      line.push_back(cell_fixed(r.ari));
      line.push_back(cell_fixed(r.nmi));
    }
    grid.push_back(std::move(line));
  }
  std::vector<std::size_t> width(grid[0].size(), 0);
  for (const auto& line : grid)
    for (std::size_t c = 0; c < line.size(); ++c)
      width[c] = std::max(width[c], line[c].size());
  std::string out;
  for (const auto& line : grid) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      out += line[c];
      if (c + 1 < line.size()) out.append(width[c] - line[c].size() + 2, ' ');
    }
    out += "\n";
  }
  return out;
}

ComparisonTable compare_methods(
    const FiberSet& fs,
    const std::vector<std::pair<std::string, std::vector<int>>>& methods,
    int n_points) {
  ComparisonTable table;
  for (const auto& [name, labels] : methods) {
    if (labels.size() != fs.fibers.size())
      throw std::invalid_argument("compare_methods: labels for '" + name +
                                  "' do not cover the fiberset");
    const EvalReport rep = evaluate_labels(labels, fs, n_points);
    table.rows.push_back(
        {name, fs.bundle_name, rep.mean_pearson, rep.mean_alpha, rep.ari, rep.nmi});
  }
  return table;
}

void save_prediction(const ClusterPrediction& pred,
                     const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "labels.txt");
    if (!out) throw std::runtime_error("cannot write " + (dir / "labels.txt").string());
    for (int l : pred.labels) out << l << "\n";
  }
  {
    std::ofstream out(dir / "fused_q.txt");
    if (!out)
      throw std::runtime_error("cannot write " + (dir / "fused_q.txt").string());
    for (Eigen::Index i = 0; i < pred.fused_q.rows(); ++i) {
      for (Eigen::Index j = 0; j < pred.fused_q.cols(); ++j) {
        if (j) out << ' ';
        out << format_double(pred.fused_q(i, j));
      }
      out << "\n";
    }
  }
}

std::vector<int> load_labels(const std::filesystem::path& file) {
  TextReader reader(file.string(), file.filename().string());
  std::vector<int> labels;
  std::string tok;
  while (reader.next_token(tok)) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size())
      throw std::runtime_error("format error: " + reader.label() + " line " +
                               std::to_string(reader.line()) +
                               ": expected label, got '" + tok + "'");
    labels.push_back(v);
  }
  return labels;
}

}  // namespace dmvfc

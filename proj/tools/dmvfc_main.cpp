#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "dmvfc/fiberset.hpp"
#include "dmvfc/functional.hpp"
#include "dmvfc/geometry.hpp"
#include "dmvfc/inference.hpp"
#include "dmvfc/rng.hpp"
#include "dmvfc/synthetic.hpp"
#include "dmvfc/textio.hpp"
#include "dmvfc/training.hpp"

namespace fs = std::filesystem;
using namespace dmvfc;

namespace {

void write_kv(const fs::path& file,
              const std::vector<std::pair<std::string, std::string>>& kv) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  for (const auto& [k, v] : kv) out << k << "=" << v << "\n";
}

void write_log_csv(const fs::path& file, const std::vector<TrainLogRow>& rows) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << "epoch,stage,view,l_s,l_c,l_f\n";
  for (const auto& r : rows)
    out << r.epoch << "," << r.stage << "," << r.view << ","
        << format_double(r.l_s) << "," << format_double(r.l_c) << ","
        << format_double(r.l_f) << "\n";
}

FiberSet load_dataset(const std::string& path, bool need_signals) {
  FiberSet data = load_fiberset(path);
  if (need_signals && !data.has_signals())
    throw std::runtime_error("not a dataset: " + path +
                             " carries no endpoint signals");
  return data;
}

EncoderConfig geometric_config(int num_points, int embedding_dim, int knn_k) {
  EncoderConfig cfg;
  cfg.view = EncoderConfig::View::geometric;
  cfg.input_channels = 3;
  cfg.num_points = num_points;
  cfg.knn_k = knn_k;
  cfg.embedding_dim = embedding_dim;
  return cfg;
}

EncoderConfig functional_config(int channels, int embedding_dim) {
  EncoderConfig cfg;
  cfg.view = EncoderConfig::View::functional;
  cfg.input_channels = channels;
  cfg.num_points = 2;
  cfg.knn_k = 1;
  cfg.embedding_dim = embedding_dim;
  return cfg;
}

Encoder load_encoder(const fs::path& file) {
  if (!fs::exists(file))
    throw std::runtime_error("model error: missing checkpoint " + file.string());
  return Encoder::load(file.string());
}

Eigen::MatrixXd load_centroid_file(const fs::path& file) {
  if (!fs::exists(file))
    throw std::runtime_error("model error: missing centroids " + file.string());
  return load_centroids(file);
}

ViewModel load_view_model(const fs::path& dir, const std::string& view) {
  return ViewModel{load_encoder(dir / ("encoder_" + view + ".txt")),
                   load_centroid_file(dir / ("centroids_" + view + ".txt"))};
}

// Pairwise pseudo-label matrices: direct-flip distances for the geometric view
// and signature MSE for the functional view.
Eigen::MatrixXd geometric_labels(const FiberSet& data, int num_points) {
  return pairwise_mdf(resample_all(data, num_points));
}

Eigen::MatrixXd functional_labels(const FiberSet& data, int pca_components) {
  const PCAModel pca = fit_pca_pooled(data, pca_components);
  std::vector<FunctionalFeature> features;
  features.reserve(data.signals.size());
  for (const auto& s : data.signals) features.push_back(functional_feature(s, pca));
  return pairwise_functional(features);
}

std::string color_for(double corr) {
  const double s = std::clamp(0.5 * (corr + 1.0), 0.0, 1.0);
  const int r = int(255.0 * s + 0.5);
  const int b = int(255.0 * (1.0 - s) + 0.5);
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x40%02x", r, b);
  return buf;
}

// One SVG per cluster: fibers projected on the xy plane, colored by each
// fiber's mean endpoint-signal correlation to the rest of its cluster.
void write_cluster_svgs(const FiberSet& data, const std::vector<int>& labels,
                        const std::string& method, const fs::path& dir) {
  double min_x = 1e300, max_x = -1e300, min_y = 1e300, max_y = -1e300;
  for (const auto& f : data.fibers)
    for (const auto& p : f.points) {
      min_x = std::min(min_x, p.x());
      max_x = std::max(max_x, p.x());
      min_y = std::min(min_y, p.y());
      max_y = std::max(max_y, p.y());
    }
  const double span_x = std::max(max_x - min_x, 1e-9);
  const double span_y = std::max(max_y - min_y, 1e-9);
  const double w = 640.0, h = 480.0, margin = 20.0;
  auto sx = [&](double x) { return margin + (x - min_x) / span_x * (w - 2 * margin); };
  auto sy = [&](double y) { return h - margin - (y - min_y) / span_y * (h - 2 * margin); };

  const int k = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  for (int j = 0; j < k; ++j) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == j) members.push_back(i);

    const fs::path file =
        dir / (method + "_cluster_" + std::to_string(j) + ".svg");
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
        << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << " " << h << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (std::size_t idx : members) {
      std::string color = "#888888";
      if (members.size() > 1 && data.has_signals()) {
        double sum = 0.0;
        int n = 0;
        for (std::size_t other : members) {
          if (other == idx) continue;
          try {
            sum += signal_pair_correlation(data.signals[idx], data.signals[other]);
            ++n;
          } catch (const std::runtime_error&) {
          }
        }
        if (n > 0) color = color_for(sum / n);
      }
      out << "<polyline fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"1\" points=\"";
      for (const auto& p : data.fibers[idx].points)
        out << sx(p.x()) << "," << sy(p.y()) << " ";
      out << "\"/>\n";
    }
    out << "<text x=\"" << margin << "\" y=\"" << margin << "\" font-size=\"12\">"
        << method << " cluster " << j << " (" << members.size() << " fibers)</text>\n"
        << "</svg>\n";
  }
}

std::string fmt_int(long long v) { return std::to_string(v); }

// key=value run config. Command-line flags win over file entries; keys that do
// not name an option of the subcommand are rejected.
void apply_config_file(CLI::App* sub, const std::string& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read config " + file);
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(file + " line " + std::to_string(lineno) +
                                  ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (opt == nullptr)
      throw std::invalid_argument(file + " line " + std::to_string(lineno) +
                                  ": unknown config key '" + key + "'");
    if (opt->count() > 0) continue;
    opt->add_result(value);
    opt->run_callback();
  }
}

CLI::Option* add_config_option(CLI::App* sub, std::string& var) {
  return sub->add_option("--config", var,
                         "key=value file; explicit flags take precedence");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deep multi-view fiber clustering"};
  app.require_subcommand(1);

  // ---- generate ------------------------------------------------------------
  auto* gen = app.add_subcommand("generate", "write a synthetic benchmark dataset");
  std::string gen_preset, gen_out, gen_name, gen_configfile;
  std::uint64_t gen_seed = 0;
  SynthConfig gen_cfg;
  gen_cfg.func_base_freqs = {2.0, 5.0, 3.5, 6.5};
  gen->add_option("--preset", gen_preset, "easy, func-only, or geo-only");
  gen->add_option("--out", gen_out, "output dataset directory")->required();
  gen->add_option("--seed", gen_seed, "generation seed");
  gen->add_option("--name", gen_name, "bundle name override");
  gen->add_option("--geo-clusters", gen_cfg.n_geo_clusters);
  gen->add_option("--func-per-geo", gen_cfg.n_func_per_geo);
  gen->add_option("--fibers-per-cluster", gen_cfg.fibers_per_cluster);
  gen->add_option("--separation", gen_cfg.geo_separation);
  gen->add_option("--jitter", gen_cfg.geo_jitter);
  gen->add_option("--signal-length", gen_cfg.signal_length);
  gen->add_option("--freqs", gen_cfg.func_base_freqs, "per product cluster")
      ->delimiter(',');
  gen->add_option("--noise", gen_cfg.signal_noise_sd);
  add_config_option(gen, gen_configfile);
  gen->callback([&]() {
    if (!gen_configfile.empty()) apply_config_file(gen, gen_configfile);
    SynthConfig cfg = gen_cfg;
    std::string bundle = "synthetic";
    if (!gen_preset.empty()) {
      const auto suite = benchmark_suite(gen_seed);
      const auto it =
          std::find_if(suite.begin(), suite.end(),
                       [&](const auto& e) { return e.first == gen_preset; });
      if (it == suite.end())
        throw CLI::ValidationError("--preset", "unknown preset '" + gen_preset + "'");
      cfg = it->second;
      bundle = gen_preset;
      // explicit flags override the preset's values
      if (gen->count("--geo-clusters")) cfg.n_geo_clusters = gen_cfg.n_geo_clusters;
      if (gen->count("--func-per-geo")) cfg.n_func_per_geo = gen_cfg.n_func_per_geo;
      if (gen->count("--fibers-per-cluster"))
        cfg.fibers_per_cluster = gen_cfg.fibers_per_cluster;
      if (gen->count("--separation")) cfg.geo_separation = gen_cfg.geo_separation;
      if (gen->count("--jitter")) cfg.geo_jitter = gen_cfg.geo_jitter;
      if (gen->count("--signal-length")) cfg.signal_length = gen_cfg.signal_length;
      if (gen->count("--freqs")) cfg.func_base_freqs = gen_cfg.func_base_freqs;
      if (gen->count("--noise")) cfg.signal_noise_sd = gen_cfg.signal_noise_sd;
    }
    cfg.seed = gen_seed;
    if (!gen_name.empty()) bundle = gen_name;
    cfg.validate();

    FiberSet data = generate(cfg);
    data.bundle_name = bundle;
    save_fiberset(data, gen_out);
    std::cout << "wrote " << data.fibers.size() << " fibers ("
              << cfg.product_clusters() << " clusters) to " << gen_out << "\n";
  });

  // ---- pretrain ------------------------------------------------------------
  auto* pre = app.add_subcommand("pretrain", "self-supervised encoder pretraining");
  std::string pre_data, pre_out, pre_configfile;
  TrainConfig pre_cfg;
  int pre_num_points = 25, pre_embedding = 10, pre_knn = 5;
  int pre_channels = 600, pre_pca = 30;
  pre->add_option("--data", pre_data, "dataset directory")->required();
  pre->add_option("--out", pre_out, "run directory")->required();
  pre->add_option("--seed", pre_cfg.seed);
  pre->add_option("--epochs", pre_cfg.pretrain_epochs);
  pre->add_option("--lr", pre_cfg.pretrain_lr);
  pre->add_option("--decay-epochs", pre_cfg.lr_decay_epochs);
  pre->add_option("--decay-factor", pre_cfg.lr_decay_factor);
  pre->add_option("--batch-size", pre_cfg.batch_size);
  pre->add_option("--pairs-per-fiber", pre_cfg.pairs_per_fiber);
  pre->add_option("--num-points", pre_num_points, "resampled points per fiber");
  pre->add_option("--embedding-dim", pre_embedding);
  pre->add_option("--knn", pre_knn, "graph neighbors, geometric view");
  pre->add_option("--func-channels", pre_channels, "downsampled signal length");
  pre->add_option("--pca-components", pre_pca);
  add_config_option(pre, pre_configfile);
  pre->callback([&]() {
    if (!pre_configfile.empty()) apply_config_file(pre, pre_configfile);
    pre_cfg.validate();
    const EncoderConfig geo_cfg =
        geometric_config(pre_num_points, pre_embedding, pre_knn);
    const EncoderConfig func_cfg = functional_config(pre_channels, pre_embedding);
    geo_cfg.validate();
    func_cfg.validate();

    const FiberSet data = load_dataset(pre_data, true);
    const auto in_geo = geometric_inputs(data, pre_num_points);
    const auto in_func = functional_inputs(data, pre_channels, pre_cfg.seed);
    const Eigen::MatrixXd s1 = geometric_labels(data, pre_num_points);
    const Eigen::MatrixXd s2 = functional_labels(data, pre_pca);

    Encoder geo(geo_cfg, derive_seed(pre_cfg.seed, 1));
    Encoder func(func_cfg, derive_seed(pre_cfg.seed, 2));
    std::vector<TrainLogRow> log;
    pretrain_view(geo, in_geo, s1, 0, pre_cfg, &log);
    pretrain_view(func, in_func, s2, 1, pre_cfg, &log);

    fs::create_directories(pre_out);
    geo.save((fs::path(pre_out) / "encoder_geometric.txt").string());
    func.save((fs::path(pre_out) / "encoder_functional.txt").string());
    write_log_csv(fs::path(pre_out) / "log.csv", log);
    write_kv(fs::path(pre_out) / "config.txt",
             {{"stage", "pretrain"},
              {"data", pre_data},
              {"seed", std::to_string(pre_cfg.seed)},
              {"epochs", fmt_int(pre_cfg.pretrain_epochs)},
              {"lr", format_double(pre_cfg.pretrain_lr)},
              {"decay_epochs", fmt_int(pre_cfg.lr_decay_epochs)},
              {"decay_factor", format_double(pre_cfg.lr_decay_factor)},
              {"batch", fmt_int(pre_cfg.batch_size)},
              {"pairs_per_fiber", fmt_int(pre_cfg.pairs_per_fiber)},
              {"num_points", fmt_int(pre_num_points)},
              {"embedding_dim", fmt_int(pre_embedding)},
              {"knn", fmt_int(pre_knn)},
              {"func_channels", fmt_int(pre_channels)},
              {"pca_components", fmt_int(pre_pca)}});
    std::cout << "pretrained both views on " << data.fibers.size()
              << " fibers; checkpoints in " << pre_out << "\n";
  });

  // ---- finetune ------------------------------------------------------------
  auto* fine = app.add_subcommand("finetune", "collaborative clustering fine-tune");
  std::string fine_data, fine_pre, fine_out, fine_configfile;
  TrainConfig fine_cfg;
  int fine_channels = 600, fine_pca = 30;
  fine->add_option("--data", fine_data, "dataset directory")->required();
  fine->add_option("--pretrain", fine_pre, "pretrain run directory")->required();
  fine->add_option("--out", fine_out, "run directory")->required();
  fine->add_option("--k", fine_cfg.k_clusters, "cluster count")->required();
  fine->add_option("--seed", fine_cfg.seed);
  fine->add_option("--epochs", fine_cfg.finetune_epochs);
  fine->add_option("--lr", fine_cfg.finetune_lr);
  fine->add_option("--gamma", fine_cfg.gamma);
  fine->add_option("--batch-size", fine_cfg.batch_size);
  fine->add_option("--pairs-per-fiber", fine_cfg.pairs_per_fiber);
  fine->add_option("--func-channels", fine_channels);
  fine->add_option("--pca-components", fine_pca);
  add_config_option(fine, fine_configfile);
  fine->callback([&]() {
    if (!fine_configfile.empty()) apply_config_file(fine, fine_configfile);
    fine_cfg.validate();
    ViewModel geo{load_encoder(fs::path(fine_pre) / "encoder_geometric.txt"),
                  Eigen::MatrixXd()};
    ViewModel func{load_encoder(fs::path(fine_pre) / "encoder_functional.txt"),
                   Eigen::MatrixXd()};

    const FiberSet data = load_dataset(fine_data, true);
    const auto in_geo = geometric_inputs(data, geo.encoder.config().num_points);
    const auto in_func = functional_inputs(data, fine_channels, fine_cfg.seed);
    const Eigen::MatrixXd s1 =
        geometric_labels(data, geo.encoder.config().num_points);
    const Eigen::MatrixXd s2 = functional_labels(data, fine_pca);

    // per-view k-means, then bring view 2 onto view 1's cluster indexing
    const Eigen::MatrixXd z1 = geo.encoder.forward(in_geo);
    const Eigen::MatrixXd z2 = func.encoder.forward(in_func);
    geo.centroids = init_centroids(z1, fine_cfg.k_clusters,
                                   derive_seed(fine_cfg.seed, 10));
    func.centroids = init_centroids(z2, fine_cfg.k_clusters,
                                    derive_seed(fine_cfg.seed, 11));
    const std::vector<int> perm = align_cluster_indices(
        soft_assign(z1, geo.centroids), soft_assign(z2, func.centroids));
    func.centroids = apply_cluster_permutation(func.centroids, perm);

    std::vector<TrainLogRow> log;
    finetune_collaborative(geo, func, in_geo, in_func, s1, s2, fine_cfg, &log);

    fs::create_directories(fine_out);
    geo.encoder.save((fs::path(fine_out) / "encoder_geometric.txt").string());
    func.encoder.save((fs::path(fine_out) / "encoder_functional.txt").string());
    save_centroids(geo.centroids, fs::path(fine_out) / "centroids_geometric.txt");
    save_centroids(func.centroids, fs::path(fine_out) / "centroids_functional.txt");
    write_log_csv(fs::path(fine_out) / "log.csv", log);
    write_kv(fs::path(fine_out) / "config.txt",
             {{"stage", "finetune"},
              {"data", fine_data},
              {"pretrain", fine_pre},
              {"seed", std::to_string(fine_cfg.seed)},
              {"k", fmt_int(fine_cfg.k_clusters)},
              {"epochs", fmt_int(fine_cfg.finetune_epochs)},
              {"lr", format_double(fine_cfg.finetune_lr)},
              {"gamma", format_double(fine_cfg.gamma)},
              {"batch", fmt_int(fine_cfg.batch_size)},
              {"pairs_per_fiber", fmt_int(fine_cfg.pairs_per_fiber)},
              {"func_channels", fmt_int(fine_channels)},
              {"pca_components", fmt_int(fine_pca)}});
    std::cout << "fine-tuned K=" << fine_cfg.k_clusters << " models in " << fine_out
              << "\n";
  });

  // ---- cluster ---------------------------------------------------------------
  auto* clu = app.add_subcommand("cluster", "predict cluster labels");
  std::string clu_data, clu_model, clu_out, clu_configfile, clu_view = "fused";
  std::uint64_t clu_seed = 0;
  clu->add_option("--data", clu_data, "dataset directory")->required();
  clu->add_option("--model", clu_model, "finetune run directory")->required();
  clu->add_option("--out", clu_out, "prediction directory")->required();
  clu->add_option("--seed", clu_seed, "inference downsampling seed");
  clu->add_option("--view", clu_view, "fused, geometric, or functional");
  add_config_option(clu, clu_configfile);
  clu->callback([&]() {
    if (!clu_configfile.empty()) apply_config_file(clu, clu_configfile);
    const PredictView view = predict_view_from_name(clu_view);
    const ViewModel geo = load_view_model(clu_model, "geometric");
    const ViewModel func = load_view_model(clu_model, "functional");
    const FiberSet data = load_dataset(clu_data, true);
    const ClusterPrediction pred = predict(geo, func, data, view, clu_seed);
    save_prediction(pred, clu_out);
    std::cout << "wrote " << pred.labels.size() << " labels (view " << clu_view
              << ") to " << clu_out << "\n";
  });

  // ---- evaluate --------------------------------------------------------------
  auto* eva = app.add_subcommand("evaluate", "score predictions against a dataset");
  std::string eva_data, eva_out, eva_configfile;
  std::vector<std::string> eva_preds;
  int eva_points = 25;
  bool eva_plot = false;
  eva->add_option("--data", eva_data, "dataset directory")->required();
  eva->add_option("--pred", eva_preds, "name=prediction-dir (repeatable)")
      ->required();
  eva->add_option("--out", eva_out, "report directory")->required();
  eva->add_option("--n-points", eva_points, "resampling for alpha");
  eva->add_flag("--plot", eva_plot, "emit per-cluster SVG projections");
  add_config_option(eva, eva_configfile);
  eva->callback([&]() {
    if (!eva_configfile.empty()) apply_config_file(eva, eva_configfile);
    const FiberSet data = load_dataset(eva_data, false);
    std::vector<std::pair<std::string, std::vector<int>>> methods;
    for (const std::string& entry : eva_preds) {
      const auto eq = entry.find('=');
      const std::string name =
          eq == std::string::npos
              ? fs::path(entry).filename().string()
              : entry.substr(0, eq);
      const std::string dir = eq == std::string::npos ? entry : entry.substr(eq + 1);
      methods.emplace_back(name, load_labels(fs::path(dir) / "labels.txt"));
    }
    const ComparisonTable table = compare_methods(data, methods, eva_points);
    fs::create_directories(eva_out);
    {
      std::ofstream out(fs::path(eva_out) / "report.csv");
      if (!out) throw std::runtime_error("cannot write report.csv");
      out << table.to_csv();
    }
    std::cout << table.to_text();
    if (eva_plot)
      write_cluster_svgs(data, methods.front().second, methods.front().first,
                         eva_out);
  });

  // ---- qb ----------------------------------------------------------------
  auto* qb = app.add_subcommand("qb", "threshold-based centroid clustering baseline");
  std::string qb_data, qb_out, qb_configfile;
  double qb_threshold = 0.0;
  int qb_points = 25;
  qb->add_option("--data", qb_data, "dataset directory")->required();
  qb->add_option("--threshold", qb_threshold, "merge distance, mm")->required();
  qb->add_option("--out", qb_out, "prediction directory")->required();
  qb->add_option("--n-points", qb_points, "resampling for distances");
  add_config_option(qb, qb_configfile);
  qb->callback([&]() {
    if (!qb_configfile.empty()) apply_config_file(qb, qb_configfile);
    const FiberSet data = load_dataset(qb_data, false);
    const QBModel model = quickbundles(resample_all(data, qb_points), qb_threshold);
    const std::vector<int> labels = labels_from_quickbundles(model, data);
    fs::create_directories(qb_out);
    {
      std::ofstream out(fs::path(qb_out) / "labels.txt");
      if (!out) throw std::runtime_error("cannot write labels.txt");
      for (int l : labels) out << l << "\n";
    }
    std::cout << model.centroids.size() << " clusters at threshold "
              << format_double(qb_threshold) << "; labels in " << qb_out << "\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

#include "dmvfc/synthetic.hpp"

#include <cmath>
#include <stdexcept>

#include "dmvfc/rng.hpp"

namespace dmvfc {

void SynthConfig::validate() const {
  if (n_geo_clusters < 1 || n_func_per_geo < 1 || fibers_per_cluster < 1)
    throw std::invalid_argument("synth config: cluster counts must be >= 1");
  if (geo_separation <= 0.0)
    throw std::invalid_argument("synth config: geo_separation must be > 0");
  if (geo_jitter < 0.0 || signal_noise_sd < 0.0)
    throw std::invalid_argument("synth config: jitter and noise must be >= 0");
  if (signal_length < 2)
    throw std::invalid_argument("synth config: signal_length must be >= 2");
  if (int(func_base_freqs.size()) != product_clusters())
    throw std::invalid_argument(
        "synth config: need one base frequency per product cluster (" +
        std::to_string(product_clusters()) + "), got " +
        std::to_string(func_base_freqs.size()));
  for (double f : func_base_freqs)
    if (!(f > 0.0))
      throw std::invalid_argument("synth config: base frequencies must be > 0");
}

namespace {

constexpr int kRawPoints = 40;
constexpr double kSignalAmplitude = 3.0;
constexpr double kDriftAmplitude = 0.5;
constexpr double kDriftFreq = 0.5;
constexpr double kDriftPhase = 0.9;
constexpr double kPi = 3.14159265358979323846;

Eigen::Vector3d bezier(const Eigen::Vector3d p[4], double t) {
  const double u = 1.0 - t;
  return u * u * u * p[0] + 3.0 * t * u * u * p[1] + 3.0 * t * t * u * p[2] +
         t * t * t * p[3];
}

}  // namespace

FiberSet generate(const SynthConfig& cfg) {
  cfg.validate();

  FiberSet fs;
  fs.bundle_name = "synthetic";
  std::int64_t next_id = 0;
  for (int g = 0; g < cfg.n_geo_clusters; ++g) {
    // 90 mm arch, lifted off the template plane, shifted per geo cluster
    const Eigen::Vector3d offset(0.0, cfg.geo_separation * g, 0.0);
    const Eigen::Vector3d base[4] = {
        Eigen::Vector3d(0, 0, 0) + offset, Eigen::Vector3d(30, 0, 15) + offset,
        Eigen::Vector3d(60, 0, 15) + offset, Eigen::Vector3d(90, 0, 0) + offset};

    for (int u = 0; u < cfg.n_func_per_geo; ++u) {
      const int cell = g * cfg.n_func_per_geo + u;
      const double freq = cfg.func_base_freqs[std::size_t(cell)];
      for (int i = 0; i < cfg.fibers_per_cluster; ++i, ++next_id) {
        Rng geo_rng(derive_seed(cfg.seed, std::uint64_t(next_id), 1));
        Rng sig_rng(derive_seed(cfg.seed, std::uint64_t(next_id), 2));

        // jitter one interior control point only: keeps template endpoints and
        // the bulk of the shape shared within the geo cluster
        Eigen::Vector3d ctrl[4] = {base[0], base[1], base[2], base[3]};
        for (int d = 0; d < 3; ++d) ctrl[1](d) += geo_rng.normal(0.0, cfg.geo_jitter);

        Fiber f;
        f.id = next_id;
        for (int p = 0; p < kRawPoints; ++p)
          f.points.push_back(bezier(ctrl, double(p) / double(kRawPoints - 1)));
        fs.fibers.push_back(std::move(f));

        EndpointSignals s;
        s.fiber_id = next_id;
        s.series.resize(2, cfg.signal_length);
        for (int e = 0; e < 2; ++e) {
          const double phase = 0.7 * freq + (e == 1 ? 1.0 : 0.0);
          for (int t = 0; t < cfg.signal_length; ++t) {
            const double x = double(t) / double(cfg.signal_length);
            s.series(e, t) =
                kSignalAmplitude * std::sin(2.0 * kPi * freq * x + phase) +
                kDriftAmplitude * std::sin(2.0 * kPi * kDriftFreq * x + kDriftPhase) +
                sig_rng.normal(0.0, cfg.signal_noise_sd);
          }
        }
        fs.signals.push_back(std::move(s));

        fs.true_labels.push_back(cell);
      }
    }
  }
  fs.validate();
  return fs;
}

std::vector<std::pair<std::string, SynthConfig>> benchmark_suite(std::uint64_t seed) {
  SynthConfig easy;
  easy.n_geo_clusters = 2;
  easy.n_func_per_geo = 2;
  easy.fibers_per_cluster = 50;
  easy.geo_separation = 20.0;
  easy.geo_jitter = 1.0;
  easy.signal_length = 1200;
  easy.func_base_freqs = {2.0, 5.0, 3.5, 6.5};
  easy.signal_noise_sd = 0.3;
  easy.seed = seed;

  SynthConfig func_only;
  func_only.n_geo_clusters = 1;
  func_only.n_func_per_geo = 4;
  func_only.fibers_per_cluster = 40;
  func_only.geo_separation = 20.0;
  func_only.geo_jitter = 1.0;
  func_only.signal_length = 1200;
  func_only.func_base_freqs = {2.0, 4.0, 6.0, 8.0};
  func_only.signal_noise_sd = 0.3;
  func_only.seed = seed;

  SynthConfig geo_only;
  geo_only.n_geo_clusters = 4;
  geo_only.n_func_per_geo = 1;
  geo_only.fibers_per_cluster = 40;
  geo_only.geo_separation = 20.0;
  geo_only.geo_jitter = 1.0;
  geo_only.signal_length = 1200;
  geo_only.func_base_freqs = {3.0, 3.0, 3.0, 3.0};
  geo_only.signal_noise_sd = 0.2;
  geo_only.seed = seed;

  return {{"easy", easy}, {"func-only", func_only}, {"geo-only", geo_only}};
}

}  // namespace dmvfc

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dmvfc/fiberset.hpp"

namespace dmvfc {

// Bundles are generated as a grid of product clusters: n_geo_clusters smooth
// curve templates x n_func_per_geo signal frequencies. Ground-truth labels
// index the product cell.
struct SynthConfig {
  int n_geo_clusters = 2;
  int n_func_per_geo = 2;
  int fibers_per_cluster = 50;
  double geo_separation = 20.0;  // mm between neighboring templates
  double geo_jitter = 1.0;       // mm, sd of the per-fiber control-point jitter
  int signal_length = 1200;
  std::vector<double> func_base_freqs;  // cycles per window, one per product cell
  double signal_noise_sd = 0.3;
  std::uint64_t seed = 0;

  int product_clusters() const { return n_geo_clusters * n_func_per_geo; }
  void validate() const;
};

FiberSet generate(const SynthConfig& cfg);

// The three fixed benchmark bundles: "easy" (separated in both views),
// "func-only" (one geometry, four signal groups), "geo-only" (four
// geometries, one signal group).
std::vector<std::pair<std::string, SynthConfig>> benchmark_suite(std::uint64_t seed);

}  // namespace dmvfc

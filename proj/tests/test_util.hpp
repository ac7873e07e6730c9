#pragma once

#include <filesystem>
#include <string>

#include "dmvfc/rng.hpp"

#include "dmvfc/fiberset.hpp"

namespace testutil {

// Fresh scratch directory under the build tree, wiped per use.
inline std::filesystem::path scratch_dir(const std::string& name) {
  std::filesystem::path p = std::filesystem::path(DMVFC_TEST_TMP) / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

// Random but always-valid FiberSet exercising awkward values: negative and
// subnormal-ish coordinates, non-contiguous ids, optional signals/labels.
inline dmvfc::FiberSet make_random_fiberset(dmvfc::Rng& rng) {
  dmvfc::FiberSet fs;
  fs.bundle_name = "bundle-" + std::to_string(rng.below(1000));
  const int n = rng.index(8);
  const bool with_signals = rng.uniform() < 0.5;
  const bool with_labels = rng.uniform() < 0.5;
  const int t_len = 2 + rng.index(5);
  std::int64_t next_id = std::int64_t(rng.below(5));
  for (int i = 0; i < n; ++i) {
    dmvfc::Fiber f;
    f.id = next_id;
    next_id += 1 + std::int64_t(rng.below(3));
    const int m = 2 + rng.index(5);
    for (int k = 0; k < m; ++k) {
      double scale = 1.0;
      const double pick = rng.uniform();
      if (pick < 0.1)
        scale = 1e-17;
      else if (pick < 0.2)
        scale = 1e12;
      f.points.push_back(Eigen::Vector3d(rng.normal() * scale,
                                         rng.normal() * scale,
                                         rng.normal() * scale));
    }
    fs.fibers.push_back(std::move(f));
    if (with_signals) {
      dmvfc::EndpointSignals s;
      s.fiber_id = fs.fibers.back().id;
      s.series.resize(2, t_len);
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < t_len; ++c) s.series(r, c) = rng.normal() * 10.0;
      fs.signals.push_back(std::move(s));
    }
    if (with_labels) fs.true_labels.push_back(rng.index(4));
  }
  return fs;
}

inline bool fibersets_identical(const dmvfc::FiberSet& a, const dmvfc::FiberSet& b) {
  if (a.bundle_name != b.bundle_name) return false;
  if (a.fibers.size() != b.fibers.size()) return false;
  for (std::size_t i = 0; i < a.fibers.size(); ++i) {
    if (a.fibers[i].id != b.fibers[i].id) return false;
    if (a.fibers[i].points.size() != b.fibers[i].points.size()) return false;
    for (std::size_t k = 0; k < a.fibers[i].points.size(); ++k)
      if (a.fibers[i].points[k] != b.fibers[i].points[k]) return false;
  }
  if (a.signals.size() != b.signals.size()) return false;
  for (std::size_t i = 0; i < a.signals.size(); ++i) {
    if (a.signals[i].fiber_id != b.signals[i].fiber_id) return false;
    if (a.signals[i].series.cols() != b.signals[i].series.cols()) return false;
    if (a.signals[i].series != b.signals[i].series) return false;
  }
  return a.true_labels == b.true_labels;
}

}  // namespace testutil

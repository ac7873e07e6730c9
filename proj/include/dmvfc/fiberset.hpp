#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace dmvfc {

struct Fiber {
  std::int64_t id = 0;
  std::vector<Eigen::Vector3d> points;  // ordered, >= 2
};

struct EndpointSignals {
  std::int64_t fiber_id = 0;
  // row 0: series at points.front(), row 1: series at points.back()
  Eigen::Matrix2Xd series;
};

// One bundle: fibers plus optional endpoint signals and ground-truth labels.
// Values are immutable by convention once constructed; nothing here mutates
// a FiberSet in place.
struct FiberSet {
  std::string bundle_name;
  std::vector<Fiber> fibers;
  std::vector<EndpointSignals> signals;    // empty, or one per fiber
  std::vector<int> true_labels;            // empty, or one per fiber

  bool has_signals() const { return !signals.empty(); }
  bool has_labels() const { return !true_labels.empty(); }
  int signal_length() const {
    return signals.empty() ? 0 : int(signals.front().series.cols());
  }

  // Throws format error on any invariant violation.
  void validate() const;
};

FiberSet load_fiberset(const std::filesystem::path& dir);
void save_fiberset(const FiberSet& fs, const std::filesystem::path& dir);

// Deterministic shuffle-and-cut partition; train size = round(fraction * n).
std::pair<std::vector<FiberSet>, std::vector<FiberSet>> split_dataset(
    const std::vector<FiberSet>& sets, double train_fraction, std::uint64_t seed);

}  // namespace dmvfc

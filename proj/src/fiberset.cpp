#include "dmvfc/fiberset.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include "dmvfc/rng.hpp"
#include "dmvfc/textio.hpp"

namespace dmvfc {

namespace fs = std::filesystem;

void FiberSet::validate() const {
  std::set<std::int64_t> seen;
  for (const Fiber& f : fibers) {
    if (f.id < 0)
      throw std::runtime_error("format error: fiber id " + std::to_string(f.id) +
                               " is negative");
    if (!seen.insert(f.id).second)
      throw std::runtime_error("format error: duplicate fiber id " +
                               std::to_string(f.id));
    if (f.points.size() < 2)
      throw std::runtime_error("format error: fiber " + std::to_string(f.id) +
                               " has fewer than 2 points");
    for (const Eigen::Vector3d& p : f.points)
      if (!p.allFinite())
        throw std::runtime_error("format error: fiber " + std::to_string(f.id) +
                                 " has non-finite coordinates");
  }
  if (!signals.empty()) {
    if (signals.size() != fibers.size())
      throw std::runtime_error(
          "format error: signal count " + std::to_string(signals.size()) +
          " does not match fiber count " + std::to_string(fibers.size()));
    const Eigen::Index t = signals.front().series.cols();
    for (std::size_t i = 0; i < signals.size(); ++i) {
      const EndpointSignals& s = signals[i];
      if (s.fiber_id != fibers[i].id)
        throw std::runtime_error("format error: signal record " +
                                 std::to_string(i) + " references fiber " +
                                 std::to_string(s.fiber_id) + ", expected " +
                                 std::to_string(fibers[i].id));
      if (s.series.cols() != t || s.series.cols() < 2)
        throw std::runtime_error("format error: signal for fiber " +
                                 std::to_string(s.fiber_id) +
                                 " has inconsistent length");
      if (!s.series.allFinite())
        throw std::runtime_error("format error: signal for fiber " +
                                 std::to_string(s.fiber_id) +
                                 " has non-finite values");
    }
  }
  if (!true_labels.empty() && true_labels.size() != fibers.size())
    throw std::runtime_error(
        "format error: label count " + std::to_string(true_labels.size()) +
        " does not match fiber count " + std::to_string(fibers.size()));
}

FiberSet load_fiberset(const fs::path& dir) {
  if (!fs::is_directory(dir))
    throw std::runtime_error("not a dataset: " + dir.string() +
                             " is not a directory");
  const fs::path meta_path = dir / "meta.txt";
  const fs::path fibers_path = dir / "fibers.txt";
  if (!fs::exists(meta_path) || !fs::exists(fibers_path))
    throw std::runtime_error("not a dataset: " + dir.string() +
                             " lacks meta.txt or fibers.txt");

  FiberSet out;
  long long n_fibers = 0;
  long long signal_length = 0;
  {
    TextReader meta(meta_path.string(), "meta.txt");
    meta.expect_literal("format");
    const std::string fmt = meta.expect_token("format name");
    if (fmt != "fset-v1")
      throw std::runtime_error("format error: meta.txt declares '" + fmt +
                               "', expected 'fset-v1'");
    meta.expect_literal("bundle");
    out.bundle_name = meta.expect_token("bundle name");
    meta.expect_literal("n_fibers");
    n_fibers = meta.expect_int("fiber count");
    meta.expect_literal("signal_length");
    signal_length = meta.expect_int("signal length");
    meta.expect_end();
    if (n_fibers < 0)
      throw std::runtime_error("format error: meta.txt: negative n_fibers");
    if (signal_length < 0)
      throw std::runtime_error("format error: meta.txt: negative signal_length");
  }

  {
    TextReader fr(fibers_path.string(), "fibers.txt");
    out.fibers.reserve(std::size_t(n_fibers));
    for (long long i = 0; i < n_fibers; ++i) {
      fr.expect_literal("fiber");
      Fiber f;
      f.id = fr.expect_int("fiber id");
      const long long m = fr.expect_int("point count");
      if (m < 2)
        throw std::runtime_error("format error: fibers.txt line " +
                                 std::to_string(fr.line()) + ": fiber " +
                                 std::to_string(f.id) +
                                 " declares fewer than 2 points");
      f.points.resize(std::size_t(m));
      for (long long k = 0; k < m; ++k)
        for (int d = 0; d < 3; ++d)
          f.points[std::size_t(k)][d] = fr.expect_double("coordinate");
      out.fibers.push_back(std::move(f));
    }
    fr.expect_end();
  }

  const fs::path signals_path = dir / "signals.txt";
  if (signal_length > 0) {
    if (!fs::exists(signals_path))
      throw std::runtime_error("format error: meta.txt declares signal_length " +
                               std::to_string(signal_length) +
                               " but signals.txt is missing");
    TextReader sr(signals_path.string(), "signals.txt");
    out.signals.reserve(std::size_t(n_fibers));
    for (long long i = 0; i < n_fibers; ++i) {
      sr.expect_literal("signal");
      EndpointSignals s;
      s.fiber_id = sr.expect_int("fiber id");
      s.series.resize(2, signal_length);
      for (int row = 0; row < 2; ++row)
        for (long long t = 0; t < signal_length; ++t)
          s.series(row, t) = sr.expect_double("signal value");
      out.signals.push_back(std::move(s));
    }
    sr.expect_end();
  } else if (fs::exists(signals_path)) {
    throw std::runtime_error(
        "format error: signals.txt present but meta.txt declares signal_length 0");
  }

  const fs::path labels_path = dir / "labels.txt";
  if (fs::exists(labels_path)) {
    TextReader lr(labels_path.string(), "labels.txt");
    out.true_labels.reserve(std::size_t(n_fibers));
    for (long long i = 0; i < n_fibers; ++i)
      out.true_labels.push_back(int(lr.expect_int("label")));
    lr.expect_end();
  }

  out.validate();
  return out;
}

void save_fiberset(const FiberSet& set, const fs::path& dir) {
  set.validate();
  fs::create_directories(dir);

  auto open = [&](const fs::path& p) {
    std::ofstream out(p, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    return out;
  };

  {
    std::ofstream meta = open(dir / "meta.txt");
    meta << "format fset-v1\n"
         << "bundle " << set.bundle_name << "\n"
         << "n_fibers " << set.fibers.size() << "\n"
         << "signal_length " << set.signal_length() << "\n";
  }
  {
    std::ofstream fb = open(dir / "fibers.txt");
    for (const Fiber& f : set.fibers) {
      fb << "fiber " << f.id << " " << f.points.size() << "\n";
      for (const Eigen::Vector3d& p : f.points)
        fb << format_double(p.x()) << " " << format_double(p.y()) << " "
           << format_double(p.z()) << "\n";
    }
  }
  const fs::path signals_path = dir / "signals.txt";
  if (set.has_signals()) {
    std::ofstream sg = open(signals_path);
    for (const EndpointSignals& s : set.signals) {
      sg << "signal " << s.fiber_id << "\n";
      for (int row = 0; row < 2; ++row) {
        for (Eigen::Index t = 0; t < s.series.cols(); ++t) {
          if (t) sg << " ";
          sg << format_double(s.series(row, t));
        }
        sg << "\n";
      }
    }
  } else {
    fs::remove(signals_path);
  }
  const fs::path labels_path = dir / "labels.txt";
  if (set.has_labels()) {
    std::ofstream lb = open(labels_path);
    for (int v : set.true_labels) lb << v << "\n";
  } else {
    fs::remove(labels_path);
  }
}

std::pair<std::vector<FiberSet>, std::vector<FiberSet>> split_dataset(
    const std::vector<FiberSet>& sets, double train_fraction, std::uint64_t seed) {
  if (sets.empty()) throw std::invalid_argument("split_dataset: empty input");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("split_dataset: train_fraction must be in (0,1)");

  std::vector<std::size_t> order(sets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  const auto n_train =
      std::size_t(std::llround(train_fraction * double(sets.size())));
  std::pair<std::vector<FiberSet>, std::vector<FiberSet>> out;
  for (std::size_t i = 0; i < order.size(); ++i)
    (i < n_train ? out.first : out.second).push_back(sets[order[i]]);
  return out;
}

}  // namespace dmvfc

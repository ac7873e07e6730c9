#include <fstream>
#include <set>

#include "doctest.h"
#include "dmvfc/fiberset.hpp"
#include "test_util.hpp"

using namespace dmvfc;

namespace {

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

// Minimal hand-written dataset: 2 fibers of 3 points, no signals.
void write_minimal(const std::filesystem::path& dir) {
  write_file(dir / "meta.txt",
             "format fset-v1\nbundle mini\nn_fibers 2\nsignal_length 0\n");
  write_file(dir / "fibers.txt",
             "# two short fibers\n"
             "fiber 0 3\n0 0 0\n1 0 0\n2 0 0\n"
             "fiber 1 3\n0 1 0\n1 1 0\n2 1 0\n");
}

}  // namespace

TEST_SUITE("fiberset") {

TEST_CASE("hand-written minimal dataset loads") {
  auto dir = testutil::scratch_dir("fs_minimal");
  write_minimal(dir);
  FiberSet fs = load_fiberset(dir);
  CHECK(fs.bundle_name == "mini");
  CHECK(fs.fibers.size() == 2);
  CHECK_FALSE(fs.has_signals());
  CHECK_FALSE(fs.has_labels());
  CHECK(fs.fibers[0].points.size() == 3);
  CHECK(fs.fibers[1].points[2] == Eigen::Vector3d(2, 1, 0));
}

TEST_CASE("save/load round-trip is the identity") {
  auto dir = testutil::scratch_dir("fs_roundtrip");
  Rng rng(20240801);
  int nonempty_signal_sets = 0;
  for (int rep = 0; rep < 200; ++rep) {
    FiberSet fs = testutil::make_random_fiberset(rng);
    if (fs.has_signals()) ++nonempty_signal_sets;
    save_fiberset(fs, dir / "d");
    FiberSet back = load_fiberset(dir / "d");
    REQUIRE(testutil::fibersets_identical(fs, back));
  }
  CHECK(nonempty_signal_sets > 20);  // generator actually exercises signals
}

TEST_CASE("second save to the same path overwrites") {
  auto dir = testutil::scratch_dir("fs_overwrite");
  Rng rng(7);
  FiberSet first = testutil::make_random_fiberset(rng);
  FiberSet second = testutil::make_random_fiberset(rng);
  second.bundle_name = "second";
  save_fiberset(first, dir / "d");
  save_fiberset(second, dir / "d");
  FiberSet back = load_fiberset(dir / "d");
  CHECK(testutil::fibersets_identical(second, back));
}

TEST_CASE("sets without signals produce no signals file") {
  auto dir = testutil::scratch_dir("fs_nosignals");
  FiberSet fs;
  fs.bundle_name = "b";
  fs.fibers.push_back({0, {Eigen::Vector3d::Zero(), Eigen::Vector3d::Ones()}});
  save_fiberset(fs, dir / "d");
  CHECK_FALSE(std::filesystem::exists(dir / "d" / "signals.txt"));
  CHECK_FALSE(std::filesystem::exists(dir / "d" / "labels.txt"));
}

TEST_CASE("labels file holds one integer per fiber") {
  auto dir = testutil::scratch_dir("fs_labels");
  FiberSet fs;
  fs.bundle_name = "b";
  fs.fibers.push_back({0, {Eigen::Vector3d::Zero(), Eigen::Vector3d::Ones()}});
  fs.fibers.push_back({1, {Eigen::Vector3d::Ones(), Eigen::Vector3d::Zero()}});
  fs.true_labels = {3, 1};
  save_fiberset(fs, dir / "d");
  std::ifstream in(dir / "d" / "labels.txt");
  int a = -1, b = -1;
  in >> a >> b;
  CHECK(a == 3);
  CHECK(b == 1);
  FiberSet back = load_fiberset(dir / "d");
  CHECK(back.true_labels == fs.true_labels);
}

TEST_CASE("missing directory or files give not-a-dataset errors") {
  auto dir = testutil::scratch_dir("fs_missing");
  CHECK_THROWS_WITH_AS(load_fiberset(dir / "absent"),
                       doctest::Contains("not a dataset"), std::runtime_error);
  // directory exists but is empty
  std::filesystem::create_directories(dir / "empty");
  CHECK_THROWS_WITH_AS(load_fiberset(dir / "empty"),
                       doctest::Contains("not a dataset"), std::runtime_error);
}

TEST_CASE("signal/fiber count mismatch is a format error") {
  auto dir = testutil::scratch_dir("fs_mismatch");
  write_file(dir / "meta.txt",
             "format fset-v1\nbundle b\nn_fibers 2\nsignal_length 3\n");
  write_file(dir / "fibers.txt",
             "fiber 0 2\n0 0 0\n1 0 0\nfiber 1 2\n0 1 0\n1 1 0\n");
  write_file(dir / "signals.txt", "signal 0\n1 2 3\n4 5 6\n");
  CHECK_THROWS_WITH_AS(load_fiberset(dir), doctest::Contains("format error"),
                       std::runtime_error);
}

TEST_CASE("malformed records are format errors naming the file") {
  auto dir = testutil::scratch_dir("fs_malformed");

  SUBCASE("non-numeric coordinate") {
    write_minimal(dir);
    write_file(dir / "fibers.txt", "fiber 0 2\n0 0 zero\n1 0 0\nfiber 1 2\n0 0 0\n1 1 1\n");
    CHECK_THROWS_WITH_AS(load_fiberset(dir), doctest::Contains("fibers.txt"),
                         std::runtime_error);
  }
  SUBCASE("NaN coordinate rejected") {
    write_minimal(dir);
    write_file(dir / "fibers.txt", "fiber 0 2\n0 0 nan\n1 0 0\nfiber 1 2\n0 0 0\n1 1 1\n");
    CHECK_THROWS_WITH_AS(load_fiberset(dir), doctest::Contains("format error"),
                         std::runtime_error);
  }
  SUBCASE("single-point fiber rejected") {
    write_minimal(dir);
    write_file(dir / "fibers.txt", "fiber 0 1\n0 0 0\nfiber 1 2\n0 0 0\n1 1 1\n");
    CHECK_THROWS_WITH_AS(load_fiberset(dir), doctest::Contains("format error"),
                         std::runtime_error);
  }
  SUBCASE("duplicate fiber id rejected") {
    write_minimal(dir);
    write_file(dir / "fibers.txt",
               "fiber 0 2\n0 0 0\n1 0 0\nfiber 0 2\n0 1 0\n1 1 0\n");
    CHECK_THROWS_WITH_AS(load_fiberset(dir), doctest::Contains("duplicate"),
                         std::runtime_error);
  }
  SUBCASE("wrong format tag rejected") {
    write_minimal(dir);
    write_file(dir / "meta.txt",
               "format fset-v2\nbundle b\nn_fibers 2\nsignal_length 0\n");
    CHECK_THROWS_WITH_AS(load_fiberset(dir), doctest::Contains("fset-v1"),
                         std::runtime_error);
  }
  SUBCASE("trailing garbage rejected") {
    write_minimal(dir);
    write_file(dir / "fibers.txt",
               "fiber 0 3\n0 0 0\n1 0 0\n2 0 0\n"
               "fiber 1 3\n0 1 0\n1 1 0\n2 1 0\nextra\n");
    CHECK_THROWS_WITH_AS(load_fiberset(dir), doctest::Contains("trailing"),
                         std::runtime_error);
  }
}

TEST_CASE("split sizes follow round(train_fraction * n)") {
  std::vector<FiberSet> sets(100);
  for (int i = 0; i < 100; ++i) {
    sets[i].bundle_name = std::to_string(i);
    sets[i].fibers.push_back(
        {0, {Eigen::Vector3d::Zero(), Eigen::Vector3d::Ones()}});
  }
  auto [train, test] = split_dataset(sets, 0.8, 42);
  CHECK(train.size() == 80);
  CHECK(test.size() == 20);

  std::vector<FiberSet> one(sets.begin(), sets.begin() + 1);
  auto [t1, t0] = split_dataset(one, 0.8, 42);
  CHECK(t1.size() == 1);
  CHECK(t0.size() == 0);
}

TEST_CASE("split is deterministic, disjoint, and exhaustive") {
  Rng rng(555);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 1 + rng.index(30);
    std::vector<FiberSet> sets{std::size_t(n)};
    for (int i = 0; i < n; ++i) {
      sets[std::size_t(i)].bundle_name = "s" + std::to_string(i);
      sets[std::size_t(i)].fibers.push_back(
          {0, {Eigen::Vector3d::Zero(), Eigen::Vector3d::Ones()}});
    }
    const double f = 0.05 + 0.9 * rng.uniform();
    const std::uint64_t seed = rng.next_u64();
    auto [train_a, test_a] = split_dataset(sets, f, seed);
    auto [train_b, test_b] = split_dataset(sets, f, seed);

    REQUIRE(train_a.size() == std::size_t(std::llround(f * n)));
    REQUIRE(train_a.size() + test_a.size() == std::size_t(n));

    std::set<std::string> names;
    for (const auto& s : train_a) names.insert(s.bundle_name);
    for (const auto& s : test_a) names.insert(s.bundle_name);
    REQUIRE(names.size() == std::size_t(n));  // disjoint + exhaustive

    REQUIRE(train_a.size() == train_b.size());
    for (std::size_t i = 0; i < train_a.size(); ++i)
      REQUIRE(train_a[i].bundle_name == train_b[i].bundle_name);
  }
}

TEST_CASE("split rejects out-of-range fractions and empty input") {
  std::vector<FiberSet> sets(2);
  for (auto& s : sets)
    s.fibers.push_back({0, {Eigen::Vector3d::Zero(), Eigen::Vector3d::Ones()}});
  CHECK_THROWS_AS(split_dataset(sets, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(split_dataset(sets, 1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(split_dataset({}, 0.5, 1), std::invalid_argument);
}

}  // TEST_SUITE

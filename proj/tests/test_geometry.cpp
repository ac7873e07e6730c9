#include <Eigen/Geometry>
#include <set>

#include "doctest.h"
#include "dmvfc/geometry.hpp"
#include "dmvfc/rng.hpp"
#include "oracles.hpp"

using namespace dmvfc;

namespace {

ResampledFiber make_rf(std::int64_t id,
                       const std::vector<Eigen::Vector3d>& pts) {
  ResampledFiber f;
  f.id = id;
  f.points.resize(Eigen::Index(pts.size()), 3);
  for (std::size_t k = 0; k < pts.size(); ++k)
    f.points.row(Eigen::Index(k)) = pts[k].transpose();
  return f;
}

ResampledFiber random_rf(Rng& rng, std::int64_t id, int n_p, double scale = 10.0) {
  std::vector<Eigen::Vector3d> pts;
  for (int k = 0; k < n_p; ++k)
    pts.push_back(Eigen::Vector3d(rng.normal() * scale, rng.normal() * scale,
                                  rng.normal() * scale));
  return make_rf(id, pts);
}

oracle::Curve to_curve(const ResampledFiber& f) {
  oracle::Curve c;
  for (Eigen::Index k = 0; k < f.points.rows(); ++k)
    c.push_back({f.points(k, 0), f.points(k, 1), f.points(k, 2)});
  return c;
}

ResampledFiber apply_rigid(const ResampledFiber& f, const Eigen::Matrix3d& r,
                           const Eigen::Vector3d& t) {
  ResampledFiber out = f;
  for (Eigen::Index k = 0; k < f.points.rows(); ++k)
    out.points.row(k) =
        (r * f.points.row(k).transpose() + t).transpose();
  return out;
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("resample of a straight segment places midpoints evenly") {
  Fiber f{7, {Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(1, 0, 0)}};
  ResampledFiber r = resample(f, 3);
  CHECK(r.id == 7);
  CHECK(r.points.row(0) == Eigen::RowVector3d(0, 0, 0));
  CHECK(r.points.row(1).isApprox(Eigen::RowVector3d(0.5, 0, 0), 1e-15));
  CHECK(r.points.row(2) == Eigen::RowVector3d(1, 0, 0));
}

TEST_CASE("resample with n_p = m on uniform spacing is the identity") {
  Fiber f{0,
          {Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(0, 2, 0),
           Eigen::Vector3d(0, 4, 0), Eigen::Vector3d(0, 6, 0)}};
  ResampledFiber r = resample(f, 4);
  for (int k = 0; k < 4; ++k)
    CHECK((r.points.row(k).transpose() - f.points[std::size_t(k)]).norm() ==
          doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("resample walks an L-shaped polyline by arc length") {
  // legs of length 3 and 4, total 7; n_p=8 gives points at arc 0..7
  Fiber f{0,
          {Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(3, 0, 0),
           Eigen::Vector3d(3, 4, 0)}};
  ResampledFiber r = resample(f, 8);
  for (int k = 0; k < 8; ++k) {
    const double arc = double(k);
    Eigen::Vector3d expect =
        arc <= 3.0 ? Eigen::Vector3d(arc, 0, 0) : Eigen::Vector3d(3, arc - 3.0, 0);
    CAPTURE(k);
    CHECK((r.points.row(k).transpose() - expect).norm() <= 1e-12);
  }
}

TEST_CASE("resample matches the arc-length walk oracle on random fibers") {
  Rng rng(101);
  for (int rep = 0; rep < 120; ++rep) {
    const int m = 2 + rng.index(10);
    const int n_p = 2 + rng.index(30);
    Fiber f{rep, {}};
    for (int k = 0; k < m; ++k)
      f.points.push_back(Eigen::Vector3d(rng.normal() * 20, rng.normal() * 20,
                                         rng.normal() * 20));
    ResampledFiber r = resample(f, n_p);
    oracle::Curve raw;
    for (const auto& p : f.points) raw.push_back({p.x(), p.y(), p.z()});
    oracle::Curve expect = oracle::resample_by_walk(raw, n_p);
    REQUIRE(r.points.rows() == n_p);
    for (int k = 0; k < n_p; ++k) {
      CAPTURE(rep);
      CAPTURE(k);
      REQUIRE(r.points(k, 0) == doctest::Approx(expect[std::size_t(k)][0]).epsilon(1e-9));
      REQUIRE(r.points(k, 1) == doctest::Approx(expect[std::size_t(k)][1]).epsilon(1e-9));
      REQUIRE(r.points(k, 2) == doctest::Approx(expect[std::size_t(k)][2]).epsilon(1e-9));
    }
    // endpoints preserved
    REQUIRE((r.points.row(0).transpose() - f.points.front()).norm() <= 1e-9);
    REQUIRE((r.points.row(n_p - 1).transpose() - f.points.back()).norm() <= 1e-9);
  }
}

TEST_CASE("resample rejects zero-length and undersized fibers") {
  Fiber zero{0, {Eigen::Vector3d(1, 1, 1), Eigen::Vector3d(1, 1, 1)}};
  CHECK_THROWS_WITH_AS(resample(zero, 5), doctest::Contains("degenerate"),
                       std::runtime_error);
  Fiber ok{0, {Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(1, 0, 0)}};
  CHECK_THROWS_AS(resample(ok, 1), std::invalid_argument);
}

TEST_CASE("mdf identity, flip, and translation cases") {
  Rng rng(5);
  ResampledFiber a = random_rf(rng, 0, 25);
  CHECK(mdf_distance(a, a) == 0.0);

  ResampledFiber rev = a;
  rev.points = a.points.colwise().reverse().eval();
  CHECK(mdf_distance(a, rev) == 0.0);

  ResampledFiber shifted = a;
  shifted.points.col(0).array() += 3.0;
  CHECK(mdf_distance(a, shifted) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("mdf matches the brute-force oracle on random 25-point pairs") {
  Rng rng(77);
  for (int rep = 0; rep < 150; ++rep) {
    ResampledFiber a = random_rf(rng, 0, 25);
    ResampledFiber b = random_rf(rng, 1, 25);
    const double got = mdf_distance(a, b);
    const double want = oracle::mdf(to_curve(a), to_curve(b));
    CAPTURE(rep);
    REQUIRE(got == doctest::Approx(want).epsilon(1e-12));
    REQUIRE(mdf_distance(b, a) == doctest::Approx(got).epsilon(1e-12));
    REQUIRE(got >= 0.0);
  }
}

TEST_CASE("mdf is invariant under simultaneous rigid motion") {
  Rng rng(999);
  for (int rep = 0; rep < 200; ++rep) {
    const int n_p = 2 + rng.index(20);
    ResampledFiber a = random_rf(rng, 0, n_p);
    ResampledFiber b = random_rf(rng, 1, n_p);
    Eigen::Quaterniond quat(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    quat.normalize();
    const Eigen::Matrix3d r = quat.toRotationMatrix();
    const Eigen::Vector3d t(rng.normal() * 50, rng.normal() * 50, rng.normal() * 50);
    const double before = mdf_distance(a, b);
    const double after = mdf_distance(apply_rigid(a, r, t), apply_rigid(b, r, t));
    CAPTURE(rep);
    REQUIRE(after == doctest::Approx(before).epsilon(1e-9));
  }
}

TEST_CASE("mdf treats orientation reversal as identity") {
  Rng rng(31);
  for (int rep = 0; rep < 200; ++rep) {
    ResampledFiber a = random_rf(rng, 0, 2 + rng.index(20));
    ResampledFiber rev = a;
    rev.points = a.points.colwise().reverse().eval();
    REQUIRE(mdf_distance(a, rev) == 0.0);
  }
}

TEST_CASE("mdf rejects point-count mismatch") {
  Rng rng(1);
  ResampledFiber a = random_rf(rng, 0, 5);
  ResampledFiber b = random_rf(rng, 1, 6);
  CHECK_THROWS_AS(mdf_distance(a, b), std::invalid_argument);
}

TEST_CASE("pairwise_mdf matches elementwise calls and is symmetric") {
  Rng rng(404);
  std::vector<ResampledFiber> fibers;
  for (int i = 0; i < 10; ++i) fibers.push_back(random_rf(rng, i, 12));
  Eigen::MatrixXd m = pairwise_mdf(fibers);
  REQUIRE(m.rows() == 10);
  for (int i = 0; i < 10; ++i) {
    REQUIRE(m(i, i) == 0.0);
    for (int j = 0; j < 10; ++j) {
      REQUIRE(m(i, j) == m(j, i));
      REQUIRE(m(i, j) == doctest::Approx(mdf_distance(fibers[std::size_t(i)],
                                                      fibers[std::size_t(j)]))
                             .epsilon(1e-15));
    }
  }

  Eigen::MatrixXd single = pairwise_mdf({fibers[0]});
  CHECK(single.rows() == 1);
  CHECK(single(0, 0) == 0.0);

  Eigen::MatrixXd dup = pairwise_mdf({fibers[0], fibers[0]});
  CHECK(dup(0, 1) == 0.0);
}

TEST_CASE("alpha_metric equals the brute-force pair mean") {
  Rng rng(88);
  ResampledFiber lone = random_rf(rng, 0, 8);
  CHECK(alpha_metric({lone}) == 0.0);

  // two straight fibers offset by 4 in y: every point pair is 4 apart
  ResampledFiber a = make_rf(0, {Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(10, 0, 0)});
  ResampledFiber b = make_rf(1, {Eigen::Vector3d(0, 4, 0), Eigen::Vector3d(10, 4, 0)});
  CHECK(alpha_metric({a, b}) == doctest::Approx(4.0).epsilon(1e-12));

  for (int rep = 0; rep < 100; ++rep) {
    std::vector<ResampledFiber> cluster;
    std::vector<oracle::Curve> curves;
    for (int i = 0; i < 5; ++i) {
      cluster.push_back(random_rf(rng, i, 9));
      curves.push_back(to_curve(cluster.back()));
    }
    CAPTURE(rep);
    REQUIRE(alpha_metric(cluster) ==
            doctest::Approx(oracle::alpha(curves)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(alpha_metric({}), std::invalid_argument);
}

TEST_CASE("alpha_metric is permutation invariant") {
  Rng rng(313);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<ResampledFiber> cluster;
    const int n = 2 + rng.index(5);
    for (int i = 0; i < n; ++i) cluster.push_back(random_rf(rng, i, 6));
    const double before = alpha_metric(cluster);
    rng.shuffle(cluster);
    REQUIRE(alpha_metric(cluster) == doctest::Approx(before).epsilon(1e-12));
  }
}

TEST_CASE("quickbundles groups identical fibers into one cluster") {
  Rng rng(9);
  ResampledFiber f = random_rf(rng, 0, 10);
  std::vector<ResampledFiber> fibers;
  for (int i = 0; i < 6; ++i) {
    ResampledFiber g = f;
    g.id = i;
    fibers.push_back(g);
  }
  QBModel model = quickbundles(fibers, 1.0);
  CHECK(model.centroids.size() == 1);
  CHECK(model.member_ids[0].size() == 6);
}

TEST_CASE("quickbundles separates far groups and splits under tiny thresholds") {
  Rng rng(10);
  std::vector<ResampledFiber> fibers;
  // two tight groups 100 apart, intra spread ~0.1
  for (int g = 0; g < 2; ++g)
    for (int i = 0; i < 8; ++i) {
      std::vector<Eigen::Vector3d> pts;
      for (int k = 0; k < 10; ++k)
        pts.push_back(Eigen::Vector3d(double(k), g * 100.0 + rng.normal() * 0.1,
                                      rng.normal() * 0.1));
      fibers.push_back(make_rf(g * 8 + i, pts));
    }
  QBModel two = quickbundles(fibers, 10.0);
  REQUIRE(two.centroids.size() == 2);
  std::set<std::int64_t> first(two.member_ids[0].begin(), two.member_ids[0].end());
  for (int i = 0; i < 8; ++i) CHECK(first.count(i) == 1);

  QBModel split = quickbundles(fibers, 1e-9);
  CHECK(split.centroids.size() == fibers.size());
}

TEST_CASE("quickbundles covers every fiber exactly once") {
  Rng rng(2024);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 1 + rng.index(20);
    std::vector<ResampledFiber> fibers;
    for (int i = 0; i < n; ++i) fibers.push_back(random_rf(rng, i, 6, 5.0));
    const double threshold = 0.5 + 20.0 * rng.uniform();
    QBModel model = quickbundles(fibers, threshold);
    std::set<std::int64_t> seen;
    std::size_t total = 0;
    for (std::size_t c = 0; c < model.member_ids.size(); ++c) {
      total += model.member_ids[c].size();
      for (std::int64_t id : model.member_ids[c]) seen.insert(id);
      REQUIRE(model.centroids[c].points.allFinite());
    }
    REQUIRE(total == std::size_t(n));
    REQUIRE(seen.size() == std::size_t(n));
  }
  CHECK_THROWS_AS(quickbundles({}, 0.0), std::invalid_argument);
}

}  // TEST_SUITE

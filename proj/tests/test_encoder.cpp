#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "dmvfc/encoder.hpp"
#include "dmvfc/rng.hpp"
#include "test_util.hpp"

using namespace dmvfc;

namespace {

std::vector<Eigen::MatrixXd> random_batch(Rng& rng, int b, int p, int c,
                                          double scale = 2.0) {
  std::vector<Eigen::MatrixXd> batch;
  for (int f = 0; f < b; ++f) {
    Eigen::MatrixXd m(p, c);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < c; ++j) m(i, j) = rng.normal() * scale;
    batch.push_back(std::move(m));
  }
  return batch;
}

EncoderConfig tiny_cfg() {
  EncoderConfig cfg;
  cfg.view = EncoderConfig::View::geometric;
  cfg.input_channels = 3;
  cfg.num_points = 6;
  cfg.knn_k = 2;
  cfg.layer_widths = {8, 8};
  cfg.embedding_dim = 3;
  return cfg;
}

}  // namespace

TEST_SUITE("encoder") {

TEST_CASE("identical config and seed give identical encoders") {
  EncoderConfig cfg = tiny_cfg();
  Encoder a(cfg, 99), b(cfg, 99);
  CHECK(a.parameters() == b.parameters());

  Rng rng(5);
  auto batch = random_batch(rng, 4, cfg.num_points, cfg.input_channels);
  Eigen::MatrixXd za = a.forward(batch);
  Eigen::MatrixXd zb = b.forward(batch);
  CHECK(za == zb);
  CHECK(za == a.forward(batch));  // evaluation is deterministic

  Encoder c(cfg, 100);
  CHECK(c.parameters() != a.parameters());
}

TEST_CASE("view shapes: geometric 25x3 and functional 2x600") {
  EncoderConfig geo;
  geo.view = EncoderConfig::View::geometric;
  geo.input_channels = 3;
  geo.num_points = 25;
  geo.knn_k = 5;
  Encoder ge(geo, 1);
  Rng rng(6);
  Eigen::MatrixXd zg = ge.forward(random_batch(rng, 3, 25, 3));
  CHECK(zg.rows() == 3);
  CHECK(zg.cols() == geo.embedding_dim);

  EncoderConfig fun;
  fun.view = EncoderConfig::View::functional;
  fun.input_channels = 600;
  fun.num_points = 2;
  fun.knn_k = 1;
  Encoder fe(fun, 2);
  Eigen::MatrixXd zf = fe.forward(random_batch(rng, 3, 2, 600));
  CHECK(zf.rows() == 3);
  CHECK(zf.cols() == fun.embedding_dim);

  CHECK_THROWS_AS(ge.forward(random_batch(rng, 2, 24, 3)), std::invalid_argument);
}

TEST_CASE("repeated fibers embed identically") {
  EncoderConfig cfg = tiny_cfg();
  Encoder enc(cfg, 3);
  Rng rng(8);
  auto batch = random_batch(rng, 2, cfg.num_points, cfg.input_channels);
  batch.push_back(batch[0]);
  Eigen::MatrixXd z = enc.forward(batch);
  CHECK(z.row(0) == z.row(2));  // bit-identical regardless of batch position

  // batch composition does not affect a fiber's embedding
  Eigen::MatrixXd solo = enc.forward({batch[1]});
  CHECK(z.row(1) == solo.row(0));
}

TEST_CASE("embedding is invariant to point permutations") {
  EncoderConfig cfg = tiny_cfg();
  Encoder enc(cfg, 11);
  EncoderConfig fun;
  fun.view = EncoderConfig::View::functional;
  fun.input_channels = 12;
  fun.num_points = 2;
  fun.knn_k = 1;
  Encoder fenc(fun, 12);

  Rng rng(13);
  for (int rep = 0; rep < 200; ++rep) {
    auto batch = random_batch(rng, 1, cfg.num_points, cfg.input_channels);
    Eigen::MatrixXd z = enc.forward(batch);

    std::vector<int> perm(std::size_t(cfg.num_points));
    for (int i = 0; i < cfg.num_points; ++i) perm[std::size_t(i)] = i;
    rng.shuffle(perm);
    Eigen::MatrixXd shuffled(cfg.num_points, cfg.input_channels);
    for (int i = 0; i < cfg.num_points; ++i)
      shuffled.row(i) = batch[0].row(perm[std::size_t(i)]);
    Eigen::MatrixXd zp = enc.forward({shuffled});
    REQUIRE((z - zp).norm() <= 1e-6 * (1.0 + z.norm()));

    auto fbatch = random_batch(rng, 1, 2, 12);
    Eigen::MatrixXd fz = fenc.forward(fbatch);
    Eigen::MatrixXd swapped(2, 12);
    swapped.row(0) = fbatch[0].row(1);
    swapped.row(1) = fbatch[0].row(0);
    Eigen::MatrixXd fzp = fenc.forward({swapped});
    REQUIRE((fz - fzp).norm() <= 1e-6 * (1.0 + fz.norm()));
  }
}

TEST_CASE("pairwise embedding distance basics and oracle") {
  EmbeddingBatch e;
  e.matrix.resize(3, 2);
  e.matrix << 0, 0, 3, 4, 1, 1;
  e.fiber_ids = {0, 1, 2};
  CHECK(pairwise_embedding_distance(e, 0, 0) == 0.0);
  CHECK(pairwise_embedding_distance(e, 0, 1) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK_THROWS_AS(pairwise_embedding_distance(e, 0, 3), std::invalid_argument);

  Rng rng(21);
  for (int rep = 0; rep < 100; ++rep) {
    EmbeddingBatch r;
    r.matrix.resize(4, 6);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 6; ++j) r.matrix(i, j) = rng.normal() * 3;
    r.fiber_ids = {0, 1, 2, 3};
    double manual = 0.0;
    for (int j = 0; j < 6; ++j) {
      const double d = r.matrix(1, j) - r.matrix(2, j);
      manual += d * d;
    }
    REQUIRE(pairwise_embedding_distance(r, 1, 2) ==
            doctest::Approx(std::sqrt(manual)).epsilon(1e-12));
  }
}

TEST_CASE("analytic gradients match central finite differences") {
  EncoderConfig cfg = tiny_cfg();
  Encoder enc(cfg, 17);
  Rng rng(18);
  auto batch = random_batch(rng, 3, cfg.num_points, cfg.input_channels);

  // loss: squared norm of the embedding matrix
  auto loss_at = [&](const Eigen::VectorXd& params) {
    Encoder probe = enc;
    probe.set_parameters(params);
    return probe.forward(batch).squaredNorm();
  };

  EncoderTrace trace;
  Eigen::MatrixXd z = enc.forward(batch, &trace);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(enc.parameter_count());
  enc.backward(trace, 2.0 * z, grad);
  REQUIRE(grad.allFinite());

  const Eigen::VectorXd base = enc.parameters();
  const double h = 1e-4;
  int checked = 0;
  for (int rep = 0; rep < 25; ++rep) {
    const Eigen::Index idx = Eigen::Index(rng.below(std::uint64_t(base.size())));
    Eigen::VectorXd plus = base, minus = base;
    plus(idx) += h;
    minus(idx) -= h;
    const double fd = (loss_at(plus) - loss_at(minus)) / (2.0 * h);
    const double an = grad(idx);
    const double rel =
        std::fabs(an - fd) / std::max({1e-6, std::fabs(an), std::fabs(fd)});
    CAPTURE(idx);
    REQUIRE(rel < 1e-3);
    ++checked;
  }
  CHECK(checked >= 20);
}

TEST_CASE("outputs and gradients stay finite across random batches") {
  EncoderConfig cfg = tiny_cfg();
  Encoder enc(cfg, 23);
  Rng rng(24);
  for (int rep = 0; rep < 200; ++rep) {
    const int b = 1 + rng.index(4);
    const double scale = rng.uniform() < 0.2 ? 50.0 : 2.0;
    auto batch = random_batch(rng, b, cfg.num_points, cfg.input_channels, scale);
    EncoderTrace trace;
    Eigen::MatrixXd z = enc.forward(batch, &trace);
    REQUIRE(z.allFinite());
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(enc.parameter_count());
    enc.backward(trace, 2.0 * z, grad);
    REQUIRE(grad.allFinite());
  }
}

TEST_CASE("checkpoint save/load round-trips parameters and config") {
  auto dir = testutil::scratch_dir("encoder_ckpt");
  EncoderConfig cfg = tiny_cfg();
  cfg.view = EncoderConfig::View::functional;
  Encoder enc(cfg, 31);
  enc.save(dir / "enc.txt");

  Encoder back = Encoder::load(dir / "enc.txt");
  CHECK(back.config() == cfg);
  CHECK(back.parameters() == enc.parameters());

  Rng rng(32);
  auto batch = random_batch(rng, 2, cfg.num_points, cfg.input_channels);
  CHECK(back.forward(batch) == enc.forward(batch));
}

TEST_CASE("checkpoint load fails loudly on mismatch or corruption") {
  auto dir = testutil::scratch_dir("encoder_ckpt_bad");
  EncoderConfig cfg = tiny_cfg();
  Encoder enc(cfg, 31);
  enc.save(dir / "enc.txt");

  // truncate the parameter list
  std::ifstream in(dir / "enc.txt");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  in.close();
  std::ofstream out(dir / "short.txt");
  out << text.substr(0, text.size() - 40);
  out.close();
  CHECK_THROWS_AS(Encoder::load(dir / "short.txt"), std::runtime_error);

  // header with a wrong parameter count
  const std::string key = "params ";
  std::string wrong = text;
  wrong.replace(wrong.find(key), key.size() + 3, key + "7\n#");
  std::ofstream out2(dir / "wrong.txt");
  out2 << wrong;
  out2.close();
  CHECK_THROWS_WITH_AS(Encoder::load(dir / "wrong.txt"),
                       doctest::Contains("model error"), std::runtime_error);

  CHECK_THROWS_AS(Encoder::load(dir / "absent.txt"), std::runtime_error);
}

TEST_CASE("config validation rejects bad settings") {
  EncoderConfig cfg = tiny_cfg();
  cfg.knn_k = cfg.num_points;
  CHECK_THROWS_AS(Encoder(cfg, 1), std::invalid_argument);
  cfg = tiny_cfg();
  cfg.embedding_dim = 1;
  CHECK_THROWS_AS(Encoder(cfg, 1), std::invalid_argument);
  cfg = tiny_cfg();
  cfg.layer_widths.clear();
  CHECK_THROWS_AS(Encoder(cfg, 1), std::invalid_argument);
  CHECK_THROWS_AS(view_from_name("spectral"), std::invalid_argument);
}

}  // TEST_SUITE

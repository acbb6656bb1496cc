#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "mczsl/checkpoint.hpp"
#include "mczsl/model.hpp"
#include "../support/oracles.hpp"

using namespace mczsl;
using namespace mczsl_test;

TEST_CASE("parameter layout is contiguous and sized from z, H, d") {
  const ParamLayout l(3, 8, 5);
  Index expected = 0;
  for (const TensorSlot& s : l.slots()) {
    CHECK(s.offset == expected);
    expected += s.size();
  }
  CHECK(l.total() == expected);
  CHECK(l[Tensor::phi_a_weight].rows == 3);
  CHECK(l[Tensor::phi_a_weight].cols == 8);
  CHECK(l[Tensor::proj_weight].size() == 64);
  CHECK(l[Tensor::out_weight].size() == 40);
  CHECK(l.total() == 3 * (3 * 8 + 8) + 2 + 64 + 8 + 2 + 40 + 5);
}

TEST_CASE("no output projection when hidden width equals feature width") {
  ModelConfig cfg;
  cfg.hidden_width = 6;
  const ModelParams p(cfg, 2, 6);
  CHECK_FALSE(p.has_output_projection());
  CHECK(p.layout()[Tensor::out_weight].size() == 0);
  CHECK(p.layout()[Tensor::out_bias].size() == 0);
  Rng rng(1);
  const Dense2D e = embed_attributes(init_params(cfg, 2, 6, rng), Dense2D(3, 2, 1.0f)).output;
  CHECK(e.cols() == 6);
}

TEST_CASE("trainable parameter count follows the ablations") {
  ModelConfig cfg;
  cfg.hidden_width = 8;
  const Index full = ParamLayout(3, 8, 5).total();
  CHECK(trainable_parameter_count(cfg, 3, 5) == full);
  cfg.normalization = Normalization::plain_cn;
  CHECK(trainable_parameter_count(cfg, 3, 5) == full - 4);
  cfg.disable_self_gating = true;
  CHECK(trainable_parameter_count(cfg, 3, 5) == full - 4 - 2 * (3 * 8 + 8));
}

TEST_CASE("initialization is seeded and bounded") {
  ModelConfig cfg;
  cfg.hidden_width = 16;
  cfg.init_seed = 9;
  const ModelParams a = init_params(cfg, 4, 10), b = init_params(cfg, 4, 10);
  CHECK(a == b);
  cfg.init_seed = 10;
  CHECK_FALSE(a == init_params(cfg, 4, 10));
  const double limit = std::sqrt(6.0 / (4 + 16));
  for (Real w : a.tensor(Tensor::phi_a_weight)) CHECK(std::abs(w) <= limit);
  for (Real v : a.tensor(Tensor::proj_bias)) CHECK(v == 0.0f);
  CHECK(a.tensor(Tensor::scn2_beta)[0] == 1.0f);
}

TEST_CASE("plain normalization pins alpha and beta") {
  ModelConfig cfg;
  cfg.hidden_width = 4;
  cfg.normalization = Normalization::plain_cn;
  ModelParams p(cfg, 2, 3);
  p.tensor(Tensor::scn1_alpha)[0] = 3;
  CHECK(p.scn1().alpha == 1.0f);
  cfg.normalization = Normalization::scn;
  ModelParams q(cfg, 2, 3);
  q.tensor(Tensor::scn1_alpha)[0] = 3;
  CHECK(q.scn1().alpha == 3.0f);
}

TEST_CASE("forward shapes and dimension checks") {
  Rng rng(2);
  ModelConfig cfg;
  cfg.hidden_width = 8;
  const ModelParams p = init_params(cfg, 3, 5, rng);
  const Dense2D attrs = random_matrix(rng, 4, 3), x = random_matrix(rng, 7, 5);
  const auto f = forward_logits(p, x, attrs);
  CHECK(f.output.rows() == 7);
  CHECK(f.output.cols() == 4);
  CHECK(predict(p, x, attrs).size() == 7);
  CHECK_THROWS_AS(forward_logits(p, random_matrix(rng, 2, 4), attrs), ShapeError);
  CHECK_THROWS_AS(forward_logits(p, x, random_matrix(rng, 4, 2)), ShapeError);
  CHECK_THROWS_AS(forward_logits(p, x, Dense2D(0, 3)), ShapeError);
  CHECK_THROWS_AS(ModelParams(cfg, 0, 5), std::invalid_argument);
}

TEST_CASE("argmax breaks ties toward the lower index") {
  const Dense2D z = Dense2D::from_rows({{1, 3, 3}, {2, 2, 2}, {-1, -5, 0}});
  CHECK(argmax_rows(z) == std::vector<int>{1, 0, 2});
}

TEST_CASE("gather_rows copies in order and checks bounds") {
  const Dense2D m = Dense2D::from_rows({{1, 2}, {3, 4}, {5, 6}});
  const std::vector<int> rows{2, 0, 2};
  const Dense2D g = gather_rows(m, rows);
  CHECK(g == Dense2D::from_rows({{5, 6}, {1, 2}, {5, 6}}));
  const std::vector<int> bad{3};
  CHECK_THROWS_AS(gather_rows(m, bad), ShapeError);
}

TEST_CASE("normalization names round trip") {
  for (Normalization n : {Normalization::none, Normalization::plain_cn, Normalization::scn}) {
    CHECK(parse_normalization(to_string(n)) == n);
  }
  CHECK_THROWS(parse_normalization("batch"));
}

TEST_CASE("checkpoint round trip for every configuration") {
  const auto dir = scratch_dir("ckpt");
  Rng rng(4);
  for (bool gating : {true, false}) {
    for (Normalization n : {Normalization::none, Normalization::plain_cn, Normalization::scn}) {
      for (Index hidden : {Index{5}, Index{7}}) {
        ModelConfig cfg;
        cfg.hidden_width = hidden;
        cfg.disable_self_gating = !gating;
        cfg.normalization = n;
        cfg.logit_scale = 7.5f;
        cfg.init_seed = 123456789012345ULL;
        const ModelParams p = init_params(cfg, 3, 5, rng);
        save_checkpoint(p, dir / "m.mczp");
        CHECK(load_checkpoint(dir / "m.mczp") == p);
      }
    }
  }
}

TEST_CASE("checkpoint loader reports the failure kind") {
  const auto dir = scratch_dir("ckpt-bad");
  ModelConfig cfg;
  cfg.hidden_width = 4;
  const ModelParams p = init_params(cfg, 2, 3);
  save_checkpoint(p, dir / "ok.mczp");
  const std::string bytes = file_bytes(dir / "ok.mczp");
  auto write = [&](const std::string& name, const std::string& data) {
    std::ofstream(dir / name, std::ios::binary) << data;
    return dir / name;
  };
  auto kind_of = [](const std::filesystem::path& path) {
    try {
      load_checkpoint(path);
    } catch (const DataError& e) {
      return e.kind();
    }
    FAIL("expected DataError");
    return DataErrorKind::io;
  };
  CHECK(kind_of(dir / "missing.mczp") == DataErrorKind::io);
  std::string magic = bytes;
  magic[0] = 'X';
  CHECK(kind_of(write("magic.mczp", magic)) == DataErrorKind::bad_magic);
  std::string version = bytes;
  version[4] = 9;
  CHECK(kind_of(write("version.mczp", version)) == DataErrorKind::version_mismatch);
  CHECK(kind_of(write("short.mczp", bytes.substr(0, bytes.size() - 3))) == DataErrorKind::truncated);
  CHECK(kind_of(write("long.mczp", bytes + "xx")) == DataErrorKind::invariant_violation);
  // Last value replaced with a NaN.
  std::string nan = bytes;
  const unsigned char qnan[4] = {0x00, 0x00, 0xC0, 0x7F};
  for (int i = 0; i < 4; ++i) nan[nan.size() - 4 + i] = static_cast<char>(qnan[i]);
  CHECK(kind_of(write("nan.mczp", nan)) == DataErrorKind::invariant_violation);
}

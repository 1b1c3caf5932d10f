#include <doctest.h>

#include <vector>

#include "adtheme/errors.hpp"
#include "adtheme/vispipe.hpp"

using namespace adtheme;

TEST_CASE("box normalization: coordinates over image size plus relative area") {
  std::vector<PixelBox> boxes = {{12.8, 12.8, 76.8, 76.8}, {0, 0, 128, 128}};
  Eigen::MatrixXd r = normalize_boxes(boxes, 128, 128);
  REQUIRE(r.rows() == 2);
  REQUIRE(r.cols() == 5);
  CHECK(r(0, 0) == doctest::Approx(0.1));
  CHECK(r(0, 1) == doctest::Approx(0.1));
  CHECK(r(0, 2) == doctest::Approx(0.6));
  CHECK(r(0, 3) == doctest::Approx(0.6));
  CHECK(r(0, 4) == doctest::Approx(0.25));
  // The full-image box spans (0,0)-(1,1) with relative area 1.
  CHECK(r(1, 0) == 0.0);
  CHECK(r(1, 1) == 0.0);
  CHECK(r(1, 2) == doctest::Approx(1.0));
  CHECK(r(1, 3) == doctest::Approx(1.0));
  CHECK(r(1, 4) == doctest::Approx(1.0));
  for (Eigen::Index i = 0; i < r.rows(); ++i)
    for (Eigen::Index j = 0; j < r.cols(); ++j) {
      CHECK(r(i, j) >= 0.0);
      CHECK(r(i, j) <= 1.0);
    }
  CHECK_THROWS_AS(normalize_boxes(boxes, 0, 128), DataError);
}

TEST_CASE("rectangular image normalizes each axis by its own extent") {
  Eigen::MatrixXd r = normalize_boxes({{10, 40, 30, 160}}, 100, 200);
  CHECK(r(0, 0) == doctest::Approx(0.1));
  CHECK(r(0, 1) == doctest::Approx(0.2));
  CHECK(r(0, 2) == doctest::Approx(0.3));
  CHECK(r(0, 3) == doctest::Approx(0.8));
  CHECK(r(0, 4) == doctest::Approx(20.0 * 120.0 / 20000.0));
}

TEST_CASE("region embedding: hand-computed 1x1 case") {
  // x = (2) through w_x = (3), b_x = 1 -> 7; r = (.1,.1,.6,.6,.25) through
  // w_r = (1,1,1,1,4)^T, b_r = 0.6 -> 3; average -> 5.
  RegionSet rs;
  rs.x = Eigen::MatrixXd::Constant(1, 1, 2.0);
  rs.r.resize(1, 5);
  rs.r << 0.1, 0.1, 0.6, 0.6, 0.25;
  VisEmbedParams p;
  p.w_x = Eigen::MatrixXd::Constant(1, 1, 3.0);
  p.b_x = Eigen::RowVectorXd::Constant(1, 1.0);
  p.w_r.resize(5, 1);
  p.w_r << 1.0, 1.0, 1.0, 1.0, 4.0;
  p.b_r = Eigen::RowVectorXd::Constant(1, 0.6);
  Eigen::MatrixXd v = embed_regions(rs, p);
  REQUIRE(v.rows() == 1);
  REQUIRE(v.cols() == 1);
  CHECK(v(0, 0) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("region embedding is affine: superposition over RoI features") {
  RegionSet a, b, sum;
  a.x = Eigen::MatrixXd::Random(3, 4);
  b.x = Eigen::MatrixXd::Random(3, 4);
  sum.x = a.x + b.x;
  a.r = Eigen::MatrixXd::Random(3, 5).cwiseAbs();
  b.r = a.r;
  sum.r = a.r;
  VisEmbedParams p;
  p.w_x = Eigen::MatrixXd::Random(4, 6);
  p.b_x = Eigen::RowVectorXd::Zero(6);
  p.w_r = Eigen::MatrixXd::Zero(5, 6);
  p.b_r = Eigen::RowVectorXd::Zero(6);
  Eigen::MatrixXd lhs = embed_regions(sum, p);
  Eigen::MatrixXd rhs = embed_regions(a, p) + embed_regions(b, p);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);

  VisEmbedParams bad = p;
  bad.w_x = Eigen::MatrixXd::Random(3, 6);
  CHECK_THROWS_AS(embed_regions(a, bad), ShapeError);
}

TEST_CASE("region_set mirrors the instance tensors") {
  AdInstance inst = synth_instance(11, 4, 7);
  RegionSet rs = region_set(inst);
  REQUIRE(rs.x.rows() == 4);
  REQUIRE(rs.x.cols() == 7);
  REQUIRE(rs.r.rows() == 4);
  CHECK(rs.x(2, 3) == inst.region_features[2][3]);
  CHECK(rs.r(1, 0) == doctest::Approx(inst.boxes[1].x1 / inst.width));
}

TEST_CASE("synthetic instances are deterministic in the seed") {
  AdInstance a = synth_instance(99, 5, 8, 3);
  AdInstance b = synth_instance(99, 5, 8, 3);
  AdInstance c = synth_instance(100, 5, 8, 3);
  CHECK(a.region_features == b.region_features);
  CHECK(a.ocr_text == b.ocr_text);
  CHECK(a.region_features != c.region_features);
  CHECK_NOTHROW(a.validate());
}

TEST_CASE("planted signals decode back out of region 0") {
  for (int k : {0, 3, 7}) {
    AdInstance inst = synth_instance(42 + static_cast<std::uint64_t>(k), 6, 8, k);
    CHECK(decode_planted_signal(inst) == k);
    REQUIRE(inst.labels.size() == 1);
    CHECK(inst.labels[0].phrase == std::vector<std::string>{"theme", std::to_string(k)});
    CHECK(inst.labels[0].score == 1.0);
  }
  CHECK_THROWS_AS(synth_instance(1, 0, 8), ConfigError);
  CHECK_THROWS_AS(synth_instance(1, 3, 8, 8), ConfigError);
}

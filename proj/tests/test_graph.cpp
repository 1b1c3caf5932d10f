#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "adtheme/errors.hpp"
#include "adtheme/graph.hpp"
#include "adtheme/rng.hpp"

using namespace adtheme;
using namespace adtheme::graph;

namespace {

Mat random_mat(Rng& rng, int rows, int cols, double scale = 1.0) {
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = scale * (2.0 * rng.unit() - 1.0);
  return m;
}

// Builds a graph from leaf ids and returns the scalar root.
using Builder = std::function<int(Tape&, const std::vector<int>&)>;

double eval_scalar(const Builder& f, const std::vector<Mat>& leaves) {
  Tape t;
  std::vector<int> ids;
  ids.reserve(leaves.size());
  for (const Mat& m : leaves) ids.push_back(t.leaf(m));
  return t.scalar(f(t, ids));
}

// Central-difference check of every entry of every leaf against the tape
// gradients. Relative error tolerance on max(1, |numeric|).
void gradcheck(const Builder& f, const std::vector<Mat>& leaves, double tol = 1e-6,
               double eps = 1e-5) {
  Tape t;
  std::vector<int> ids;
  ids.reserve(leaves.size());
  for (const Mat& m : leaves) ids.push_back(t.leaf(m));
  int root = f(t, ids);
  t.backward(root);
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    for (Eigen::Index i = 0; i < leaves[li].rows(); ++i) {
      for (Eigen::Index j = 0; j < leaves[li].cols(); ++j) {
        std::vector<Mat> plus = leaves, minus = leaves;
        plus[li](i, j) += eps;
        minus[li](i, j) -= eps;
        double numeric = (eval_scalar(f, plus) - eval_scalar(f, minus)) / (2.0 * eps);
        double analytic = t.grad(ids[li])(i, j);
        double denom = std::max(1.0, std::abs(numeric));
        INFO("leaf ", li, " entry (", i, ",", j, "): analytic ", analytic, " numeric ", numeric);
        CHECK(std::abs(analytic - numeric) / denom < tol);
      }
    }
  }
}

// Weights the output entries unevenly before summing so gradients are not
// trivially uniform.
int weighted_sum(Tape& t, int x) {
  const Mat& v = t.value(x);
  Mat w(v.rows(), v.cols());
  double k = 0.3;
  for (Eigen::Index i = 0; i < v.rows(); ++i)
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      w(i, j) = k;
      k = std::fmod(k * 1.7 + 0.31, 2.0) - 1.0;
    }
  return t.sum_all(t.hadamard(x, t.leaf(w)));
}

}  // namespace

TEST_CASE("gradcheck: elementwise and linear ops") {
  Rng rng = Rng::stream(123, "gradcheck");
  Mat a = random_mat(rng, 3, 4);
  Mat b = random_mat(rng, 3, 4);
  Mat c = random_mat(rng, 4, 2);
  Mat bias = random_mat(rng, 1, 4);

  gradcheck([](Tape& t, const std::vector<int>& l) { return weighted_sum(t, t.add(l[0], l[1])); },
            {a, b});
  gradcheck([](Tape& t, const std::vector<int>& l) { return weighted_sum(t, t.sub(l[0], l[1])); },
            {a, b});
  gradcheck(
      [](Tape& t, const std::vector<int>& l) { return weighted_sum(t, t.hadamard(l[0], l[1])); },
      {a, b});
  gradcheck(
      [](Tape& t, const std::vector<int>& l) { return weighted_sum(t, t.matmul(l[0], l[1])); },
      {a, c});
  gradcheck(
      [](Tape& t, const std::vector<int>& l) { return weighted_sum(t, t.add_rowvec(l[0], l[1])); },
      {a, bias});
  gradcheck([](Tape& t, const std::vector<int>& l) { return weighted_sum(t, t.scale(l[0], -1.7)); },
            {a});
  gradcheck(
      [](Tape& t, const std::vector<int>& l) { return weighted_sum(t, t.add_const(l[0], 2.5)); },
      {a});
  gradcheck([](Tape& t, const std::vector<int>& l) { return weighted_sum(t, t.transpose(l[0])); },
            {a});
}

TEST_CASE("gradcheck: slicing and concatenation") {
  Rng rng = Rng::stream(124, "gradcheck");
  Mat a = random_mat(rng, 4, 5);
  Mat b = random_mat(rng, 4, 3);
  Mat c = random_mat(rng, 2, 5);

  gradcheck(
      [](Tape& t, const std::vector<int>& l) { return weighted_sum(t, t.block(l[0], 1, 2, 2, 3)); },
      {a});
  gradcheck([](Tape& t, const std::vector<int>& l) { return weighted_sum(t, t.row(l[0], 2)); },
            {a});
  gradcheck(
      [](Tape& t, const std::vector<int>& l) { return weighted_sum(t, t.hcat({l[0], l[1]})); },
      {a, b});
  gradcheck(
      [](Tape& t, const std::vector<int>& l) { return weighted_sum(t, t.vcat({l[0], l[1]})); },
      {a, c});
  // Repeated rows must accumulate their gradients in the table.
  gradcheck(
      [](Tape& t, const std::vector<int>& l) {
        return weighted_sum(t, t.gather_rows(l[0], {2, 0, 2, 3}));
      },
      {a});
}

TEST_CASE("gradcheck: nonlinearities") {
  Rng rng = Rng::stream(125, "gradcheck");
  Mat a = random_mat(rng, 3, 4, 1.5);
  // Keep relu inputs away from the kink.
  Mat r = a;
  for (Eigen::Index i = 0; i < r.rows(); ++i)
    for (Eigen::Index j = 0; j < r.cols(); ++j)
      if (std::abs(r(i, j)) < 0.05) r(i, j) = 0.3;

  gradcheck([](Tape& t, const std::vector<int>& l) { return weighted_sum(t, t.gelu(l[0])); }, {a});
  gradcheck([](Tape& t, const std::vector<int>& l) { return weighted_sum(t, t.tanh_act(l[0])); },
            {a});
  gradcheck([](Tape& t, const std::vector<int>& l) { return weighted_sum(t, t.relu(l[0])); }, {r});
}

TEST_CASE("gradcheck: softmax, layer norm, reductions") {
  Rng rng = Rng::stream(126, "gradcheck");
  Mat a = random_mat(rng, 3, 5);
  Mat g = random_mat(rng, 1, 5);
  Mat b = random_mat(rng, 1, 5);
  Mask mask = {1, 1, 0, 1, 1};

  gradcheck(
      [&mask](Tape& t, const std::vector<int>& l) {
        return weighted_sum(t, t.softmax_rows(l[0], mask));
      },
      {a});
  gradcheck(
      [](Tape& t, const std::vector<int>& l) {
        return weighted_sum(t, t.layer_norm(l[0], l[1], l[2], 1e-5));
      },
      {a, g, b}, 2e-6);
  Mask rows_mask = {1, 0, 1};
  gradcheck(
      [&rows_mask](Tape& t, const std::vector<int>& l) {
        return weighted_sum(t, t.masked_mean_rows(l[0], rows_mask));
      },
      {a});
  gradcheck([](Tape& t, const std::vector<int>& l) { return t.sum_all(l[0]); }, {a});
}

TEST_CASE("gradcheck: dropout rescales kept entries") {
  Rng rng = Rng::stream(127, "gradcheck");
  Mat a = random_mat(rng, 3, 4);
  Mat keep(3, 4);
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 4; ++j) keep(i, j) = ((i + j) % 2 == 0) ? 1.0 : 0.0;
  gradcheck(
      [&keep](Tape& t, const std::vector<int>& l) {
        return weighted_sum(t, t.dropout(l[0], keep, 0.5));
      },
      {a});
  Tape t;
  int x = t.leaf(a);
  const Mat& out = t.value(t.dropout(x, keep, 0.5));
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 4; ++j)
      CHECK(out(i, j) == doctest::Approx(a(i, j) * keep(i, j) * 2.0));
}

TEST_CASE("gradcheck: softmax cross entropy and top-k cosines") {
  Rng rng = Rng::stream(128, "gradcheck");
  Mat logits = random_mat(rng, 1, 6);
  Eigen::RowVectorXd target(6);
  target << 0.5, 0.2, 0.1, 0.1, 0.1, 0.0;
  gradcheck(
      [&target](Tape& t, const std::vector<int>& l) { return t.softmax_xent(l[0], target); },
      {logits});

  // Distinct cosines so the top-k selection is stable under the probe eps.
  Mat term = random_mat(rng, 1, 4);
  Mat words(5, 4);
  words << 1.0, 0.2, -0.3, 0.4, -0.8, 0.5, 0.1, -0.2, 0.3, 0.9, 0.4, 0.1, -0.1, -0.7, 0.6, 0.8,
      0.5, -0.4, -0.9, 0.2;
  gradcheck(
      [](Tape& t, const std::vector<int>& l) {
        return weighted_sum(t, t.topk_cosines(l[0], l[1], 3));
      },
      {term, words}, 1e-5);
}

TEST_CASE("softmax rows: hand example and stochasticity") {
  // softmax of (0, ln 2, ln 3) is (1/6, 1/3, 1/2).
  Mat logits(1, 3);
  logits << 0.0, std::log(2.0), std::log(3.0);
  Mat s = softmax_rows_plain(logits, {1, 1, 1});
  CHECK(s(0, 0) == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  CHECK(s(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(s(0, 2) == doctest::Approx(0.5).epsilon(1e-12));

  Rng rng = Rng::stream(129, "gradcheck");
  Mat big = random_mat(rng, 6, 9, 3.0);
  Mask mask = {1, 0, 1, 1, 0, 1, 1, 1, 0};
  Mat sm = softmax_rows_plain(big, mask);
  for (Eigen::Index i = 0; i < sm.rows(); ++i) {
    CHECK(sm.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
    for (Eigen::Index j = 0; j < sm.cols(); ++j) {
      CHECK(sm(i, j) >= 0.0);
      if (!mask[static_cast<std::size_t>(j)]) CHECK(sm(i, j) == 0.0);
    }
  }
  CHECK_THROWS_AS(softmax_rows_plain(big, Mask(9, 0)), ShapeError);
}

TEST_CASE("layer norm: exact values with zero eps") {
  // Row (1, 3): mean 2, variance 1, normalized (-1, 1); gain (2, 3) and
  // bias (10, 20) give (8, 23).
  Tape t;
  Mat x(1, 2), g(1, 2), b(1, 2);
  x << 1.0, 3.0;
  g << 2.0, 3.0;
  b << 10.0, 20.0;
  const Mat& out = t.value(t.layer_norm(t.leaf(x), t.leaf(g), t.leaf(b), 0.0));
  CHECK(out(0, 0) == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(out(0, 1) == doctest::Approx(23.0).epsilon(1e-12));
}

TEST_CASE("gelu and tanh fixed points") {
  Tape t;
  Mat x(1, 3);
  x << 0.0, 1.0, -1.0;
  const Mat& gl = t.value(t.gelu(t.leaf(x)));
  CHECK(gl(0, 0) == 0.0);
  // gelu(1) = Phi(1) = 0.8413447460685429, gelu(-1) = -(1 - Phi(1)).
  CHECK(gl(0, 1) == doctest::Approx(0.8413447460685429).epsilon(1e-12));
  CHECK(gl(0, 2) == doctest::Approx(-0.15865525393145707).epsilon(1e-12));
  const Mat& th = t.value(t.tanh_act(t.leaf(x)));
  CHECK(th(0, 1) == doctest::Approx(std::tanh(1.0)).epsilon(1e-12));
}

TEST_CASE("softmax cross entropy: hand values") {
  // Logits (ln 3, 0) give probabilities (0.75, 0.25); the loss against a
  // one-hot first class is -ln 0.75.
  Tape t;
  Mat l1(1, 2);
  l1 << std::log(3.0), 0.0;
  Eigen::RowVectorXd one_hot(2);
  one_hot << 1.0, 0.0;
  CHECK(t.scalar(t.softmax_xent(t.leaf(l1), one_hot)) ==
        doctest::Approx(-std::log(0.75)).epsilon(1e-12));
  // Uniform logits against any normalized target cost ln K.
  Tape t2;
  Mat l2 = Mat::Zero(1, 5);
  Eigen::RowVectorXd soft(5);
  soft << 0.2, 0.3, 0.1, 0.25, 0.15;
  CHECK(t2.scalar(t2.softmax_xent(t2.leaf(l2), soft)) ==
        doctest::Approx(std::log(5.0)).epsilon(1e-12));
}

TEST_CASE("topk cosines: ordering, padding, zero vectors") {
  Tape t;
  Mat term(1, 2);
  term << 1.0, 0.0;
  Mat words(5, 2);
  words << 1.0, 0.0,  // cos 1
      0.0, 1.0,       // cos 0
      -1.0, 0.0,      // cos -1
      1.0, 1.0,       // cos sqrt(2)/2
      0.0, 0.0;       // zero row -> cos 0
  const Mat& out = t.value(t.topk_cosines(t.leaf(term), t.leaf(words), 7));
  CHECK(out.cols() == 7);
  CHECK(out(0, 0) == doctest::Approx(1.0));
  CHECK(out(0, 1) == doctest::Approx(std::sqrt(2.0) / 2.0));
  CHECK(out(0, 2) == doctest::Approx(0.0));
  CHECK(out(0, 3) == doctest::Approx(0.0));
  CHECK(out(0, 4) == doctest::Approx(-1.0));
  // Only 5 words: the remaining 2 slots carry the -1 sentinel.
  CHECK(out(0, 5) == -1.0);
  CHECK(out(0, 6) == -1.0);

  Tape t2;
  Mat zero_term = Mat::Zero(1, 2);
  const Mat& z = t2.value(t2.topk_cosines(t2.leaf(zero_term), t2.leaf(words), 2));
  CHECK(z(0, 0) == 0.0);
  CHECK(z(0, 1) == 0.0);
}

TEST_CASE("backward rejects non-scalar roots; shapes are enforced") {
  Tape t;
  int a = t.leaf(Mat::Ones(2, 3));
  CHECK_THROWS_AS(t.backward(a), ShapeError);
  CHECK_THROWS_AS(t.matmul(a, a), ShapeError);
  CHECK_THROWS_AS(t.add(a, t.leaf(Mat::Ones(3, 2))), ShapeError);
  CHECK_THROWS_AS(t.block(a, 1, 1, 2, 3), ShapeError);
  CHECK_THROWS_AS(t.gather_rows(a, {0, 2}), ShapeError);
}

TEST_CASE("cosine helper handles zero vectors") {
  Eigen::VectorXd a(2), b(2), z = Eigen::VectorXd::Zero(2);
  a << 1.0, 0.0;
  b << 1.0, 1.0;
  CHECK(cosine(a, b) == doctest::Approx(std::sqrt(2.0) / 2.0));
  CHECK(cosine(a, z) == 0.0);
  CHECK(cosine(z, z) == 0.0);
}

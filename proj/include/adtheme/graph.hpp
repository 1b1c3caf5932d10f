#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <deque>
#include <functional>
#include <vector>

namespace adtheme::graph {

using Mat = Eigen::MatrixXd;
using Mask = std::vector<std::uint8_t>;  // 1 = real entry, 0 = masked out

// Reverse-mode autodiff over dense double matrices. Nodes are appended in
// forward order, so iterating the tape backwards is a valid topological
// order for gradient accumulation. Graphs are rebuilt per step; there is no
// retained state between tapes.
class Tape {
 public:
  // Leaf node holding an externally supplied value.
  int leaf(Mat value);

  int matmul(int a, int b);
  int add(int a, int b);
  // a is n x d, bias is 1 x d, broadcast over rows.
  int add_rowvec(int a, int bias);
  int sub(int a, int b);
  int hadamard(int a, int b);
  int scale(int a, double s);
  int add_const(int a, double c);
  int transpose(int a);
  // Copy of a rectangular block; gradient scatters back into the source.
  int block(int a, int row0, int col0, int rows, int cols);
  int row(int a, int r);
  int hcat(const std::vector<int>& parts);
  int vcat(const std::vector<int>& parts);
  // Gather rows of `table` by index (embedding lookup).
  int gather_rows(int table, const std::vector<int>& idx);

  // Row-wise softmax; columns with key_mask 0 receive zero weight. At least
  // one unmasked column is required.
  int softmax_rows(int logits, const Mask& key_mask);
  // Per-row layer norm with 1 x d gain/bias.
  int layer_norm(int x, int gain, int bias, double eps);
  int gelu(int x);
  int tanh_act(int x);
  int relu(int x);
  // Elementwise x * keep / keep_prob with a fixed 0/1 mask.
  int dropout(int x, const Mat& keep, double keep_prob);

  // Mean of rows with mask 1; at least one row must be unmasked. 1 x d.
  int masked_mean_rows(int x, const Mask& mask);
  int sum_all(int x);  // 1 x 1

  // Fused stable softmax + cross entropy against a soft target distribution
  // (target sums to 1). logits and target are 1 x K; result is 1 x 1.
  int softmax_xent(int logits, const Eigen::RowVectorXd& target);

  // Cosine similarities between `term` (1 x d) and every row of `words`
  // (m x d), sorted descending, truncated or padded with -1 to length k.
  // Zero-norm vectors get cosine 0 and pass no gradient.
  int topk_cosines(int term, int words, int k);

  const Mat& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  const Mat& grad(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }
  double scalar(int id) const;

  // Seeds d(root)/d(root) = 1 and accumulates gradients into every node.
  // root must be 1 x 1.
  void backward(int root);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    std::function<void(Tape&, int)> pull;  // (tape, own id)
  };

  int push(Mat v, std::function<void(Tape&, int)> pull = nullptr);
  Mat& g(int id) { return nodes_[static_cast<std::size_t>(id)].grad; }

  std::deque<Node> nodes_;
};

// Plain (non-tape) helpers shared with the forward-only code paths.
Mat softmax_rows_plain(const Mat& logits, const Mask& key_mask);
double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

}  // namespace adtheme::graph

#include "adtheme/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "adtheme/errors.hpp"

namespace adtheme::graph {

namespace {
constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;
}  // namespace

int Tape::push(Mat v, std::function<void(Tape&, int)> pull) {
  nodes_.push_back(Node{std::move(v), Mat(), std::move(pull)});
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::leaf(Mat value) { return push(std::move(value)); }

double Tape::scalar(int id) const {
  const Mat& v = value(id);
  if (v.rows() != 1 || v.cols() != 1) throw ShapeError("scalar() on non 1x1 node");
  return v(0, 0);
}

int Tape::matmul(int a, int b) {
  const Mat& A = value(a);
  const Mat& B = value(b);
  if (A.cols() != B.rows()) throw ShapeError("matmul shape mismatch");
  return push(A * B, [a, b](Tape& t, int self) {
    const Mat& d = t.grad(self);
    t.g(a) += d * t.value(b).transpose();
    t.g(b) += t.value(a).transpose() * d;
  });
}

int Tape::add(int a, int b) {
  if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols())
    throw ShapeError("add shape mismatch");
  return push(value(a) + value(b), [a, b](Tape& t, int self) {
    t.g(a) += t.grad(self);
    t.g(b) += t.grad(self);
  });
}

int Tape::add_rowvec(int a, int bias) {
  const Mat& A = value(a);
  const Mat& B = value(bias);
  if (B.rows() != 1 || B.cols() != A.cols()) throw ShapeError("add_rowvec bias must be 1 x cols(a)");
  Mat out = A;
  out.rowwise() += B.row(0);
  return push(std::move(out), [a, bias](Tape& t, int self) {
    const Mat& d = t.grad(self);
    t.g(a) += d;
    t.g(bias) += d.colwise().sum();
  });
}

int Tape::sub(int a, int b) {
  if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols())
    throw ShapeError("sub shape mismatch");
  return push(value(a) - value(b), [a, b](Tape& t, int self) {
    t.g(a) += t.grad(self);
    t.g(b) -= t.grad(self);
  });
}

int Tape::hadamard(int a, int b) {
  if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols())
    throw ShapeError("hadamard shape mismatch");
  return push(value(a).cwiseProduct(value(b)), [a, b](Tape& t, int self) {
    t.g(a) += t.grad(self).cwiseProduct(t.value(b));
    t.g(b) += t.grad(self).cwiseProduct(t.value(a));
  });
}

int Tape::scale(int a, double s) {
  return push(value(a) * s, [a, s](Tape& t, int self) { t.g(a) += t.grad(self) * s; });
}

int Tape::add_const(int a, double c) {
  return push(value(a).array() + c, [a](Tape& t, int self) { t.g(a) += t.grad(self); });
}

int Tape::transpose(int a) {
  return push(value(a).transpose(), [a](Tape& t, int self) { t.g(a) += t.grad(self).transpose(); });
}

int Tape::block(int a, int row0, int col0, int rows, int cols) {
  const Mat& A = value(a);
  if (row0 < 0 || col0 < 0 || row0 + rows > A.rows() || col0 + cols > A.cols())
    throw ShapeError("block out of range");
  return push(A.block(row0, col0, rows, cols), [a, row0, col0, rows, cols](Tape& t, int self) {
    t.g(a).block(row0, col0, rows, cols) += t.grad(self);
  });
}

int Tape::row(int a, int r) { return block(a, r, 0, 1, static_cast<int>(value(a).cols())); }

int Tape::hcat(const std::vector<int>& parts) {
  if (parts.empty()) throw ShapeError("hcat of nothing");
  Eigen::Index rows = value(parts[0]).rows();
  Eigen::Index cols = 0;
  for (int p : parts) {
    if (value(p).rows() != rows) throw ShapeError("hcat row mismatch");
    cols += value(p).cols();
  }
  Mat out(rows, cols);
  Eigen::Index c = 0;
  for (int p : parts) {
    out.middleCols(c, value(p).cols()) = value(p);
    c += value(p).cols();
  }
  return push(std::move(out), [parts](Tape& t, int self) {
    Eigen::Index c = 0;
    for (int p : parts) {
      Eigen::Index w = t.value(p).cols();
      t.g(p) += t.grad(self).middleCols(c, w);
      c += w;
    }
  });
}

int Tape::vcat(const std::vector<int>& parts) {
  if (parts.empty()) throw ShapeError("vcat of nothing");
  Eigen::Index cols = value(parts[0]).cols();
  Eigen::Index rows = 0;
  for (int p : parts) {
    if (value(p).cols() != cols) throw ShapeError("vcat col mismatch");
    rows += value(p).rows();
  }
  Mat out(rows, cols);
  Eigen::Index r = 0;
  for (int p : parts) {
    out.middleRows(r, value(p).rows()) = value(p);
    r += value(p).rows();
  }
  return push(std::move(out), [parts](Tape& t, int self) {
    Eigen::Index r = 0;
    for (int p : parts) {
      Eigen::Index h = t.value(p).rows();
      t.g(p) += t.grad(self).middleRows(r, h);
      r += h;
    }
  });
}

int Tape::gather_rows(int table, const std::vector<int>& idx) {
  const Mat& T = value(table);
  Mat out(static_cast<Eigen::Index>(idx.size()), T.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= T.rows()) throw ShapeError("gather_rows index out of range");
    out.row(static_cast<Eigen::Index>(i)) = T.row(idx[i]);
  }
  return push(std::move(out), [table, idx](Tape& t, int self) {
    const Mat& d = t.grad(self);
    for (std::size_t i = 0; i < idx.size(); ++i)
      t.g(table).row(idx[i]) += d.row(static_cast<Eigen::Index>(i));
  });
}

Mat softmax_rows_plain(const Mat& logits, const Mask& key_mask) {
  if (key_mask.size() != static_cast<std::size_t>(logits.cols()))
    throw ShapeError("softmax mask length mismatch");
  bool any = false;
  for (auto m : key_mask) any = any || (m != 0);
  if (!any) throw ShapeError("softmax over fully masked keys");
  Mat out = Mat::Zero(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < logits.cols(); ++j)
      if (key_mask[static_cast<std::size_t>(j)]) mx = std::max(mx, logits(i, j));
    double z = 0.0;
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
      if (!key_mask[static_cast<std::size_t>(j)]) continue;
      out(i, j) = std::exp(logits(i, j) - mx);
      z += out(i, j);
    }
    out.row(i) /= z;
  }
  return out;
}

int Tape::softmax_rows(int logits, const Mask& key_mask) {
  Mat s = softmax_rows_plain(value(logits), key_mask);
  return push(std::move(s), [logits, key_mask](Tape& t, int self) {
    const Mat& s = t.value(self);
    const Mat& d = t.grad(self);
    Mat& dl = t.g(logits);
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      double dot = 0.0;
      for (Eigen::Index j = 0; j < s.cols(); ++j) dot += d(i, j) * s(i, j);
      for (Eigen::Index j = 0; j < s.cols(); ++j) {
        if (!key_mask[static_cast<std::size_t>(j)]) continue;
        dl(i, j) += s(i, j) * (d(i, j) - dot);
      }
    }
  });
}

int Tape::layer_norm(int x, int gain, int bias, double eps) {
  const Mat& X = value(x);
  const Mat& G = value(gain);
  const Mat& B = value(bias);
  if (G.rows() != 1 || B.rows() != 1 || G.cols() != X.cols() || B.cols() != X.cols())
    throw ShapeError("layer_norm gain/bias must be 1 x cols(x)");
  const double n = static_cast<double>(X.cols());
  Mat out(X.rows(), X.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    double mu = X.row(i).mean();
    double var = (X.row(i).array() - mu).square().sum() / n;
    Eigen::RowVectorXd nh = (X.row(i).array() - mu) / std::sqrt(var + eps);
    out.row(i) = nh.cwiseProduct(G.row(0)) + B.row(0);
  }
  return push(std::move(out), [x, gain, bias, eps](Tape& t, int self) {
    const Mat& X = t.value(x);
    const Mat& G = t.value(gain);
    const Mat& d = t.grad(self);
    const double n = static_cast<double>(X.cols());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      double mu = X.row(i).mean();
      double var = (X.row(i).array() - mu).square().sum() / n;
      double inv = 1.0 / std::sqrt(var + eps);
      Eigen::RowVectorXd nh = (X.row(i).array() - mu) * inv;
      t.g(bias).row(0) += d.row(i);
      t.g(gain).row(0) += d.row(i).cwiseProduct(nh);
      Eigen::RowVectorXd dn = d.row(i).cwiseProduct(G.row(0));
      double m1 = dn.mean();
      double m2 = dn.cwiseProduct(nh).mean();
      t.g(x).row(i) += inv * (dn.array() - m1 - nh.array() * m2).matrix();
    }
  });
}

int Tape::gelu(int x) {
  // Exact erf form; the derivative is Phi(x) + x*phi(x).
  Mat out = value(x).unaryExpr(
      [](double v) { return 0.5 * v * (1.0 + std::erf(v * kInvSqrt2)); });
  return push(std::move(out), [x](Tape& t, int self) {
    const Mat& X = t.value(x);
    Mat dgelu = X.unaryExpr([](double v) {
      double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
      double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
      return cdf + v * pdf;
    });
    t.g(x) += t.grad(self).cwiseProduct(dgelu);
  });
}

int Tape::tanh_act(int x) {
  Mat out = value(x).array().tanh();
  return push(std::move(out), [x](Tape& t, int self) {
    const Mat& y = t.value(self);
    t.g(x) += t.grad(self).cwiseProduct((1.0 - y.array().square()).matrix());
  });
}

int Tape::relu(int x) {
  Mat out = value(x).cwiseMax(0.0);
  return push(std::move(out), [x](Tape& t, int self) {
    const Mat& X = t.value(x);
    Mat m = (X.array() > 0.0).cast<double>();
    t.g(x) += t.grad(self).cwiseProduct(m);
  });
}

int Tape::dropout(int x, const Mat& keep, double keep_prob) {
  const Mat& X = value(x);
  if (keep.rows() != X.rows() || keep.cols() != X.cols()) throw ShapeError("dropout mask shape mismatch");
  if (keep_prob <= 0.0) throw ShapeError("dropout keep_prob must be > 0");
  Mat scaled = keep / keep_prob;
  return push(X.cwiseProduct(scaled), [x, scaled](Tape& t, int self) {
    t.g(x) += t.grad(self).cwiseProduct(scaled);
  });
}

int Tape::masked_mean_rows(int x, const Mask& mask) {
  const Mat& X = value(x);
  if (mask.size() != static_cast<std::size_t>(X.rows())) throw ShapeError("masked_mean_rows mask length mismatch");
  int count = 0;
  Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(X.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    sum += X.row(i);
    ++count;
  }
  if (count == 0) throw ShapeError("masked_mean_rows: all rows masked");
  Mat out = sum / static_cast<double>(count);
  return push(std::move(out), [x, mask, count](Tape& t, int self) {
    const Mat& d = t.grad(self);
    for (Eigen::Index i = 0; i < t.value(x).rows(); ++i)
      if (mask[static_cast<std::size_t>(i)]) t.g(x).row(i) += d.row(0) / static_cast<double>(count);
  });
}

int Tape::sum_all(int x) {
  Mat out(1, 1);
  out(0, 0) = value(x).sum();
  return push(std::move(out), [x](Tape& t, int self) {
    t.g(x).array() += t.grad(self)(0, 0);
  });
}

int Tape::softmax_xent(int logits, const Eigen::RowVectorXd& target) {
  const Mat& L = value(logits);
  if (L.rows() != 1 || L.cols() != target.cols()) throw ShapeError("softmax_xent shape mismatch");
  double mx = L.row(0).maxCoeff();
  double z = (L.row(0).array() - mx).exp().sum();
  double lse = mx + std::log(z);
  double loss = lse - (target.array() * L.row(0).array()).sum();
  Mat out(1, 1);
  out(0, 0) = loss;
  return push(std::move(out), [logits, target](Tape& t, int self) {
    const Mat& L = t.value(logits);
    double mx = L.row(0).maxCoeff();
    Eigen::RowVectorXd p = (L.row(0).array() - mx).exp();
    p /= p.sum();
    t.g(logits).row(0) += t.grad(self)(0, 0) * (p - target);
  });
}

int Tape::topk_cosines(int term, int words, int k) {
  const Mat& T = value(term);
  const Mat& W = value(words);
  if (T.rows() != 1 || T.cols() != W.cols()) throw ShapeError("topk_cosines shape mismatch");
  if (k < 1) throw ShapeError("topk_cosines k must be >= 1");
  const int m = static_cast<int>(W.rows());
  const double tn = T.row(0).norm();
  std::vector<double> cs(static_cast<std::size_t>(m), 0.0);
  for (int j = 0; j < m; ++j) {
    double wn = W.row(j).norm();
    if (tn > 0.0 && wn > 0.0) cs[static_cast<std::size_t>(j)] = T.row(0).dot(W.row(j)) / (tn * wn);
  }
  std::vector<int> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&cs](int a, int b) {
    return cs[static_cast<std::size_t>(a)] > cs[static_cast<std::size_t>(b)];
  });
  const int taken = std::min(k, m);
  Mat out = Mat::Constant(1, k, -1.0);
  for (int s = 0; s < taken; ++s) out(0, s) = cs[static_cast<std::size_t>(order[static_cast<std::size_t>(s)])];
  return push(std::move(out), [term, words, order, taken](Tape& t, int self) {
    const Mat& T = t.value(term);
    const Mat& W = t.value(words);
    const double tn = T.row(0).norm();
    for (int s = 0; s < taken; ++s) {
      int j = order[static_cast<std::size_t>(s)];
      double wn = W.row(j).norm();
      if (tn <= 0.0 || wn <= 0.0) continue;
      double c = T.row(0).dot(W.row(j)) / (tn * wn);
      double dc = t.grad(self)(0, s);
      t.g(term).row(0) += dc * (W.row(j) / (tn * wn) - c * T.row(0) / (tn * tn));
      t.g(words).row(j) += dc * (T.row(0) / (tn * wn) - c * W.row(j) / (wn * wn));
    }
  });
}

void Tape::backward(int root) {
  if (value(root).rows() != 1 || value(root).cols() != 1)
    throw ShapeError("backward root must be 1x1");
  for (auto& n : nodes_) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
  g(root)(0, 0) = 1.0;
  for (int i = root; i >= 0; --i) {
    auto& n = nodes_[static_cast<std::size_t>(i)];
    if (n.pull) n.pull(*this, i);
  }
}

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double na = a.norm(), nb = b.norm();
  if (na <= 0.0 || nb <= 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

}  // namespace adtheme::graph

#include "adtheme/encoder.hpp"

#include <cmath>

#include "adtheme/errors.hpp"

namespace adtheme {

using graph::Mask;
using graph::Mat;
using graph::Tape;

namespace {
constexpr double kLnEps = 1e-5;
}

EncoderConfig EncoderConfig::toy() {
  EncoderConfig cfg;
  cfg.lang_layers = 2;
  cfg.obj_layers = 2;
  cfg.cross_layers = 1;
  cfg.d = 32;
  cfg.heads = 4;
  cfg.ff_mult = 4;
  return cfg;
}

void EncoderConfig::validate() const {
  if (d < 1) throw ConfigError("encoder dim must be >= 1");
  if (heads < 1) throw ConfigError("encoder heads must be >= 1");
  if (d % heads != 0) throw ConfigError("encoder dim must be divisible by heads");
  if (lang_layers < 0 || obj_layers < 0 || cross_layers < 0)
    throw ConfigError("encoder layer counts must be >= 0");
  if (ff_mult < 1) throw ConfigError("encoder ff multiplier must be >= 1");
}

namespace {

Mat init_weight(int rows, int cols, Rng& rng) {
  Mat w(rows, cols);
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.trunc_normal_f32(0.02);
  return w;
}

void add_attention(ParamStore& params, const std::string& prefix, int d, Rng& rng) {
  params.insert(prefix + ".wq", init_weight(d, d, rng));
  params.insert(prefix + ".bq", Mat::Zero(1, d));
  params.insert(prefix + ".wk", init_weight(d, d, rng));
  params.insert(prefix + ".bk", Mat::Zero(1, d));
  params.insert(prefix + ".wv", init_weight(d, d, rng));
  params.insert(prefix + ".bv", Mat::Zero(1, d));
  params.insert(prefix + ".wo", init_weight(d, d, rng));
  params.insert(prefix + ".bo", Mat::Zero(1, d));
  params.insert(prefix + ".ln.g", Mat::Ones(1, d));
  params.insert(prefix + ".ln.b", Mat::Zero(1, d));
}

void add_ff(ParamStore& params, const std::string& prefix, int d, int ff, Rng& rng) {
  params.insert(prefix + ".w1", init_weight(d, ff, rng));
  params.insert(prefix + ".b1", Mat::Zero(1, ff));
  params.insert(prefix + ".w2", init_weight(ff, d, rng));
  params.insert(prefix + ".b2", Mat::Zero(1, d));
  params.insert(prefix + ".ln.g", Mat::Ones(1, d));
  params.insert(prefix + ".ln.b", Mat::Zero(1, d));
}

void add_block(ParamStore& params, const std::string& prefix, const EncoderConfig& cfg,
               Rng& rng) {
  add_attention(params, prefix + ".self", cfg.d, rng);
  add_ff(params, prefix + ".ff", cfg.d, cfg.ff_dim(), rng);
}

}  // namespace

void add_encoder_params(ParamStore& params, const EncoderConfig& cfg, Rng& rng) {
  cfg.validate();
  for (int i = 0; i < cfg.lang_layers; ++i)
    add_block(params, "enc.lang." + std::to_string(i), cfg, rng);
  for (int i = 0; i < cfg.obj_layers; ++i)
    add_block(params, "enc.obj." + std::to_string(i), cfg, rng);
  for (int i = 0; i < cfg.cross_layers; ++i) {
    const std::string base = "enc.cross." + std::to_string(i);
    add_attention(params, base + ".lang.xatt", cfg.d, rng);
    add_attention(params, base + ".vis.xatt", cfg.d, rng);
    add_block(params, base + ".lang", cfg, rng);
    add_block(params, base + ".vis", cfg, rng);
  }
}

NodeMap register_params(Tape& tape, const ParamStore& params) {
  NodeMap nodes;
  for (const auto& [name, value] : params) nodes.emplace(name, tape.leaf(value));
  return nodes;
}

GradMap collect_grads(const Tape& tape, const NodeMap& nodes, const ParamStore& params) {
  GradMap grads;
  for (const auto& [name, id] : nodes) {
    const Mat& g = tape.grad(id);
    grads[name] = g.size() ? g : Mat::Zero(params.at(name).rows(), params.at(name).cols());
  }
  return grads;
}

namespace build {

namespace {
int param(const NodeMap& p, const std::string& name) {
  auto it = p.find(name);
  if (it == p.end()) throw ShapeError("missing parameter '" + name + "'");
  return it->second;
}
}  // namespace

int attention_sublayer(Tape& t, const NodeMap& p, const std::string& prefix, int x_q, int x_kv,
                       const Mask& kv_mask, int heads) {
  const auto d = static_cast<int>(t.value(x_q).cols());
  if (d % heads != 0) throw ShapeError("attention width not divisible by heads");
  const int dh = d / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));

  int q = t.add_rowvec(t.matmul(x_q, param(p, prefix + ".wq")), param(p, prefix + ".bq"));
  int k = t.add_rowvec(t.matmul(x_kv, param(p, prefix + ".wk")), param(p, prefix + ".bk"));
  int v = t.add_rowvec(t.matmul(x_kv, param(p, prefix + ".wv")), param(p, prefix + ".bv"));

  const auto m = static_cast<int>(t.value(x_q).rows());
  const auto n = static_cast<int>(t.value(x_kv).rows());
  std::vector<int> head_outs;
  for (int h = 0; h < heads; ++h) {
    int qh = t.block(q, 0, h * dh, m, dh);
    int kh = t.block(k, 0, h * dh, n, dh);
    int vh = t.block(v, 0, h * dh, n, dh);
    int logits = t.scale(t.matmul(qh, t.transpose(kh)), inv_sqrt);
    int weights = t.softmax_rows(logits, kv_mask);
    head_outs.push_back(t.matmul(weights, vh));
  }
  int merged = heads == 1 ? head_outs.front() : t.hcat(head_outs);
  int out = t.add_rowvec(t.matmul(merged, param(p, prefix + ".wo")), param(p, prefix + ".bo"));
  return t.layer_norm(t.add(x_q, out), param(p, prefix + ".ln.g"), param(p, prefix + ".ln.b"),
                      kLnEps);
}

int ff_sublayer(Tape& t, const NodeMap& p, const std::string& prefix, int x) {
  int h = t.gelu(t.add_rowvec(t.matmul(x, param(p, prefix + ".w1")), param(p, prefix + ".b1")));
  int o = t.add_rowvec(t.matmul(h, param(p, prefix + ".w2")), param(p, prefix + ".b2"));
  return t.layer_norm(t.add(x, o), param(p, prefix + ".ln.g"), param(p, prefix + ".ln.b"),
                      kLnEps);
}

int encoder_stack(Tape& t, const NodeMap& p, const std::string& prefix, int x, const Mask& mask,
                  int layers, int heads) {
  for (int i = 0; i < layers; ++i) {
    const std::string base = prefix + "." + std::to_string(i);
    x = attention_sublayer(t, p, base + ".self", x, x, mask, heads);
    x = ff_sublayer(t, p, base + ".ff", x);
  }
  return x;
}

CrossOut cross_stack(Tape& t, const NodeMap& p, int lang, int vis, const Mask& lmask,
                     const Mask& vmask, int layers, int heads) {
  for (int i = 0; i < layers; ++i) {
    const std::string base = "enc.cross." + std::to_string(i);
    // Both cross-attentions read the previous layer's opposite stream.
    int lang_x = attention_sublayer(t, p, base + ".lang.xatt", lang, vis, vmask, heads);
    int vis_x = attention_sublayer(t, p, base + ".vis.xatt", vis, lang, lmask, heads);
    lang = attention_sublayer(t, p, base + ".lang.self", lang_x, lang_x, lmask, heads);
    vis = attention_sublayer(t, p, base + ".vis.self", vis_x, vis_x, vmask, heads);
    lang = ff_sublayer(t, p, base + ".lang.ff", lang);
    vis = ff_sublayer(t, p, base + ".vis.ff", vis);
  }
  return {lang, vis};
}

}  // namespace build

Mat scaled_attention(const Mat& q, const Mat& k, const Mat& v, const Mask& key_mask,
                     Mat* weights) {
  if (q.cols() != k.cols()) throw ShapeError("Q and K widths differ");
  if (k.rows() != v.rows()) throw ShapeError("K and V row counts differ");
  if (static_cast<Eigen::Index>(key_mask.size()) != k.rows())
    throw ShapeError("key mask length does not match K");
  Mat logits = q * k.transpose() / std::sqrt(static_cast<double>(q.cols()));
  Mat w = graph::softmax_rows_plain(logits, key_mask);
  if (weights) *weights = w;
  return w * v;
}

namespace {

Mask full_mask(Eigen::Index n) { return Mask(static_cast<std::size_t>(n), 1); }

}  // namespace

Mat encode_language(const Mat& h, const Mask& mask, const ParamStore& params,
                    const EncoderConfig& cfg) {
  Tape t;
  NodeMap p = register_params(t, params);
  int out = build::encoder_stack(t, p, "enc.lang", t.leaf(h), mask, cfg.lang_layers, cfg.heads);
  return t.value(out);
}

Mat encode_objects(const Mat& v, const ParamStore& params, const EncoderConfig& cfg) {
  Tape t;
  NodeMap p = register_params(t, params);
  int out = build::encoder_stack(t, p, "enc.obj", t.leaf(v), full_mask(v.rows()),
                                 cfg.obj_layers, cfg.heads);
  return t.value(out);
}

JointEmbedding cross_encode(const Mat& lang, const Mat& vis, const Mask& lmask,
                            const ParamStore& params, const EncoderConfig& cfg) {
  if (lang.rows() == 0 || vis.rows() == 0) throw ShapeError("cross_encode needs both streams");
  Tape t;
  NodeMap p = register_params(t, params);
  auto out = build::cross_stack(t, p, t.leaf(lang), t.leaf(vis), lmask, full_mask(vis.rows()),
                                cfg.cross_layers, cfg.heads);
  JointEmbedding j;
  j.lang_tokens = t.value(out.lang);
  j.vis_tokens = t.value(out.vis);
  j.e = j.lang_tokens.row(0);
  return j;
}

JointEmbedding baseline_fuse(const Mat& lang, const Mat& vis, const Mask& lmask) {
  if (lang.rows() == 0 || vis.rows() == 0) throw ShapeError("baseline_fuse needs both streams");
  Eigen::RowVectorXd lsum = Eigen::RowVectorXd::Zero(lang.cols());
  double count = 0;
  for (Eigen::Index i = 0; i < lang.rows(); ++i) {
    if (i < static_cast<Eigen::Index>(lmask.size()) && !lmask[static_cast<std::size_t>(i)])
      continue;
    lsum += lang.row(i);
    count += 1;
  }
  if (count == 0) throw ShapeError("baseline_fuse: all language tokens masked");
  JointEmbedding j;
  j.lang_tokens = lang;
  j.vis_tokens = vis;
  j.e = lsum / count + vis.colwise().mean();
  return j;
}

}  // namespace adtheme

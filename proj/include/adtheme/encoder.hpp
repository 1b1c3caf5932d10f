#pragma once

#include <map>
#include <string>

#include "adtheme/graph.hpp"
#include "adtheme/params.hpp"
#include "adtheme/rng.hpp"

namespace adtheme {

struct EncoderConfig {
  int lang_layers = 9;
  int obj_layers = 5;
  int cross_layers = 5;
  int d = 768;
  int heads = 12;
  int ff_mult = 4;

  static EncoderConfig toy();  // 2/2/1 layers, d=32, heads=4
  void validate() const;       // d divisible by heads, counts >= 0
  int ff_dim() const { return d * ff_mult; }
};

struct JointEmbedding {
  Eigen::RowVectorXd e;    // 1 x d: [CLS] output, or the fused baseline vector
  graph::Mat lang_tokens;  // l x d contextual language outputs
  graph::Mat vis_tokens;   // n x d contextual visual outputs (may be empty)
};

// Registers every encoder tensor under "enc." names: attention projections,
// FF weights and layer-norm gains/biases for the language stack, the object
// stack and the cross-modality stack. Weights are truncated normal
// (std 0.02) snapped to float32, biases zero, layer-norm gains one.
void add_encoder_params(ParamStore& params, const EncoderConfig& cfg, Rng& rng);

// One tape leaf per named tensor, shared across all uses in the graph.
using NodeMap = std::map<std::string, int>;
NodeMap register_params(graph::Tape& tape, const ParamStore& params);

// Reads the accumulated parameter gradients back out of the tape.
GradMap collect_grads(const graph::Tape& tape, const NodeMap& nodes, const ParamStore& params);

// Graph builders shared by training and inference.
namespace build {

// Multi-head attention + residual + layer norm. `prefix` names the sublayer
// parameter family (".wq", ".bq", ..., ".ln.g", ".ln.b").
int attention_sublayer(graph::Tape& t, const NodeMap& p, const std::string& prefix, int x_q,
                       int x_kv, const graph::Mask& kv_mask, int heads);

// GELU feed-forward + residual + layer norm (".w1", ".b1", ".w2", ".b2",
// ".ln.g", ".ln.b").
int ff_sublayer(graph::Tape& t, const NodeMap& p, const std::string& prefix, int x);

// `layers` self-attention + FF blocks under "<prefix>.<i>.".
int encoder_stack(graph::Tape& t, const NodeMap& p, const std::string& prefix, int x,
                  const graph::Mask& mask, int layers, int heads);

struct CrossOut {
  int lang = -1;
  int vis = -1;
};

// Cross-modality stack: per layer, both streams cross-attend to the other
// stream's previous output, then run self-attention and FF.
CrossOut cross_stack(graph::Tape& t, const NodeMap& p, int lang, int vis,
                     const graph::Mask& lmask, const graph::Mask& vmask, int layers, int heads);

}  // namespace build

// Plain forward ops -------------------------------------------------------

// softmax(Q K^T / sqrt(d)) V with masked keys excluded; optionally exposes
// the attention weight matrix.
graph::Mat scaled_attention(const graph::Mat& q, const graph::Mat& k, const graph::Mat& v,
                            const graph::Mask& key_mask, graph::Mat* weights = nullptr);

graph::Mat encode_language(const graph::Mat& h, const graph::Mask& mask, const ParamStore& params,
                           const EncoderConfig& cfg);

graph::Mat encode_objects(const graph::Mat& v, const ParamStore& params,
                          const EncoderConfig& cfg);

// Both inputs must already be single-modality encoded. e is the language
// stream's first row ([CLS]) after the cross stack.
JointEmbedding cross_encode(const graph::Mat& lang, const graph::Mat& vis,
                            const graph::Mask& lmask, const ParamStore& params,
                            const EncoderConfig& cfg);

// Cross-modality-free fusion: e = masked-mean(lang) + mean(vis).
JointEmbedding baseline_fuse(const graph::Mat& lang, const graph::Mat& vis,
                             const graph::Mask& lmask);

}  // namespace adtheme

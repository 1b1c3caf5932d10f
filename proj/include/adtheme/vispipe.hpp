#pragma once

#include <optional>

#include <Eigen/Dense>

#include "adtheme/corpus.hpp"

namespace adtheme {

struct RegionSet {
  Eigen::MatrixXd x;  // n x D_x RoI features
  Eigen::MatrixXd r;  // n x 5 normalized spatial features
};

struct VisEmbedParams {
  Eigen::MatrixXd w_x;  // D_x x D_v
  Eigen::RowVectorXd b_x;
  Eigen::MatrixXd w_r;  // 5 x D_v
  Eigen::RowVectorXd b_r;
};

// Row per box: (x1/W, y1/H, x2/W, y2/H, area/(W*H)), all in [0,1].
Eigen::MatrixXd normalize_boxes(const std::vector<PixelBox>& boxes, double width, double height);

RegionSet region_set(const AdInstance& inst);

// Row j = 0.5 * ((x_j W_x + b_x) + (r_j W_r + b_r)).
Eigen::MatrixXd embed_regions(const RegionSet& regions, const VisEmbedParams& params);

// Deterministic test fixture: pseudo-random regions/boxes/text with valid
// invariants. With planted_signal=k (k < D_x), region 0's feature k is
// boosted so decode_planted_signal recovers k.
AdInstance synth_instance(std::uint64_t seed, int n_regions, int d_x,
                          std::optional<int> planted_signal = std::nullopt);

int decode_planted_signal(const AdInstance& inst);

}  // namespace adtheme

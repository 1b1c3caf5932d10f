#include "adtheme/vispipe.hpp"

#include <algorithm>
#include <string>

#include "adtheme/errors.hpp"
#include "adtheme/rng.hpp"

namespace adtheme {

Eigen::MatrixXd normalize_boxes(const std::vector<PixelBox>& boxes, double width, double height) {
  if (width <= 0 || height <= 0) throw DataError("normalize_boxes needs positive image size");
  Eigen::MatrixXd r(static_cast<Eigen::Index>(boxes.size()), 5);
  for (Eigen::Index i = 0; i < r.rows(); ++i) {
    const PixelBox& b = boxes[static_cast<std::size_t>(i)];
    r(i, 0) = b.x1 / width;
    r(i, 1) = b.y1 / height;
    r(i, 2) = b.x2 / width;
    r(i, 3) = b.y2 / height;
    r(i, 4) = (b.x2 - b.x1) * (b.y2 - b.y1) / (width * height);
  }
  return r;
}

RegionSet region_set(const AdInstance& inst) {
  RegionSet rs;
  const auto n = static_cast<Eigen::Index>(inst.region_features.size());
  const auto d = static_cast<Eigen::Index>(inst.region_features.front().size());
  rs.x.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      rs.x(i, j) = inst.region_features[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  rs.r = normalize_boxes(inst.boxes, inst.width, inst.height);
  return rs;
}

Eigen::MatrixXd embed_regions(const RegionSet& regions, const VisEmbedParams& params) {
  if (regions.x.cols() != params.w_x.rows())
    throw ShapeError("RoI feature dim does not match W_x");
  if (regions.r.cols() != params.w_r.rows())
    throw ShapeError("spatial feature dim does not match W_r");
  if (params.w_x.cols() != params.w_r.cols() || params.w_x.cols() != params.b_x.cols() ||
      params.w_r.cols() != params.b_r.cols())
    throw ShapeError("visual embedding output dims disagree");
  Eigen::MatrixXd fx = (regions.x * params.w_x).rowwise() + params.b_x;
  Eigen::MatrixXd fr = (regions.r * params.w_r).rowwise() + params.b_r;
  return 0.5 * (fx + fr);
}

AdInstance synth_instance(std::uint64_t seed, int n_regions, int d_x,
                          std::optional<int> planted_signal) {
  if (n_regions < 1) throw ConfigError("synth_instance needs n_regions >= 1");
  if (d_x < 1) throw ConfigError("synth_instance needs d_x >= 1");
  if (planted_signal && (*planted_signal < 0 || *planted_signal >= d_x))
    throw ConfigError("planted_signal must lie in [0, d_x)");

  Rng rng = Rng::stream(seed, "synth");
  AdInstance inst;
  inst.id = "synth-" + std::to_string(seed);
  inst.width = 128;
  inst.height = 128;
  for (int i = 0; i < n_regions; ++i) {
    double x1 = 100.0 * rng.unit();
    double y1 = 100.0 * rng.unit();
    inst.boxes.push_back({x1, y1, x1 + 4 + 20.0 * rng.unit(), y1 + 4 + 20.0 * rng.unit()});
    std::vector<double> f(static_cast<std::size_t>(d_x));
    for (auto& v : f) v = 0.1 * rng.normal();
    inst.region_features.push_back(std::move(f));
  }
  if (planted_signal)
    inst.region_features[0][static_cast<std::size_t>(*planted_signal)] += 8.0;

  inst.ocr_text = "sample offer " + std::to_string(rng.below(100));
  inst.questions = {"what does this promote"};
  inst.wiki_text = "background text for brand " + std::to_string(seed % 7);
  inst.brand = "brand-" + std::to_string(seed % 7);
  inst.category = "category-" + std::to_string(seed % 3);
  int theme = planted_signal ? *planted_signal : static_cast<int>(seed % 5);
  inst.labels = {{{"theme", std::to_string(theme)}, 1.0}};
  inst.validate();
  return inst;
}

int decode_planted_signal(const AdInstance& inst) {
  const auto& f = inst.region_features.at(0);
  return static_cast<int>(std::max_element(f.begin(), f.end()) - f.begin());
}

}  // namespace adtheme

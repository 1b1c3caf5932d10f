#include "adtheme/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "adtheme/errors.hpp"

namespace adtheme {

using nlohmann::json;

namespace {
constexpr char kMagic[] = "ADTHEME1";
}

void save_checkpoint(const std::string& path, const json& meta, const ParamStore& params) {
  json header = meta;
  header["format"] = kMagic;
  json manifest = json::array();
  for (const auto& [name, value] : params)
    manifest.push_back({{"name", name},
                        {"rows", value.rows()},
                        {"cols", value.cols()}});
  header["manifest"] = manifest;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint '" + path + "'");
  const std::string hs = header.dump();
  const auto len = static_cast<std::uint32_t>(hs.size());
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));

  std::vector<float> buf;
  for (const auto& [name, value] : params) {
    buf.resize(static_cast<std::size_t>(value.size()));
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < value.rows(); ++i)
      for (Eigen::Index j = 0; j < value.cols(); ++j)
        buf[k++] = static_cast<float>(value(i, j));
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
  if (!out) throw DataError("failed writing checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path + "'");
  std::uint32_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in) throw DataError("checkpoint '" + path + "' is truncated");
  std::string hs(len, '\0');
  in.read(hs.data(), static_cast<std::streamsize>(len));
  if (!in) throw DataError("checkpoint '" + path + "' header is truncated");

  Checkpoint ck;
  try {
    ck.meta = json::parse(hs);
  } catch (const json::exception& e) {
    throw DataError("checkpoint '" + path + "' header: " + e.what());
  }
  if (ck.meta.value("format", "") != kMagic)
    throw DataError("checkpoint '" + path + "' has an unknown format tag");

  for (const auto& entry : ck.meta.at("manifest")) {
    const auto name = entry.at("name").get<std::string>();
    const auto rows = entry.at("rows").get<Eigen::Index>();
    const auto cols = entry.at("cols").get<Eigen::Index>();
    if (rows < 0 || cols < 0) throw DataError("checkpoint manifest has negative shape");
    std::vector<float> buf(static_cast<std::size_t>(rows * cols));
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!in) throw DataError("checkpoint '" + path + "' payload is truncated at '" + name + "'");
    Mat m(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = static_cast<double>(buf[k++]);
    ck.params.insert(name, std::move(m));
  }
  return ck;
}

}  // namespace adtheme

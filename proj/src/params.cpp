#include "adtheme/params.hpp"

#include "adtheme/errors.hpp"

namespace adtheme {

Mat& ParamStore::at(const std::string& name) {
  auto it = p_.find(name);
  if (it == p_.end()) throw ShapeError("unknown parameter: " + name);
  return it->second;
}

const Mat& ParamStore::at(const std::string& name) const {
  auto it = p_.find(name);
  if (it == p_.end()) throw ShapeError("unknown parameter: " + name);
  return it->second;
}

void ParamStore::insert(const std::string& name, Mat value) {
  if (p_.count(name)) throw ShapeError("duplicate parameter: " + name);
  p_.emplace(name, std::move(value));
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(p_.size());
  for (const auto& [k, _] : p_) out.push_back(k);
  return out;
}

std::size_t ParamStore::entry_count() const {
  std::size_t n = 0;
  for (const auto& [_, m] : p_) n += static_cast<std::size_t>(m.size());
  return n;
}

}  // namespace adtheme

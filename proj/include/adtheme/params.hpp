#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

namespace adtheme {

using Mat = Eigen::MatrixXd;

// Named parameter tensors, ordered by name so every traversal (optimizer
// steps, serialization, gradient checks) is deterministic.
class ParamStore {
 public:
  Mat& at(const std::string& name);
  const Mat& at(const std::string& name) const;
  void insert(const std::string& name, Mat value);
  bool contains(const std::string& name) const { return p_.count(name) != 0; }
  std::vector<std::string> names() const;
  std::size_t size() const { return p_.size(); }
  std::size_t entry_count() const;

  auto begin() { return p_.begin(); }
  auto end() { return p_.end(); }
  auto begin() const { return p_.begin(); }
  auto end() const { return p_.end(); }

 private:
  std::map<std::string, Mat> p_;
};

using GradMap = std::map<std::string, Mat>;

}  // namespace adtheme

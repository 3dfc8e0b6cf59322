#ifndef CELLSIM_MODEL_RESOURCE_VECTOR_H_
#define CELLSIM_MODEL_RESOURCE_VECTOR_H_

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include <boost/container/small_vector.hpp>

namespace cellsim::model {

// Ordered set of resource-type names. Position i names dimension i of every
// ResourceVector in a simulation.
class ResourceTypeCatalog {
 public:
  ResourceTypeCatalog() = default;
  explicit ResourceTypeCatalog(std::vector<std::string> names);

  static ResourceTypeCatalog CpuMemory() { return ResourceTypeCatalog({"cpu", "memory"}); }

  std::size_t dimension() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  std::optional<std::size_t> index_of(const std::string& name) const;

  bool operator==(const ResourceTypeCatalog& o) const { return names_ == o.names_; }

 private:
  std::vector<std::string> names_;
};

class ResourceVector {
 public:
  using Storage = boost::container::small_vector<double, 4>;

  ResourceVector() = default;
  explicit ResourceVector(std::size_t dim, double fill = 0.0) : v_(dim, fill) {}
  ResourceVector(std::initializer_list<double> init) : v_(init) {}
  explicit ResourceVector(const std::vector<double>& v) : v_(v.begin(), v.end()) {}

  std::size_t size() const { return v_.size(); }
  double operator[](std::size_t i) const { return v_[i]; }
  double& operator[](std::size_t i) { return v_[i]; }
  auto begin() const { return v_.begin(); }
  auto end() const { return v_.end(); }

  ResourceVector& operator+=(const ResourceVector& o);
  ResourceVector& operator-=(const ResourceVector& o);
  friend ResourceVector operator+(ResourceVector a, const ResourceVector& b) { return a += b; }
  friend ResourceVector operator-(ResourceVector a, const ResourceVector& b) { return a -= b; }
  ResourceVector scaled(double k) const;

  bool operator==(const ResourceVector& o) const { return v_ == o.v_; }

  // Exact comparisons, no epsilon.
  bool all_non_negative() const;
  bool all_le(const ResourceVector& o) const;
  bool is_zero() const;

  std::vector<double> to_std() const { return {v_.begin(), v_.end()}; }
  std::string to_string() const;

 private:
  Storage v_;
};

}  // namespace cellsim::model

#endif  // CELLSIM_MODEL_RESOURCE_VECTOR_H_

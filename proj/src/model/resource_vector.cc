#include "cellsim/model/resource_vector.h"

#include <set>
#include <sstream>

#include "cellsim/common/errors.h"

namespace cellsim::model {

ResourceTypeCatalog::ResourceTypeCatalog(std::vector<std::string> names)
    : names_(std::move(names)) {
  if (names_.empty()) throw DomainError("resource catalog must not be empty");
  std::set<std::string> seen(names_.begin(), names_.end());
  if (seen.size() != names_.size()) {
    throw DomainError("resource catalog names must be unique");
  }
}

std::optional<std::size_t> ResourceTypeCatalog::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  return std::nullopt;
}

namespace {
void CheckSameSize(std::size_t a, std::size_t b) {
  if (a != b) throw DomainError("resource vector dimension mismatch");
}
}  // namespace

ResourceVector& ResourceVector::operator+=(const ResourceVector& o) {
  CheckSameSize(size(), o.size());
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
  return *this;
}

ResourceVector& ResourceVector::operator-=(const ResourceVector& o) {
  CheckSameSize(size(), o.size());
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
  return *this;
}

ResourceVector ResourceVector::scaled(double k) const {
  ResourceVector r = *this;
  for (auto& x : r.v_) x *= k;
  return r;
}

bool ResourceVector::all_non_negative() const {
  for (double x : v_) {
    if (!(x >= 0.0)) return false;
  }
  return true;
}

bool ResourceVector::all_le(const ResourceVector& o) const {
  CheckSameSize(size(), o.size());
  for (std::size_t i = 0; i < v_.size(); ++i) {
    if (!(v_[i] <= o.v_[i])) return false;
  }
  return true;
}

bool ResourceVector::is_zero() const {
  for (double x : v_) {
    if (x != 0.0) return false;
  }
  return true;
}

std::string ResourceVector::to_string() const {
  std::ostringstream os;
  os.precision(17);
  os << '[';
  for (std::size_t i = 0; i < v_.size(); ++i) {
    if (i) os << ", ";
    os << v_[i];
  }
  os << ']';
  return os.str();
}

}  // namespace cellsim::model

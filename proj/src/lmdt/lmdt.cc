#include "cellsim/lmdt/lmdt.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cellsim/common/errors.h"

namespace cellsim::lmdt {

void Validate(const MigrationProfile& p) {
  if (!(p.cmdt_mb >= 0.0)) throw DomainError("cmdt_mb must be >= 0");
  if (!(p.af >= 0.0)) throw DomainError("af must be >= 0");
  if (!(p.mf_mb > 0.0)) throw DomainError("mf_mb must be > 0");
}

double application_memory(double total_used_mb, double canonical_mb) {
  if (!(canonical_mb >= 0.0) || !(total_used_mb >= 0.0)) {
    throw DomainError("memory sizes must be non-negative");
  }
  if (total_used_mb < canonical_mb) {
    throw DomainError("total used memory below canonical memory");
  }
  return total_used_mb - canonical_mb;
}

double lmdt_estimate(const MigrationProfile& profile, double am_mb) {
  if (!(am_mb >= 0.0)) throw DomainError("application memory must be >= 0");
  return profile.cmdt_mb + profile.mf_mb * std::exp(profile.af * am_mb);
}

ProfileCatalog::ProfileCatalog(double mf_mb) : mf_mb_(mf_mb) {
  if (!(mf_mb > 0.0)) throw DomainError("mf_mb must be > 0");
  profiles_["idle"] = {90.0, 0.0, mf_mb};
  profiles_["apache"] = {175.0, 0.00682, mf_mb};
  profiles_["specjvm2008"] = {115.0, 0.03305, mf_mb};
  profiles_["postgresql"] = {145.0, 0.01072, mf_mb};
  profiles_["vm-allocator-1"] = {213.0, 0.00620, mf_mb};
  profiles_["vm-allocator-2"] = {213.0, 0.00676, mf_mb};
  profiles_["vm-allocator-3"] = {213.0, 0.00714, mf_mb};
}

const MigrationProfile& ProfileCatalog::profile_for(const std::string& kind) const {
  auto it = profiles_.find(kind);
  if (it == profiles_.end()) throw LookupError("unknown migration profile " + kind);
  return it->second;
}

void ProfileCatalog::register_profile(const std::string& kind, MigrationProfile p) {
  Validate(p);
  profiles_[kind] = p;
}

void ProfileCatalog::load_json_text(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("profile catalog: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("profile catalog must be a JSON object");
  for (const auto& [name, entry] : doc.items()) {
    if (!entry.is_object() || !entry.contains("cmdt_mb") || !entry.contains("af")) {
      throw ConfigError("profile " + name + " needs cmdt_mb and af");
    }
    MigrationProfile p;
    try {
      p.cmdt_mb = entry.at("cmdt_mb").get<double>();
      p.af = entry.at("af").get<double>();
      p.mf_mb = entry.value("mf_mb", mf_mb_);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("profile " + name + ": " + e.what());
    }
    try {
      register_profile(name, p);
    } catch (const DomainError& e) {
      throw ConfigError("profile " + name + ": " + e.what());
    }
  }
}

void ProfileCatalog::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open profile catalog " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  load_json_text(ss.str());
}

std::vector<std::string> ProfileCatalog::kinds() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : profiles_) out.push_back(k);
  return out;
}

MigrationProfile profile_for(const std::string& kind) {
  static const ProfileCatalog kDefault;
  return kDefault.profile_for(kind);
}

double TraceCostModel::cost_mb(double used_memory_normalized) const {
  const double used_mb = std::max(0.0, used_memory_normalized) * node_memory_mb;
  const double am = used_mb > canonical_mb ? used_mb - canonical_mb : 0.0;
  return lmdt_estimate(profile, am);
}

}  // namespace cellsim::lmdt

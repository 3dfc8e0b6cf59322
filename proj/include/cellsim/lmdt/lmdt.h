#ifndef CELLSIM_LMDT_LMDT_H_
#define CELLSIM_LMDT_LMDT_H_

#include <map>
#include <string>
#include <vector>

namespace cellsim::lmdt {

inline constexpr double kDefaultMigrationFactorMb = 9.6;

struct MigrationProfile {
  double cmdt_mb = 0.0;  // canonical memory data transferred
  double af = 0.0;       // application factor
  double mf_mb = kDefaultMigrationFactorMb;

  bool operator==(const MigrationProfile&) const = default;
};

// Throws DomainError on cmdt < 0, af < 0 or mf <= 0.
void Validate(const MigrationProfile& p);

// total_used - canonical. Throws DomainError if total_used < canonical or
// either is negative.
double application_memory(double total_used_mb, double canonical_mb);

// cmdt + mf * exp(af * am). Throws DomainError for am < 0.
double lmdt_estimate(const MigrationProfile& profile, double am_mb);

// Named profiles. Starts with the measured application set; further entries
// may be registered or loaded from a JSON file of the form
//   {"name": {"cmdt_mb": 175, "af": 0.00682, "mf_mb": 9.6}, ...}
// where mf_mb is optional.
class ProfileCatalog {
 public:
  // Builtin profiles using the given migration factor.
  explicit ProfileCatalog(double mf_mb = kDefaultMigrationFactorMb);

  const MigrationProfile& profile_for(const std::string& kind) const;
  void register_profile(const std::string& kind, MigrationProfile p);
  void load_file(const std::string& path);
  void load_json_text(const std::string& text);
  std::vector<std::string> kinds() const;

 private:
  double mf_mb_;
  std::map<std::string, MigrationProfile> profiles_;
};

// Convenience wrapper over the default catalog.
MigrationProfile profile_for(const std::string& kind);

// Maps normalised trace memory usage to a migration cost: used memory is
// scaled by the node memory size to MB and fed through the LMDT formula.
struct TraceCostModel {
  double node_memory_mb = 64.0 * 1024.0;
  double canonical_mb = 0.0;
  MigrationProfile profile{175.0, 0.00682, kDefaultMigrationFactorMb};
  std::string profile_name = "apache";

  // Usage below the canonical size is treated as an application memory of 0.
  double cost_mb(double used_memory_normalized) const;
};

}  // namespace cellsim::lmdt

#endif  // CELLSIM_LMDT_LMDT_H_

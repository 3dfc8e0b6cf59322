#ifndef CELLSIM_MASB_SCORING_H_
#define CELLSIM_MASB_SCORING_H_

#include <array>
#include <cstddef>
#include <string>

#include "cellsim/model/resource_vector.h"

namespace cellsim::workload {
class Cell;
}

namespace cellsim::masb {

struct ScoringParams {
  double bias = 0.3;
  double steep = 350.0;
  double floor = 0.8;

  static ScoringParams Sias() { return {0.3, 350.0, 0.8}; }
  static ScoringParams Sras() { return {0.6, 500.0, 0.8}; }
  void validate() const;  // throws ConfigError
};

// Utilisation at or above this ratio on any resource scores zero.
inline constexpr double kStaThreshold = 0.9;
inline constexpr double kTightThreshold = 0.7;

// steep^(prod_i (free_i - bias * total_i)) - floor, clamped at zero, where
// free = total - used_after. Zero when any resource reaches the STA band.
// Resources with zero total are skipped unless they carry demand.
double allocation_score(const ScoringParams& p, const model::ResourceVector& total,
                        const model::ResourceVector& used_after);

inline double sias(const model::ResourceVector& total, const model::ResourceVector& used_after,
                   const ScoringParams& p = ScoringParams::Sias()) {
  return allocation_score(p, total, used_after);
}
inline double sras(const model::ResourceVector& total, const model::ResourceVector& used_after,
                   const ScoringParams& p = ScoringParams::Sras()) {
  return allocation_score(p, total, used_after);
}

// max(0, score(after) - score(before)).
double score_gain(const ScoringParams& p, const model::ResourceVector& total,
                  const model::ResourceVector& used_before,
                  const model::ResourceVector& used_after);

// Which scorer a broker or node agent applies.
enum class ScorerKind { kSias, kSiasGain, kSras, kSrasGain };
std::string ToString(ScorerKind k);
ScorerKind ParseScorer(const std::string& s);  // throws ConfigError

enum class AllocationClass { kIdle, kSta, kTa, kPa, kDa, kOverloaded };
inline constexpr std::size_t kAllocationClassCount = 6;
const char* ToString(AllocationClass c);

// Per-resource ratio is max(used_all, production_required) / total.
AllocationClass classify_allocation(const model::ResourceVector& total,
                                    const model::ResourceVector& used_all,
                                    const model::ResourceVector& production_required,
                                    bool has_tasks);

// Sum of production required resources fits the node total.
bool rus_fits(const model::ResourceVector& total,
              const model::ResourceVector& production_required);

struct AsrMetrics {
  std::array<std::size_t, kAllocationClassCount> counts{};
  // Shares of STA, TA, PA, DA among nodes in those four classes.
  double sta = 0.0, ta = 0.0, pa = 0.0, da = 0.0;
  bool ratios_defined = false;

  std::size_t count(AllocationClass c) const { return counts[static_cast<std::size_t>(c)]; }
};

AsrMetrics asr_from_counts(const std::array<std::size_t, kAllocationClassCount>& counts);
// Classifies every online node of the cell.
AsrMetrics asr_metrics(const workload::Cell& cell);

}  // namespace cellsim::masb

#endif  // CELLSIM_MASB_SCORING_H_

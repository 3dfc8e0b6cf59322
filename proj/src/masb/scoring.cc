#include "cellsim/masb/scoring.h"

#include <cmath>

#include "cellsim/common/errors.h"
#include "cellsim/workload/cell.h"

namespace cellsim::masb {

void ScoringParams::validate() const {
  if (!(bias > 0 && bias < 1)) throw ConfigError("score bias must be in (0,1)");
  if (!(steep > 1)) throw ConfigError("score steepness must be > 1");
  if (!(floor >= 0)) throw ConfigError("score floor must be >= 0");
}

double allocation_score(const ScoringParams& p, const model::ResourceVector& total,
                        const model::ResourceVector& used_after) {
  if (total.size() != used_after.size()) throw DomainError("score vectors differ in dimension");
  double exponent = 1.0;
  for (std::size_t i = 0; i < total.size(); ++i) {
    const double max = total[i];
    const double used = used_after[i];
    if (max <= 0.0) {
      if (used > 0.0) return 0.0;
      continue;
    }
    if (used / max >= kStaThreshold) return 0.0;
    exponent *= (max - used) - p.bias * max;
  }
  const double s = std::pow(p.steep, exponent) - p.floor;
  return s > 0.0 ? s : 0.0;
}

double score_gain(const ScoringParams& p, const model::ResourceVector& total,
                  const model::ResourceVector& used_before,
                  const model::ResourceVector& used_after) {
  const double g = allocation_score(p, total, used_after) - allocation_score(p, total, used_before);
  return g > 0.0 ? g : 0.0;
}

std::string ToString(ScorerKind k) {
  switch (k) {
    case ScorerKind::kSias: return "sias";
    case ScorerKind::kSiasGain: return "sias-gain";
    case ScorerKind::kSras: return "sras";
    case ScorerKind::kSrasGain: return "sras-gain";
  }
  return "?";
}

ScorerKind ParseScorer(const std::string& s) {
  for (auto k : {ScorerKind::kSias, ScorerKind::kSiasGain, ScorerKind::kSras,
                 ScorerKind::kSrasGain}) {
    if (ToString(k) == s) return k;
  }
  throw ConfigError("unknown scorer '" + s + "'");
}

const char* ToString(AllocationClass c) {
  switch (c) {
    case AllocationClass::kIdle: return "idle";
    case AllocationClass::kSta: return "sta";
    case AllocationClass::kTa: return "ta";
    case AllocationClass::kPa: return "pa";
    case AllocationClass::kDa: return "da";
    case AllocationClass::kOverloaded: return "overloaded";
  }
  return "?";
}

AllocationClass classify_allocation(const model::ResourceVector& total,
                                    const model::ResourceVector& used_all,
                                    const model::ResourceVector& production_required,
                                    bool has_tasks) {
  bool any_sta = false, all_tight = true, all_low = true, any_ratio = false;
  for (std::size_t i = 0; i < total.size(); ++i) {
    const double demand = std::max(used_all[i], production_required[i]);
    if (total[i] <= 0.0) {
      if (demand > 0.0) return AllocationClass::kOverloaded;
      continue;
    }
    const double r = demand / total[i];
    any_ratio = true;
    if (r > 1.0) return AllocationClass::kOverloaded;
    if (r >= kStaThreshold) any_sta = true;
    if (!(r >= kTightThreshold && r < kStaThreshold)) all_tight = false;
    if (!(r < kTightThreshold)) all_low = false;
  }
  if (any_sta) return AllocationClass::kSta;
  if (any_ratio && all_tight) return AllocationClass::kTa;
  if (!has_tasks) return AllocationClass::kIdle;
  if (all_low) return AllocationClass::kPa;
  return AllocationClass::kDa;
}

bool rus_fits(const model::ResourceVector& total,
              const model::ResourceVector& production_required) {
  return production_required.all_le(total);
}

AsrMetrics asr_from_counts(const std::array<std::size_t, kAllocationClassCount>& counts) {
  AsrMetrics m;
  m.counts = counts;
  const double scored = static_cast<double>(m.count(AllocationClass::kSta) +
                                            m.count(AllocationClass::kTa) +
                                            m.count(AllocationClass::kPa) +
                                            m.count(AllocationClass::kDa));
  if (scored > 0) {
    m.ratios_defined = true;
    m.sta = m.count(AllocationClass::kSta) / scored;
    m.ta = m.count(AllocationClass::kTa) / scored;
    m.pa = m.count(AllocationClass::kPa) / scored;
    m.da = m.count(AllocationClass::kDa) / scored;
  }
  return m;
}

AsrMetrics asr_metrics(const workload::Cell& cell) {
  std::array<std::size_t, kAllocationClassCount> counts{};
  for (workload::NodeIndex n = 0; n < cell.node_slots(); ++n) {
    const auto& node = cell.node(n);
    if (!node.online) continue;
    auto c = classify_allocation(node.spec.total, cell.used_sum(n),
                                 cell.production_required_sum(n), !node.residents.empty());
    ++counts[static_cast<std::size_t>(c)];
  }
  return asr_from_counts(counts);
}

}  // namespace cellsim::masb

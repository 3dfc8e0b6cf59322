#ifndef CELLSIM_COMMON_SIM_TIME_H_
#define CELLSIM_COMMON_SIM_TIME_H_

#include <cstdint>

namespace cellsim {

// Simulation time in microseconds, the trace convention.
using SimTime = std::int64_t;

inline constexpr SimTime kMicrosPerSecond = 1'000'000;
inline constexpr SimTime kMicrosPerMinute = 60 * kMicrosPerSecond;

constexpr SimTime Seconds(double s) {
  return static_cast<SimTime>(s * kMicrosPerSecond);
}
constexpr SimTime Minutes(double m) {
  return static_cast<SimTime>(m * kMicrosPerMinute);
}

}  // namespace cellsim

#endif  // CELLSIM_COMMON_SIM_TIME_H_

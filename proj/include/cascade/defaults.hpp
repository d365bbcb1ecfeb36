#pragma once

// Library-wide default parameters for the case-study configuration.
namespace cascade::defaults {

inline constexpr int n = 20;
inline constexpr double tau = 0.05;
inline constexpr double b = 0.01;
inline constexpr double c = 4.0;
inline constexpr double alpha = 1000.0;
inline constexpr double epsilon = 0.1;
inline constexpr double y_f = 4.0;

}  // namespace cascade::defaults

#pragma once

#include <span>
#include <string>

namespace futilsim {

/// 17 significant digits; NaN is written as NA.
std::string format_double(double v);

double mean(std::span<const double> xs);
/// Unbiased sample variance; NaN for fewer than two values.
double sample_variance(std::span<const double> xs);

}  // namespace futilsim

#include "objectbox/format.hpp"

#include <cmath>
#include <cstdlib>

#include <fmt/format.h>

namespace objectbox {

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  if (v == 0.0) return "0";  // folds -0
  return fmt::format("{:.{}g}", v, kOutputDigits);
}

double round_for_output(double v) {
  if (!std::isfinite(v)) return v;
  return std::strtod(format_number(v).c_str(), nullptr);
}

}  // namespace objectbox

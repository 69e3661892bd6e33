#pragma once

#include <string>

namespace objectbox {

// Fixed 9-significant-digit rendering used for every CSV/JSON number so
// fixtures diff cleanly across platforms.
inline constexpr int kOutputDigits = 9;

std::string format_number(double v);
// v rounded to 9 significant digits; serialising the result with a
// shortest-round-trip writer prints at most 9 digits.
double round_for_output(double v);

}  // namespace objectbox

#pragma once

#include <string>

namespace tamed {

// Scientific notation with 17 significant digits; parses back to the same double.
std::string format_double(double value);

}  // namespace tamed

// SPDX-FileCopyrightText: 2026 gsrobust authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <iomanip>
#include <sstream>
#include <string>

namespace gsrobust {

/// Shortest round-trippable decimal form (17 significant digits), `inf`/`-inf` spelled out.
inline std::string format_number(double v) {
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace gsrobust

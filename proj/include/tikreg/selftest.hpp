#pragma once

#include <optional>
#include <string>
#include <vector>

namespace tikreg {

struct SelftestCheck {
  std::string name;
  bool passed = false;
  double worst = 0.0;      // largest observed error
  double tolerance = 0.0;  // threshold it was compared against
};

struct SelftestReport {
  std::vector<SelftestCheck> checks;
  bool passed() const;
};

/// Oracle equivalence against (A^T A + alpha I)^{-1} A^T y on random dense A,
/// and the duality-mapping identity suite over (r, q) in {1.5,2,3,4} x {1.5,2,3}.
/// A tolerance override replaces every threshold.
SelftestReport run_selftest(std::optional<double> tolerance = std::nullopt);

}  // namespace tikreg

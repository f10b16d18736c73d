#pragma once

#include <optional>
#include <string>

namespace qdsps {

/// A value with its standard error (zero for deterministic estimates).
struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

/// Single-photon-source figures of merit. g2 and indist are absent when the
/// source emits nothing.
struct FiguresOfMerit {
  Estimate eta;
  std::optional<Estimate> g2;
  std::optional<Estimate> indist;
  /// Probability of at least one emitted photon (trajectory runs only).
  std::optional<Estimate> eta_at_least_one;
  std::string source;
  std::string indist_convention;
};

}  // namespace qdsps

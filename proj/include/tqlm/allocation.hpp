#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tqlm/sample_set.hpp"
#include "tqlm/symmetric_model.hpp"
#include "tqlm/utility_function.hpp"

namespace tqlm {

/// n components x m scenarios; row i holds the scenarios of X_i and the sum
/// row S = X_1 + ... + X_n is formed once at construction.
class JointSample {
 public:
  /// Throws InputError for no rows, ragged rows, empty rows or non-finite entries.
  explicit JointSample(std::vector<std::vector<double>> rows);

  std::size_t components() const noexcept { return rows_.size(); }
  std::size_t scenarios() const noexcept { return rows_.front().size(); }
  std::span<const double> row(std::size_t i) const;
  const SampleSet& sum() const noexcept { return sum_; }

 private:
  std::vector<std::vector<double>> rows_;
  SampleSet sum_;
};

/// rho_U^alpha(X_i | S) = U^{-1}( E[U(X_i) | S >= VaR_alpha(S)] ), with the
/// same order-statistic VaR and >= convention as tqlm_empirical.
double contribution(const JointSample& j, std::size_t i, double alpha, const UtilityFunction& u);

/// rho_U^alpha(S) - sum_i contribution(i).
double allocation_gap(const JointSample& j, double alpha, const UtilityFunction& u);

struct AllocationResult {
  double total;                       // rho_U^alpha(S)
  std::vector<double> contributions;  // one per component
  double gap;
  std::optional<double> gap_standard_error;
};

/// Contributions and gap; the gap error comes from `batches` contiguous
/// scenario sections (omitted when a section would hold fewer than 2 scenarios).
AllocationResult allocate(const JointSample& j, double alpha, const UtilityFunction& u,
                          std::size_t batches = 20);

/// Rows F_i^{-1}(V) driven by one shared uniform stream V.
JointSample comonotone_sample(std::span<const SymmetricModel> marginals, std::size_t n,
                              std::uint64_t seed);

/// Two rows F_a^{-1}(V) and F_b^{-1}(1 - V).
JointSample countermonotone_pair(const SymmetricModel& a, const SymmetricModel& b, std::size_t n,
                                 std::uint64_t seed);

}  // namespace tqlm

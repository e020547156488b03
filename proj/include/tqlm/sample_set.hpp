#pragma once

#include <cstddef>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

namespace tqlm {

/// A nonempty batch of finite scenario losses (positive = loss).
///
/// The sorted view is built on first use and shared between copies; the values
/// themselves never change after construction.
class SampleSet {
 public:
  /// Throws InputError when `values` is empty or holds a non-finite entry.
  explicit SampleSet(std::vector<double> values);

  std::size_t size() const noexcept { return values_->size(); }
  std::span<const double> values() const noexcept { return *values_; }
  std::span<const double> sorted() const;

  double mean() const;

  friend bool operator==(const SampleSet& a, const SampleSet& b) { return *a.values_ == *b.values_; }

 private:
  struct SortedCache {
    std::once_flag once;
    std::vector<double> sorted;
  };

  std::shared_ptr<const std::vector<double>> values_;
  std::shared_ptr<SortedCache> cache_;

  friend class TailSlice;
};

/// The scenarios at or above the empirical VaR at level alpha.
///
/// threshold is the ceil(alpha*n)-th order statistic and members are every
/// value >= threshold, so ties at the threshold are all included.
class TailSlice {
 public:
  TailSlice(const SampleSet& sample, double alpha);

  double level() const noexcept { return level_; }
  double threshold() const noexcept { return threshold_; }
  std::span<const double> members() const noexcept { return members_; }
  std::size_t count() const noexcept { return members_.size(); }
  /// Fraction of the sample inside the slice.
  double fraction() const noexcept { return fraction_; }
  std::size_t sample_size() const noexcept { return sample_size_; }

 private:
  std::shared_ptr<const void> keepalive_;
  double level_;
  double threshold_;
  double fraction_;
  std::size_t sample_size_;
  std::span<const double> members_;
};

/// Index (1-based) of the order statistic used as empirical VaR: ceil(alpha*n),
/// clamped to [1, n]. A relative slack of 1e-12 absorbs representation error
/// in alpha*n (0.9*10 must give 9, not 10).
std::size_t var_order_index(double alpha, std::size_t n);

}  // namespace tqlm

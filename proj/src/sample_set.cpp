#include "tqlm/sample_set.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "numerics.hpp"
#include "tqlm/errors.hpp"
#include "tqlm/format.hpp"

namespace tqlm {

SampleSet::SampleSet(std::vector<double> values) {
  if (values.empty()) throw InputError("sample set is empty");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw InputError("sample value " + std::to_string(i) + " is not finite");
    }
  }
  values_ = std::make_shared<const std::vector<double>>(std::move(values));
  cache_ = std::make_shared<SortedCache>();
}

std::span<const double> SampleSet::sorted() const {
  std::call_once(cache_->once, [this] {
    cache_->sorted = *values_;
    std::sort(cache_->sorted.begin(), cache_->sorted.end());
  });
  return cache_->sorted;
}

double SampleSet::mean() const {
  numerics::CompensatedSum sum;
  for (double v : *values_) sum.add(v);
  return sum.value() / static_cast<double>(values_->size());
}

std::size_t var_order_index(double alpha, std::size_t n) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ParameterError("alpha must lie in (0,1), got " + format_shortest(alpha));
  }
  const double scaled = alpha * static_cast<double>(n);
  const double k = std::ceil(scaled - 1e-12 * scaled);
  return static_cast<std::size_t>(std::clamp(k, 1.0, static_cast<double>(n)));
}

TailSlice::TailSlice(const SampleSet& sample, double alpha) : level_(alpha) {
  const auto sorted = sample.sorted();
  const std::size_t k = var_order_index(alpha, sorted.size());
  threshold_ = sorted[k - 1];
  const auto first = std::lower_bound(sorted.begin(), sorted.end(), threshold_);
  members_ = std::span<const double>(first, sorted.end());
  keepalive_ = sample.cache_;
  sample_size_ = sorted.size();
  fraction_ = static_cast<double>(members_.size()) / static_cast<double>(sample_size_);
}

}  // namespace tqlm

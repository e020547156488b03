#include "tqlm/allocation.hpp"

#include <cmath>
#include <string>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/uniform_01.hpp>

#include "numerics.hpp"
#include "tqlm/errors.hpp"
#include "tqlm/risk_engine.hpp"

namespace tqlm {
namespace {

SampleSet sum_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw InputError("joint sample has no components");
  const std::size_t m = rows.front().size();
  if (m == 0) throw InputError("joint sample has no scenarios");
  std::vector<double> s(m, 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m) {
      throw InputError("component " + std::to_string(i) + " has " + std::to_string(rows[i].size()) +
                       " scenarios, expected " + std::to_string(m));
    }
    for (std::size_t k = 0; k < m; ++k) {
      if (!std::isfinite(rows[i][k])) {
        throw InputError("component " + std::to_string(i) + " scenario " + std::to_string(k) +
                         " is not finite");
      }
      s[k] += rows[i][k];
    }
  }
  return SampleSet(std::move(s));
}

// Scenario indices k with S_k >= VaR_alpha(S), in scenario order.
std::vector<std::size_t> tail_scenarios(const SampleSet& s, double alpha) {
  const double v = var_empirical(s, alpha);
  std::vector<std::size_t> idx;
  const auto values = s.values();
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (values[k] >= v) idx.push_back(k);
  }
  return idx;
}

double conditional_ce(std::span<const double> row, const std::vector<std::size_t>& idx,
                      const UtilityFunction& u) {
  std::vector<double> picked;
  picked.reserve(idx.size());
  for (std::size_t k : idx) picked.push_back(row[k]);
  return certainty_equivalent(picked, u);
}

std::vector<double> uniform_stream(std::size_t n, std::uint64_t seed) {
  boost::random::mt19937_64 rng(seed);
  boost::random::uniform_01<double> uni;
  std::vector<double> v(n);
  for (auto& x : v) {
    do {
      x = uni(rng);
    } while (x == 0.0 || 1.0 - x == 1.0);
  }
  return v;
}

AllocationResult allocate_unbatched(const JointSample& j, double alpha, const UtilityFunction& u) {
  const auto idx = tail_scenarios(j.sum(), alpha);
  AllocationResult r{tqlm_empirical(j.sum(), alpha, u), {}, 0.0, std::nullopt};
  numerics::CompensatedSum parts;
  for (std::size_t i = 0; i < j.components(); ++i) {
    r.contributions.push_back(conditional_ce(j.row(i), idx, u));
    parts.add(r.contributions.back());
  }
  r.gap = r.total - parts.value();
  return r;
}

}  // namespace

JointSample::JointSample(std::vector<std::vector<double>> rows)
    : rows_(std::move(rows)), sum_(sum_rows(rows_)) {}

std::span<const double> JointSample::row(std::size_t i) const {
  if (i >= rows_.size()) {
    throw ParameterError("component index " + std::to_string(i) + " out of range (n = " +
                         std::to_string(rows_.size()) + ")");
  }
  return rows_[i];
}

double contribution(const JointSample& j, std::size_t i, double alpha, const UtilityFunction& u) {
  const auto row = j.row(i);
  return conditional_ce(row, tail_scenarios(j.sum(), alpha), u);
}

double allocation_gap(const JointSample& j, double alpha, const UtilityFunction& u) {
  return allocate_unbatched(j, alpha, u).gap;
}

AllocationResult allocate(const JointSample& j, double alpha, const UtilityFunction& u,
                          std::size_t batches) {
  AllocationResult r = allocate_unbatched(j, alpha, u);
  const std::size_t m = j.scenarios();
  if (batches < 2 || m / batches < 2) return r;
  const std::size_t width = m / batches;
  std::vector<double> gaps;
  for (std::size_t b = 0; b < batches; ++b) {
    const std::size_t first = b * width;
    const std::size_t last = b + 1 == batches ? m : first + width;
    std::vector<std::vector<double>> part(j.components());
    for (std::size_t i = 0; i < j.components(); ++i) {
      const auto row = j.row(i);
      part[i].assign(row.begin() + first, row.begin() + last);
    }
    gaps.push_back(allocate_unbatched(JointSample(std::move(part)), alpha, u).gap);
  }
  double mean = 0.0;
  for (double g : gaps) mean += g;
  mean /= static_cast<double>(gaps.size());
  double ss = 0.0;
  for (double g : gaps) ss += (g - mean) * (g - mean);
  const double nb = static_cast<double>(gaps.size());
  r.gap_standard_error = std::sqrt(ss / (nb - 1.0) / nb);
  return r;
}

JointSample comonotone_sample(std::span<const SymmetricModel> marginals, std::size_t n,
                              std::uint64_t seed) {
  if (marginals.empty()) throw InputError("comonotone sample needs at least one marginal");
  const auto v = uniform_stream(n, seed);
  std::vector<std::vector<double>> rows(marginals.size(), std::vector<double>(n));
  for (std::size_t i = 0; i < marginals.size(); ++i) {
    for (std::size_t k = 0; k < n; ++k) rows[i][k] = marginals[i].quantile(v[k]);
  }
  return JointSample(std::move(rows));
}

JointSample countermonotone_pair(const SymmetricModel& a, const SymmetricModel& b, std::size_t n,
                                 std::uint64_t seed) {
  const auto v = uniform_stream(n, seed);
  std::vector<std::vector<double>> rows(2, std::vector<double>(n));
  for (std::size_t k = 0; k < n; ++k) {
    rows[0][k] = a.quantile(v[k]);
    rows[1][k] = b.quantile(1.0 - v[k]);
  }
  return JointSample(std::move(rows));
}

}  // namespace tqlm

#include "modematch/histogram.hpp"

#include <cmath>
#include <limits>

#include "modematch/error.hpp"

namespace modematch {

void HistogramSpec::validate() const {
  if (!std::isfinite(origin)) throw_invalid("histogram origin must be finite");
  if (!(bin_width > 0.0) || !std::isfinite(bin_width)) throw_invalid("bin width must be positive");
  if (num_bins < 3) throw_invalid("histogram needs at least 3 bins");
}

Eigen::VectorXd HistogramSpec::centers() const {
  Eigen::VectorXd t(num_bins);
  for (int k = 0; k < num_bins; ++k) t(k) = center(k);
  return t;
}

Eigen::VectorXd Histogram::count_vector() const {
  Eigen::VectorXd y(spec.num_bins);
  for (int k = 0; k < spec.num_bins; ++k) y(k) = static_cast<double>(counts[k]);
  return y;
}

Histogram build_histogram(std::span<const double> statistics, const HistogramSpec& spec) {
  spec.validate();
  if (statistics.empty()) throw_data("no statistics to bin");
  Histogram h;
  h.spec = spec;
  h.counts.assign(spec.num_bins, 0);
  h.total = statistics.size();
  for (std::size_t i = 0; i < statistics.size(); ++i) {
    const double x = statistics[i];
    if (std::isnan(x)) throw_data("statistic at index " + std::to_string(i) + " is NaN");
    const double u = (x - spec.origin) / spec.bin_width;
    if (!(u >= 0.0) || !(u < spec.num_bins)) {
      ++h.out_of_range;
      continue;
    }
    auto k = static_cast<long>(std::floor(u));
    // Division can land one bin off at an edge; the edges themselves decide.
    if (k > 0 && x < spec.left_edge(static_cast<int>(k))) --k;
    if (k + 1 < spec.num_bins && x >= spec.left_edge(static_cast<int>(k + 1))) ++k;
    if (x < spec.origin || x >= spec.right_edge()) {
      ++h.out_of_range;
      continue;
    }
    ++h.counts[k];
  }
  return h;
}

FitMask mask_from_range(const HistogramSpec& spec, int first, int last) {
  if (first < 0 || last >= spec.num_bins || first > last) throw_invalid("fit mask range out of bounds");
  FitMask m;
  m.weights = Eigen::VectorXd::Zero(spec.num_bins);
  m.weights.segment(first, last - first + 1).setOnes();
  m.first = first;
  m.last = last;
  m.lo = spec.left_edge(first);
  m.hi = spec.left_edge(last + 1);
  return m;
}

FitMask make_fit_mask(const HistogramSpec& spec, double lo, double hi) {
  spec.validate();
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
    throw_invalid("fit interval must satisfy lo < hi");
  }
  // Relative slack so an interval endpoint sitting on an edge does not pull in
  // a neighbouring bin through rounding.
  const double eps = 1e-9;
  const double ulo = (lo - spec.origin) / spec.bin_width;
  const double uhi = (hi - spec.origin) / spec.bin_width;
  int first = static_cast<int>(std::floor(ulo + eps));
  int last = static_cast<int>(std::ceil(uhi - eps)) - 1;
  first = std::max(first, 0);
  last = std::min(last, spec.num_bins - 1);
  if (first > last) throw_invalid("fit interval does not overlap any bin");
  return mask_from_range(spec, first, last);
}

Eigen::VectorXd density_estimate(const Histogram& h) {
  if (h.total == 0) throw_invalid("histogram is empty");
  return h.count_vector() / (static_cast<double>(h.total) * h.spec.bin_width);
}

double bin_probability(const std::function<double(double)>& f,
                       const std::function<double(double)>& f_second, int k,
                       const HistogramSpec& spec, BinOrder order) {
  const double t = spec.center(k);
  const double d = spec.bin_width;
  double p = d * f(t);
  if (order == BinOrder::Third) p += d * d * d / 24.0 * f_second(t);
  return p;
}

CurvatureBound curvature_bias_bound(const NullParams& null, const HistogramSpec& spec,
                                    const FitMask* mask) {
  null.validate();
  spec.validate();
  const double scale = std::pow(spec.bin_width, 3) / 24.0;
  CurvatureBound out;
  const int first = mask ? mask->first : 0;
  const int last = mask ? mask->last : spec.num_bins - 1;
  const double lo = mask ? mask->lo : spec.origin;
  if (null.base == NullBase::ChiSq && null.second < 2.0 && lo <= 0.0) out.unbounded = true;

  for (int k = first; k <= last; ++k) {
    const double t = spec.center(k);
    if (!null.in_support(t)) continue;
    const double v = std::abs(null.second_derivative(t)) * scale;
    if (v > out.max_over_bins) {
      out.max_over_bins = v;
      out.argmax = k;
    }
  }
  const double mode = null.mode();
  if (null.in_support(mode)) {
    out.at_mode = std::abs(null.second_derivative(mode)) * scale;
  } else {
    out.at_mode = std::numeric_limits<double>::infinity();
  }
  if (out.unbounded) out.max_over_bins = std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace modematch

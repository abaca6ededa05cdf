#pragma once

// Equal-width binning, the fitting-interval mask, and bin-width diagnostics.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "modematch/expfam.hpp"

namespace modematch {

struct HistogramSpec {
  double origin = 0.0;     // left edge of the first bin
  double bin_width = 0.1;  // Delta
  int num_bins = 3;        // K

  void validate() const;
  double center(int k) const { return origin + (k + 0.5) * bin_width; }
  double left_edge(int k) const { return origin + k * bin_width; }
  double right_edge() const { return origin + num_bins * bin_width; }
  Eigen::VectorXd centers() const;

  friend bool operator==(const HistogramSpec&, const HistogramSpec&) = default;
};

struct Histogram {
  HistogramSpec spec;
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;  // N, including out_of_range
  std::uint64_t out_of_range = 0;

  Eigen::VectorXd centers() const { return spec.centers(); }
  Eigen::VectorXd count_vector() const;
  int size() const { return spec.num_bins; }
};

/// Bins are left-closed [origin + k*Delta, origin + (k+1)*Delta).
Histogram build_histogram(std::span<const double> statistics, const HistogramSpec& spec);

/// Selected bins and the snapped fitting interval S0.
struct FitMask {
  Eigen::VectorXd weights;  // 0/1 per bin
  double lo = 0.0;
  double hi = 0.0;
  int first = 0;  // first selected bin
  int last = 0;   // last selected bin (inclusive)

  int count() const { return last - first + 1; }
  bool selected(int k) const { return k >= first && k <= last; }
};

/// Selects every bin that overlaps [lo, hi] and snaps the interval outward to
/// the edges of the selected bins. Throws if no bin overlaps.
FitMask make_fit_mask(const HistogramSpec& spec, double lo, double hi);

/// Rebuilds a mask from an already-snapped index range.
FitMask mask_from_range(const HistogramSpec& spec, int first, int last);

/// y / (N Delta).
Eigen::VectorXd density_estimate(const Histogram& h);

enum class BinOrder { First, Third };

/// Delta f(t_k), plus (Delta^3/24) f''(t_k) for BinOrder::Third.
double bin_probability(const std::function<double(double)>& f,
                       const std::function<double(double)>& f_second, int k,
                       const HistogramSpec& spec, BinOrder order);

struct CurvatureBound {
  double max_over_bins = 0.0;  // max_k |f''(t_k)| Delta^3 / 24
  int argmax = -1;
  double at_mode = 0.0;  // |f''(mode)| Delta^3 / 24
  bool unbounded = false;
};

/// Bin-width bias diagnostic over the bins of `mask` (all bins when null).
/// A chi-square null with df < 2 whose interval reaches 0 is flagged unbounded.
CurvatureBound curvature_bias_bound(const NullParams& null, const HistogramSpec& spec,
                                    const FitMask* mask = nullptr);

}  // namespace modematch

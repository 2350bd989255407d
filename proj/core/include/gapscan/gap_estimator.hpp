#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <map>
#include <string>
#include <vector>

namespace gapscan {

/// One sample of C(tau) = ln |<i[H,O]>(tau)|. A non-finite value marks a gap.
struct TraceSample {
  double tau = 0.0;
  double value = 0.0;
};

struct TraceMetadata {
  std::string model;
  std::string scheme;
  std::size_t bond_dim = 0;
  double dtau = 0.0;
  std::uint64_t seed = 0;
  /// Free-form knobs reported alongside results (superorthogonalization cadence, etc).
  std::map<std::string, std::string> extra;
};

/// Time series of C(tau) with strictly increasing tau.
struct GapTrace {
  std::vector<TraceSample> samples;
  TraceMetadata metadata;

  /// Appends a sample; throws InputError unless tau increases.
  void add(double tau, double value);
  std::size_t retained() const;
  /// Largest tau with a finite value, NaN when there is none.
  double last_good_tau() const;
  bool empty() const { return samples.empty(); }
};

struct DerivativeSample {
  double tau = 0.0;
  double value = 0.0;
};

enum class GapQuality { Clean, Noisy, NoLinearWindow, PolynomialSuspect };

const char* to_string(GapQuality q);

struct LinearWindow {
  /// Indices into the derivative series, half-open [begin, end).
  std::size_t begin = 0;
  std::size_t end = 0;
  double tau_lo = 0.0;
  double tau_hi = 0.0;
  double median = 0.0;
  bool polynomial_suspect = false;

  bool empty() const { return end <= begin; }
  std::size_t length() const { return end - begin; }
};

struct EstimatorOptions {
  /// Relative half-width of the derivative band around the run median.
  double rel_tol = 5e-3;
  std::size_t min_points = 20;
  /// Fraction of the leading derivative samples discarded as transient.
  double transient_fraction = 0.1;
  /// Secant width in samples used for the windowing derivative; 1 keeps
  /// plain central differences.
  std::size_t smoothing = 1;
  /// Samples this far below the local median of C are treated as gaps.
  double spike_depth = 10.0;
};

struct GapEstimate {
  double gap = 0.0;
  double intercept = 0.0;
  double tau_lo = 0.0;
  double tau_hi = 0.0;
  /// Standard deviation of the raw derivative inside the window.
  double derivative_std = 0.0;
  /// max(derivative_std, |gap(first half) - gap(second half)|).
  double error = 0.0;
  std::size_t window_points = 0;
  GapQuality quality = GapQuality::NoLinearWindow;
};

/// Replaces sign-change dips (samples more than `depth` below the median of
/// their neighbours) by gaps.
GapTrace despike(const GapTrace& t, double depth = 10.0);

/// Diagnostic for an evolution step that failed: the error, the step and the
/// last tau whose C(tau) was finite.
std::string step_failure(const std::exception& e, std::size_t step, double dtau, const GapTrace& t);

/// Central differences over retained samples, one-sided at the ends;
/// samples adjacent to a gap are skipped. Throws for fewer than two samples.
std::vector<DerivativeSample> numerical_derivative(const GapTrace& t);

/// Secant slope across `width` retained samples. A width equal to the period
/// of a periodic kick (e.g. regauging every n steps) flattens it exactly.
std::vector<DerivativeSample> smoothed_derivative(const GapTrace& t, std::size_t width);

/// Longest run (after the transient) with a negative median where every
/// derivative lies within rel_tol * |median| of the run median.
LinearWindow detect_linear_window(const std::vector<DerivativeSample>& deriv,
                                  const EstimatorOptions& options = {});

/// Least-squares line C = C0 - gap * tau over the window.
GapEstimate fit_gap(const GapTrace& t, const LinearWindow& window,
                    const std::vector<DerivativeSample>& raw_derivative,
                    const EstimatorOptions& options = {});

/// despike, differentiate, detect and fit in one call.
GapEstimate estimate_gap(const GapTrace& t, const EstimatorOptions& options = {});

}  // namespace gapscan

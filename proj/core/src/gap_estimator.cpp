#include "gapscan/gap_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "gapscan/error.hpp"

namespace gapscan {

namespace {

double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

struct Line {
  double slope = 0.0;
  double intercept = 0.0;
};

Line least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw InputError("least squares needs at least two distinct tau values");
  Line l;
  l.slope = sxy / sxx;
  l.intercept = my - l.slope * mx;
  return l;
}

bool finite_at(const GapTrace& t, std::size_t i) { return std::isfinite(t.samples[i].value); }

// Block medians of |d| strictly decreasing over the range, by more than 20% overall.
bool looks_polynomial(const std::vector<DerivativeSample>& d, std::size_t begin, std::size_t end,
                      double rel_tol) {
  constexpr std::size_t blocks = 10;
  if (end <= begin || end - begin < 2 * blocks) return false;
  const std::size_t len = (end - begin) / blocks;
  std::vector<double> med;
  for (std::size_t b = 0; b < blocks; ++b) {
    std::vector<double> v;
    for (std::size_t i = begin + b * len; i < begin + (b + 1) * len; ++i) v.push_back(std::abs(d[i].value));
    med.push_back(median_of(std::move(v)));
  }
  for (std::size_t b = 1; b < blocks; ++b) {
    if (!(med[b] < med[b - 1] * (1.0 - rel_tol))) return false;
  }
  return med.back() < 0.8 * med.front();
}

}  // namespace

void GapTrace::add(double tau, double value) {
  if (!std::isfinite(tau)) throw InputError("trace tau must be finite");
  if (!samples.empty() && !(tau > samples.back().tau)) {
    throw InputError("trace tau must be strictly increasing");
  }
  samples.push_back({tau, value});
}

std::size_t GapTrace::retained() const {
  return static_cast<std::size_t>(std::count_if(samples.begin(), samples.end(),
                                                [](const TraceSample& s) { return std::isfinite(s.value); }));
}

double GapTrace::last_good_tau() const {
  for (auto it = samples.rbegin(); it != samples.rend(); ++it) {
    if (std::isfinite(it->value)) return it->tau;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

std::string step_failure(const std::exception& e, std::size_t step, double dtau, const GapTrace& t) {
  char buf[160];
  std::snprintf(buf, sizeof buf, " (step %zu, tau %.6g, last good tau %.6g)", step,
                static_cast<double>(step) * dtau, t.last_good_tau());
  return e.what() + std::string(buf);
}

const char* to_string(GapQuality q) {
  switch (q) {
    case GapQuality::Clean: return "clean";
    case GapQuality::Noisy: return "noisy";
    case GapQuality::NoLinearWindow: return "no-linear-window";
    case GapQuality::PolynomialSuspect: return "polynomial-suspect";
  }
  return "?";
}

GapTrace despike(const GapTrace& t, double depth) {
  constexpr std::size_t half = 5;
  GapTrace out = t;
  const std::size_t n = t.samples.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!finite_at(t, i)) continue;
    std::vector<double> nb;
    for (std::size_t j = i >= half ? i - half : 0; j < std::min(n, i + half + 1); ++j) {
      if (j != i && finite_at(t, j)) nb.push_back(t.samples[j].value);
    }
    if (nb.size() < 2) continue;
    if (t.samples[i].value < median_of(std::move(nb)) - depth) {
      out.samples[i].value = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return out;
}

std::vector<DerivativeSample> numerical_derivative(const GapTrace& t) {
  if (t.retained() < 2) throw InputError("derivative needs at least two retained samples");
  const auto& s = t.samples;
  const std::size_t n = s.size();
  std::vector<DerivativeSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!finite_at(t, i)) continue;
    const bool has_prev = i > 0;
    const bool has_next = i + 1 < n;
    if ((has_prev && !finite_at(t, i - 1)) || (has_next && !finite_at(t, i + 1))) continue;
    double d = 0.0;
    if (has_prev && has_next) {
      d = (s[i + 1].value - s[i - 1].value) / (s[i + 1].tau - s[i - 1].tau);
    } else if (has_next) {
      d = (s[i + 1].value - s[i].value) / (s[i + 1].tau - s[i].tau);
    } else if (has_prev) {
      d = (s[i].value - s[i - 1].value) / (s[i].tau - s[i - 1].tau);
    } else {
      continue;
    }
    out.push_back({s[i].tau, d});
  }
  return out;
}

std::vector<DerivativeSample> smoothed_derivative(const GapTrace& t, std::size_t width) {
  if (width < 2) return numerical_derivative(t);
  std::vector<double> x, y;
  for (const auto& s : t.samples) {
    if (std::isfinite(s.value)) {
      x.push_back(s.tau);
      y.push_back(s.value);
    }
  }
  if (x.size() <= width) throw InputError("trace shorter than the smoothing width");
  std::vector<DerivativeSample> out;
  for (std::size_t b = 0; b + width < x.size(); ++b) {
    out.push_back({0.5 * (x[b] + x[b + width]), (y[b + width] - y[b]) / (x[b + width] - x[b])});
  }
  return out;
}

LinearWindow detect_linear_window(const std::vector<DerivativeSample>& deriv,
                                  const EstimatorOptions& options) {
  LinearWindow best;
  const std::size_t n = deriv.size();
  const auto start = static_cast<std::size_t>(std::ceil(options.transient_fraction * static_cast<double>(n)));
  const std::size_t min_points = std::max<std::size_t>(options.min_points, 2);

  std::vector<double> run;
  for (std::size_t b = start; b < n; ++b) {
    if (n - b <= best.length() || n - b < min_points) break;
    run.clear();
    std::size_t e = b;
    double med = 0.0;
    while (e < n) {
      const double v = deriv[e].value;
      run.insert(std::upper_bound(run.begin(), run.end(), v), v);
      const std::size_t m = run.size();
      const double cand = m % 2 == 1 ? run[m / 2] : 0.5 * (run[m / 2 - 1] + run[m / 2]);
      const double band = options.rel_tol * std::abs(cand);
      // A plateau at the roundoff floor is flat, not a decay.
      if (!(cand < 0.0) || run.back() - cand > band || cand - run.front() > band) break;
      med = cand;
      ++e;
    }
    if (e - b >= min_points && e - b > best.length()) {
      best.begin = b;
      best.end = e;
      best.median = med;
    }
  }
  if (!best.empty()) {
    best.tau_lo = deriv[best.begin].tau;
    best.tau_hi = deriv[best.end - 1].tau;
  }
  best.polynomial_suspect = looks_polynomial(deriv, start, best.empty() ? n : best.end, options.rel_tol);
  return best;
}

GapEstimate fit_gap(const GapTrace& t, const LinearWindow& window,
                    const std::vector<DerivativeSample>& raw_derivative,
                    const EstimatorOptions& options) {
  GapEstimate est;
  if (window.empty()) {
    est.quality = window.polynomial_suspect ? GapQuality::PolynomialSuspect : GapQuality::NoLinearWindow;
    return est;
  }
  std::vector<double> x, y;
  for (const auto& s : t.samples) {
    if (std::isfinite(s.value) && s.tau >= window.tau_lo && s.tau <= window.tau_hi) {
      x.push_back(s.tau);
      y.push_back(s.value);
    }
  }
  if (x.size() < 4) {
    est.quality = GapQuality::NoLinearWindow;
    return est;
  }
  const Line full = least_squares(x, y);
  est.gap = -full.slope;
  est.intercept = full.intercept;
  est.tau_lo = window.tau_lo;
  est.tau_hi = window.tau_hi;
  est.window_points = x.size();

  const std::size_t h = x.size() / 2;
  const Line first = least_squares({x.begin(), x.begin() + static_cast<std::ptrdiff_t>(h)},
                                   {y.begin(), y.begin() + static_cast<std::ptrdiff_t>(h)});
  const Line second = least_squares({x.begin() + static_cast<std::ptrdiff_t>(h), x.end()},
                                    {y.begin() + static_cast<std::ptrdiff_t>(h), y.end()});

  std::vector<double> dv;
  for (const auto& d : raw_derivative) {
    if (d.tau >= window.tau_lo && d.tau <= window.tau_hi) dv.push_back(d.value);
  }
  double mean = 0.0, var = 0.0;
  for (double v : dv) mean += v;
  mean /= static_cast<double>(std::max<std::size_t>(dv.size(), 1));
  for (double v : dv) var += (v - mean) * (v - mean);
  est.derivative_std = dv.size() > 1 ? std::sqrt(var / static_cast<double>(dv.size() - 1)) : 0.0;
  est.error = std::max(est.derivative_std, std::abs(first.slope - second.slope));

  if (window.polynomial_suspect) {
    est.quality = GapQuality::PolynomialSuspect;
  } else if (!(est.gap > 0.0)) {
    est.quality = GapQuality::NoLinearWindow;
  } else if (est.derivative_std > options.rel_tol * std::abs(mean)) {
    est.quality = GapQuality::Noisy;
  } else {
    est.quality = GapQuality::Clean;
  }
  return est;
}

GapEstimate estimate_gap(const GapTrace& t, const EstimatorOptions& options) {
  const GapTrace clean = despike(t, options.spike_depth);
  const auto raw = numerical_derivative(clean);
  const auto deriv = options.smoothing > 1 ? smoothed_derivative(clean, options.smoothing) : raw;
  const LinearWindow window = detect_linear_window(deriv, options);
  return fit_gap(clean, window, raw, options);
}

}  // namespace gapscan

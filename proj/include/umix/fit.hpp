#pragma once

#include <cmath>
#include <vector>

#include "umix/error.hpp"

namespace umix {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;  // standard error of the slope
  double rms = 0.0;       // root mean square residual
  int points = 0;
};

/// Ordinary least squares y = intercept + slope x.
inline LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw Error(Errc::LengthMismatch, "fit inputs differ in length");
  LinearFit f;
  f.points = static_cast<int>(x.size());
  if (x.size() < 2) {
    if (!y.empty()) f.intercept = y[0];
    return f;
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw Error(Errc::BadRange, "degenerate abscissae in fit");
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    double r = y[i] - f.intercept - f.slope * x[i];
    ss += r * r;
  }
  f.rms = std::sqrt(ss / n);
  if (x.size() > 2) f.slope_se = std::sqrt(ss / (n - 2.0) / sxx);
  return f;
}

}  // namespace umix

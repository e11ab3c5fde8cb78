/*
 * Copyright (c) 2026, the bmmpp2 authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace bmmpp {

// Nelder-Mead simplex search with projection onto a box.  Dimensions here
// are tiny (1, 2 or 4) and objectives are cheap closed forms, so a plain
// simplex with tight tolerances is accurate and deterministic.
struct NelderMeadOptions {
  int max_iter = 4000;
  double xtol = 1e-13;  // simplex extent, relative to box width
  double ftol = 1e-17;  // value spread
  double initial_step = 0.10;  // fraction of box width
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
};

inline NelderMeadResult nelder_mead_box(
    const std::function<double(const std::vector<double> &)> &f,
    const std::vector<double> &start, const std::vector<double> &lo,
    const std::vector<double> &hi, const NelderMeadOptions &opt = {}) {
  const std::size_t n = start.size();
  auto project = [&](std::vector<double> p) {
    for (std::size_t i = 0; i < n; ++i) p[i] = std::clamp(p[i], lo[i], hi[i]);
    return p;
  };

  std::vector<std::vector<double>> simplex(n + 1);
  std::vector<double> values(n + 1);
  simplex[0] = project(start);
  values[0] = f(simplex[0]);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> p = simplex[0];
    double step = opt.initial_step * (hi[i] - lo[i]);
    if (step <= 0.0) step = 1e-8;
    p[i] = (p[i] + step <= hi[i]) ? p[i] + step : p[i] - step;
    simplex[i + 1] = project(p);
    values[i + 1] = f(simplex[i + 1]);
  }

  NelderMeadResult res;
  int iter = 0;
  for (; iter < opt.max_iter; ++iter) {
    // Order the simplex.
    std::vector<std::size_t> idx(n + 1);
    for (std::size_t i = 0; i <= n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<std::vector<double>> sx(n + 1);
    std::vector<double> sv(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      sx[i] = simplex[idx[i]];
      sv[i] = values[idx[i]];
    }
    simplex.swap(sx);
    values.swap(sv);

    // Convergence: simplex extent and value spread.
    double extent = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double span = 0.0;
      for (std::size_t j = 1; j <= n; ++j)
        span = std::max(span, std::fabs(simplex[j][i] - simplex[0][i]));
      const double width = std::max(hi[i] - lo[i], 1e-300);
      extent = std::max(extent, span / width);
    }
    if (extent < opt.xtol && std::fabs(values[n] - values[0]) < opt.ftol) break;

    std::vector<double> centroid(n, 0.0);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[j][i] / double(n);

    auto along = [&](double coef) {
      std::vector<double> p(n);
      for (std::size_t i = 0; i < n; ++i)
        p[i] = centroid[i] + coef * (centroid[i] - simplex[n][i]);
      return project(p);
    };

    const std::vector<double> xr = along(1.0);
    const double fr = f(xr);
    if (fr < values[0]) {
      const std::vector<double> xe = along(2.0);
      const double fe = f(xe);
      if (fe < fr) { simplex[n] = xe; values[n] = fe; }
      else { simplex[n] = xr; values[n] = fr; }
    } else if (fr < values[n - 1]) {
      simplex[n] = xr;
      values[n] = fr;
    } else {
      const bool outside = fr < values[n];
      const std::vector<double> xc = along(outside ? 0.5 : -0.5);
      const double fc = f(xc);
      if (fc < std::min(fr, values[n])) {
        simplex[n] = xc;
        values[n] = fc;
      } else {
        // Shrink toward the best point.
        for (std::size_t j = 1; j <= n; ++j) {
          for (std::size_t i = 0; i < n; ++i)
            simplex[j][i] = simplex[0][i] + 0.5 * (simplex[j][i] - simplex[0][i]);
          simplex[j] = project(simplex[j]);
          values[j] = f(simplex[j]);
        }
      }
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i <= n; ++i)
    if (values[i] < values[best]) best = i;
  res.x = simplex[best];
  res.value = values[best];
  res.iterations = iter;
  return res;
}

}  // namespace bmmpp

/**
 * Copyright 2026 lmkit authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "lmkit/evaluation.hpp"

#include <cmath>

#include "lmkit/errors.hpp"

namespace lmkit {

double nme(const Landmarks& pred, const GroundTruthRecord& gt) {
  if (pred.size() != gt.landmarks.size() || pred.size() == 0)
    throw CountMismatch("prediction and ground truth landmark counts differ");
  if (!(gt.bbox.w > 0.0) || !(gt.bbox.h > 0.0))
    throw DegenerateInput("ground truth bbox must have positive extent");

  const double d = std::sqrt(gt.bbox.w * gt.bbox.h);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    sum += std::hypot(pred[i].x - gt.landmarks[i].x, pred[i].y - gt.landmarks[i].y);
  return sum / (static_cast<double>(pred.size()) * d);
}

std::vector<CedSample> ced_curve(const std::vector<double>& nmes, double max_threshold,
                                 int steps) {
  if (nmes.empty()) throw EmptyInput("no NME values");
  if (steps < 2) throw InvalidSize("CED needs at least 2 threshold steps");
  if (!(max_threshold > 0.0)) throw InvalidSize("CED threshold must be positive");

  std::vector<CedSample> out;
  out.reserve(static_cast<std::size_t>(steps));
  const double n = static_cast<double>(nmes.size());
  for (int i = 0; i < steps; ++i) {
    const double t = max_threshold * static_cast<double>(i) / static_cast<double>(steps - 1);
    std::size_t count = 0;
    for (const double v : nmes)
      if (v <= t) ++count;
    out.push_back({t, static_cast<double>(count) / n});
  }
  return out;
}

double auc(const std::vector<CedSample>& ced) {
  if (ced.size() < 2) throw EmptyInput("CED curve needs at least 2 samples");
  double area = 0.0;
  for (std::size_t i = 1; i < ced.size(); ++i) {
    const double dt = ced[i].threshold - ced[i - 1].threshold;
    area += dt * 0.5 * (ced[i].fraction + ced[i - 1].fraction);
  }
  const double span = ced.back().threshold;
  if (!(span > 0.0)) throw InvalidSize("CED span must be positive");
  return area / span;
}

double failure_rate(const std::vector<double>& nmes, double threshold) {
  if (nmes.empty()) throw EmptyInput("no NME values");
  std::size_t failures = 0;
  for (const double v : nmes)
    if (v > threshold) ++failures;
  return static_cast<double>(failures) / static_cast<double>(nmes.size());
}

double mean_nme(const std::vector<double>& nmes) {
  if (nmes.empty()) throw EmptyInput("no NME values");
  double sum = 0.0;
  for (const double v : nmes) sum += v;
  return sum / static_cast<double>(nmes.size());
}

MetricsReport compute_metrics(const std::vector<double>& nmes, double max_threshold,
                              int steps) {
  MetricsReport report;
  report.per_image_nme = nmes;
  report.ced = ced_curve(nmes, max_threshold, steps);
  report.auc = auc(report.ced);
  report.failure_rate = failure_rate(nmes, max_threshold);
  report.mean_nme = mean_nme(nmes);
  return report;
}

} // namespace lmkit

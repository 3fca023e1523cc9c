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
#pragma once

#include <vector>

#include "lmkit/geometry.hpp"

namespace lmkit {

struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;
};

struct GroundTruthRecord {
  Landmarks landmarks;
  BBox bbox; // normalizer d = sqrt(w * h)
};

struct CedSample {
  double threshold = 0.0;
  double fraction = 0.0; // of images with NME <= threshold
};

struct MetricsReport {
  std::vector<double> per_image_nme;
  std::vector<CedSample> ced;
  double auc = 0.0;          // normalized area of the CED on [0, max threshold]
  double failure_rate = 0.0; // fraction with NME strictly above the threshold
  double mean_nme = 0.0;
};

/// Mean Euclidean landmark distance divided by sqrt(bbox w * h).
/// Throws CountMismatch if the landmark counts differ.
double nme(const Landmarks& pred, const GroundTruthRecord& gt);

/// Fraction of images with NME <= t on a uniform threshold grid including
/// both endpoints. steps >= 2; throws EmptyInput on an empty NME list.
std::vector<CedSample> ced_curve(const std::vector<double>& nmes,
                                 double max_threshold = 0.08, int steps = 1000);

/// Trapezoidal area of the CED normalized by its final threshold.
double auc(const std::vector<CedSample>& ced);

/// Fraction strictly above the threshold (an NME of exactly 0.08 passes).
double failure_rate(const std::vector<double>& nmes, double threshold = 0.08);

double mean_nme(const std::vector<double>& nmes);

/// Convenience aggregation of all of the above.
MetricsReport compute_metrics(const std::vector<double>& nmes, double max_threshold = 0.08,
                              int steps = 1000);

} // namespace lmkit

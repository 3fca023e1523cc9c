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

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "lmkit/evaluation.hpp"
#include "lmkit/geometry.hpp"

namespace lmkit {

/// One detector record: bounding box plus the five naive landmarks
/// (left eye, right eye, nose, left mouth, right mouth by default).
struct DetectorOutput {
  std::string image; // image stem this detection belongs to
  BBox bbox;
  Landmarks naive; // 5 points
  double confidence = 0.0;
};

// Landmarks: CSV is one "x,y" pair per line, row index = landmark index;
// JSON is an array of [x, y].
Landmarks read_landmarks_csv(const std::filesystem::path& path);
void write_landmarks_csv(const Landmarks& lmk, const std::filesystem::path& path);
Landmarks read_landmarks_json(const std::filesystem::path& path);
void write_landmarks_json(const Landmarks& lmk, const std::filesystem::path& path);
/// Dispatches on the .csv / .json extension.
Landmarks read_landmarks(const std::filesystem::path& path);

// Transform: JSON array of 6 floats, row-major.
SimilarityTransform read_transform_json(const std::filesystem::path& path);
void write_transform_json(const SimilarityTransform& t, const std::filesystem::path& path);

/// Detector output file: JSON array of
///   {"image": stem, "bbox": [x,y,w,h], "landmarks": [[x,y] x5], "confidence": c}
/// `order` permutes the landmark rows into the canonical naive ordering.
std::vector<DetectorOutput> read_detector_outputs(
    const std::filesystem::path& path,
    const std::array<int, 5>& order = {0, 1, 2, 3, 4});

void write_detector_outputs(const std::vector<DetectorOutput>& dets,
                            const std::filesystem::path& path);

/// JD-style annotation text: optional leading point-count line, then one
/// "x y" pair per line.
Landmarks read_annotation_text(const std::filesystem::path& path);
void write_annotation_text(const Landmarks& lmk, const std::filesystem::path& path);

/// Annotation JSON: {"landmarks": [[x,y]...], "bbox": [x,y,w,h] (optional)}.
GroundTruthRecord read_annotation_json(const std::filesystem::path& path);
void write_annotation_json(const GroundTruthRecord& rec, const std::filesystem::path& path);

/// CED CSV: "threshold,fraction" per line with a header row.
void write_ced_csv(const std::vector<CedSample>& ced, const std::filesystem::path& path);
std::vector<CedSample> read_ced_csv(const std::filesystem::path& path);

/// Metrics JSON report.
void write_metrics_json(const MetricsReport& report, const std::filesystem::path& path);

/// SVG polyline plot of a CED curve.
void write_ced_svg(const std::vector<CedSample>& ced, const std::filesystem::path& path);

} // namespace lmkit

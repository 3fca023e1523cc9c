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
#include "lmkit/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lmkit/errors.hpp"

namespace lmkit {

namespace {

using nlohmann::json;

json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("bad JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

void save_json(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write: " + path.string());
  out << j.dump(2) << "\n";
}

json landmarks_to_json(const Landmarks& lmk) {
  json arr = json::array();
  for (const auto& p : lmk.points) arr.push_back({p.x, p.y});
  return arr;
}

Landmarks landmarks_from_json(const json& arr, const std::string& context) {
  if (!arr.is_array()) throw ParseError("expected landmark array in " + context);
  Landmarks lmk;
  lmk.points.reserve(arr.size());
  for (const auto& item : arr) {
    if (!item.is_array() || item.size() != 2)
      throw ParseError("expected [x, y] pairs in " + context);
    lmk.points.push_back({item[0].get<double>(), item[1].get<double>()});
  }
  return lmk;
}

BBox bbox_from_json(const json& arr, const std::string& context) {
  if (!arr.is_array() || arr.size() != 4)
    throw ParseError("expected [x, y, w, h] bbox in " + context);
  return {arr[0].get<double>(), arr[1].get<double>(), arr[2].get<double>(),
          arr[3].get<double>()};
}

} // namespace

Landmarks read_landmarks_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open landmarks: " + path.string());
  Landmarks lmk;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    Point2 p;
    if (!(row >> p.x >> p.y))
      throw ParseError("bad landmark row '" + line + "' in " + path.string());
    lmk.points.push_back(p);
  }
  if (lmk.points.empty()) throw ParseError("no landmarks in " + path.string());
  return lmk;
}

void write_landmarks_csv(const Landmarks& lmk, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write landmarks: " + path.string());
  out.precision(17);
  for (const auto& p : lmk.points) out << p.x << "," << p.y << "\n";
}

Landmarks read_landmarks_json(const std::filesystem::path& path) {
  return landmarks_from_json(load_json(path), path.string());
}

void write_landmarks_json(const Landmarks& lmk, const std::filesystem::path& path) {
  save_json(landmarks_to_json(lmk), path);
}

Landmarks read_landmarks(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".json") return read_landmarks_json(path);
  if (ext == ".csv") return read_landmarks_csv(path);
  if (ext == ".txt") return read_annotation_text(path);
  throw ParseError("unknown landmark file extension: " + path.string());
}

SimilarityTransform read_transform_json(const std::filesystem::path& path) {
  const json j = load_json(path);
  if (!j.is_array() || j.size() != 6)
    throw ParseError("expected 6 row-major floats in " + path.string());
  std::array<double, 6> m;
  for (std::size_t i = 0; i < 6; ++i) m[i] = j[i].get<double>();
  return SimilarityTransform::from_matrix(m);
}

void write_transform_json(const SimilarityTransform& t, const std::filesystem::path& path) {
  const auto m = t.matrix();
  save_json(json(m), path);
}

std::vector<DetectorOutput> read_detector_outputs(const std::filesystem::path& path,
                                                  const std::array<int, 5>& order) {
  const json j = load_json(path);
  if (!j.is_array()) throw ParseError("detector output must be a JSON array: " + path.string());

  std::vector<DetectorOutput> out;
  out.reserve(j.size());
  for (const auto& item : j) {
    DetectorOutput det;
    det.image = item.at("image").get<std::string>();
    det.bbox = bbox_from_json(item.at("bbox"), path.string());
    if (!(det.bbox.w > 0.0) || !(det.bbox.h > 0.0))
      throw ParseError("detector bbox must have positive extent: " + det.image);
    const Landmarks raw = landmarks_from_json(item.at("landmarks"), path.string());
    if (raw.size() != 5)
      throw ParseError("detector entry needs exactly 5 naive landmarks: " + det.image);
    det.naive.points.resize(5);
    for (int i = 0; i < 5; ++i) det.naive.points[i] = raw[static_cast<std::size_t>(order[i])];
    det.confidence = item.value("confidence", 0.0);
    out.push_back(std::move(det));
  }
  return out;
}

void write_detector_outputs(const std::vector<DetectorOutput>& dets,
                            const std::filesystem::path& path) {
  json arr = json::array();
  for (const auto& det : dets) {
    arr.push_back({{"image", det.image},
                   {"bbox", {det.bbox.x, det.bbox.y, det.bbox.w, det.bbox.h}},
                   {"landmarks", landmarks_to_json(det.naive)},
                   {"confidence", det.confidence}});
  }
  save_json(arr, path);
}

Landmarks read_annotation_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open annotation: " + path.string());

  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::vector<double> vals;
    double v;
    while (row >> v) vals.push_back(v);
    if (!vals.empty()) rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw ParseError("empty annotation: " + path.string());

  // Optional leading point-count line.
  std::size_t start = 0;
  if (rows[0].size() == 1 && rows[0][0] == std::floor(rows[0][0]) &&
      static_cast<std::size_t>(rows[0][0]) == rows.size() - 1)
    start = 1;

  Landmarks lmk;
  for (std::size_t i = start; i < rows.size(); ++i) {
    if (rows[i].size() != 2)
      throw ParseError("expected 'x y' rows in " + path.string());
    lmk.points.push_back({rows[i][0], rows[i][1]});
  }
  if (lmk.points.empty()) throw ParseError("no landmark rows in " + path.string());
  return lmk;
}

void write_annotation_text(const Landmarks& lmk, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write annotation: " + path.string());
  out.precision(17);
  out << lmk.size() << "\n";
  for (const auto& p : lmk.points) out << p.x << " " << p.y << "\n";
}

GroundTruthRecord read_annotation_json(const std::filesystem::path& path) {
  const json j = load_json(path);
  GroundTruthRecord rec;
  rec.landmarks = landmarks_from_json(j.at("landmarks"), path.string());
  if (j.contains("bbox")) rec.bbox = bbox_from_json(j.at("bbox"), path.string());
  return rec;
}

void write_annotation_json(const GroundTruthRecord& rec, const std::filesystem::path& path) {
  save_json({{"landmarks", landmarks_to_json(rec.landmarks)},
             {"bbox", {rec.bbox.x, rec.bbox.y, rec.bbox.w, rec.bbox.h}}},
            path);
}

void write_ced_csv(const std::vector<CedSample>& ced, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write CED: " + path.string());
  out.precision(17);
  out << "threshold,fraction\n";
  for (const auto& s : ced) out << s.threshold << "," << s.fraction << "\n";
}

std::vector<CedSample> read_ced_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open CED: " + path.string());
  std::vector<CedSample> ced;
  std::string line;
  std::getline(in, line); // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    CedSample s;
    if (!(row >> s.threshold >> s.fraction))
      throw ParseError("bad CED row '" + line + "' in " + path.string());
    ced.push_back(s);
  }
  if (ced.empty()) throw ParseError("empty CED file: " + path.string());
  return ced;
}

void write_metrics_json(const MetricsReport& report, const std::filesystem::path& path) {
  json j{{"mean_nme", report.mean_nme},
         {"auc", report.auc},
         {"failure_rate", report.failure_rate},
         {"num_images", report.per_image_nme.size()}};
  json nmes = json::array();
  for (const double v : report.per_image_nme) {
    // JSON has no inf literal; failures serialize as null.
    if (std::isfinite(v))
      nmes.push_back(v);
    else
      nmes.push_back(nullptr);
  }
  j["per_image_nme"] = std::move(nmes);
  save_json(j, path);
}

void write_ced_svg(const std::vector<CedSample>& ced, const std::filesystem::path& path) {
  if (ced.empty()) throw EmptyInput("no CED samples to plot");

  const double width = 480.0, height = 360.0, margin = 48.0;
  const double plot_w = width - 2 * margin, plot_h = height - 2 * margin;
  const double max_t = ced.back().threshold;

  std::ostringstream poly;
  poly.precision(3);
  poly << std::fixed;
  for (const auto& s : ced) {
    const double px = margin + plot_w * (max_t > 0 ? s.threshold / max_t : 0.0);
    const double py = height - margin - plot_h * s.fraction;
    poly << px << "," << py << " ";
  }

  std::ofstream out(path);
  if (!out) throw IoError("cannot write SVG: " + path.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n"
      << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "  <line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\""
      << width - margin << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n"
      << "  <line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin
      << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n"
      << "  <polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\""
      << poly.str() << "\"/>\n"
      << "  <text x=\"" << width / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\" font-size=\"12\">NME threshold (max " << max_t
      << ")</text>\n"
      << "  <text x=\"14\" y=\"" << height / 2
      << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 "
      << height / 2 << ")\">fraction of images</text>\n"
      << "</svg>\n";
}

} // namespace lmkit

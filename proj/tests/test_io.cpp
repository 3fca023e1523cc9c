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
#include <fstream>

#include <doctest.h>

#include "lmkit/errors.hpp"
#include "lmkit/io.hpp"
#include "test_support.hpp"

using namespace lmkit;

TEST_CASE("landmark CSV and JSON roundtrips") {
  testing::TempDir dir("lmk_io");
  const Landmarks lmk({{1.25, -2.5}, {100.125, 42.0}, {0.0, 0.0}});

  write_landmarks_csv(lmk, dir / "pts.csv");
  const Landmarks csv = read_landmarks_csv(dir / "pts.csv");
  REQUIRE(csv.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(csv[i].x == lmk[i].x);
    CHECK(csv[i].y == lmk[i].y);
  }

  write_landmarks_json(lmk, dir / "pts.json");
  const Landmarks js = read_landmarks(dir / "pts.json");
  REQUIRE(js.size() == 3);
  CHECK(js[1].x == lmk[1].x);

  CHECK_THROWS_AS(read_landmarks(dir / "pts.xyz"), ParseError);
  CHECK_THROWS_AS(read_landmarks_csv(dir / "absent.csv"), IoError);
}

TEST_CASE("transform JSON is 6 row-major floats") {
  testing::TempDir dir("tf_io");
  const SimilarityTransform t = SimilarityTransform::from_parts(1.5, 0.3, 9.0, -2.0);
  write_transform_json(t, dir / "t.json");
  const SimilarityTransform back = read_transform_json(dir / "t.json");
  const auto a = t.matrix(), b = back.matrix();
  for (int i = 0; i < 6; ++i) CHECK(a[i] == b[i]);

  {
    std::ofstream bad(dir / "bad.json");
    bad << "[1, 2, 3]";
  }
  CHECK_THROWS_AS(read_transform_json(dir / "bad.json"), ParseError);
}

TEST_CASE("detector output parsing with landmark reordering") {
  testing::TempDir dir("det_io");
  {
    std::ofstream out(dir / "dets.json");
    out << R"([{"image": "a", "bbox": [1, 2, 30, 40],
               "landmarks": [[5,5],[1,1],[2,2],[3,3],[4,4]],
               "confidence": 0.75}])";
  }

  const auto plain = read_detector_outputs(dir / "dets.json");
  REQUIRE(plain.size() == 1);
  CHECK(plain[0].image == "a");
  CHECK(plain[0].bbox.w == 30.0);
  CHECK(plain[0].confidence == 0.75);
  CHECK(plain[0].naive[0].x == 5.0);

  // reorder: canonical index 0 should read row 1
  const auto reordered = read_detector_outputs(dir / "dets.json", {1, 0, 2, 3, 4});
  CHECK(reordered[0].naive[0].x == 1.0);
  CHECK(reordered[0].naive[1].x == 5.0);

  {
    std::ofstream out(dir / "short.json");
    out << R"([{"image": "b", "bbox": [0,0,1,1], "landmarks": [[1,1]]}])";
  }
  CHECK_THROWS_AS(read_detector_outputs(dir / "short.json"), ParseError);

  {
    std::ofstream out(dir / "flat_bbox.json");
    out << R"([{"image": "c", "bbox": [0,0,10,0],
               "landmarks": [[1,1],[2,2],[3,3],[4,4],[5,5]]}])";
  }
  CHECK_THROWS_AS(read_detector_outputs(dir / "flat_bbox.json"), ParseError);
}

TEST_CASE("annotation text: optional count line and x y rows") {
  testing::TempDir dir("anno_io");
  {
    std::ofstream out(dir / "with_count.txt");
    out << "3\n10.5 20.5\n30 40\n50.25 60.75\n";
  }
  const Landmarks with_count = read_annotation_text(dir / "with_count.txt");
  REQUIRE(with_count.size() == 3);
  CHECK(with_count[0].x == 10.5);
  CHECK(with_count[2].y == 60.75);

  {
    std::ofstream out(dir / "bare.txt");
    out << "10.5 20.5\n30 40\n";
  }
  const Landmarks bare = read_annotation_text(dir / "bare.txt");
  REQUIRE(bare.size() == 2);
  CHECK(bare[1].x == 30.0);

  const Landmarks original({{1.5, 2.5}, {3.0, 4.0}});
  write_annotation_text(original, dir / "roundtrip.txt");
  const Landmarks back = read_annotation_text(dir / "roundtrip.txt");
  REQUIRE(back.size() == 2);
  CHECK(back[0].x == 1.5);
  CHECK(back[1].y == 4.0);
}

TEST_CASE("annotation JSON with bbox") {
  testing::TempDir dir("anno_json");
  GroundTruthRecord rec;
  rec.landmarks = Landmarks({{1.0, 2.0}, {3.0, 4.0}});
  rec.bbox = {5.0, 6.0, 70.0, 80.0};
  write_annotation_json(rec, dir / "gt.json");
  const GroundTruthRecord back = read_annotation_json(dir / "gt.json");
  REQUIRE(back.landmarks.size() == 2);
  CHECK(back.bbox.w == 70.0);
  CHECK(back.landmarks[1].y == 4.0);
}

TEST_CASE("CED CSV roundtrip and SVG plot") {
  testing::TempDir dir("ced_io");
  const std::vector<CedSample> ced{{0.0, 0.0}, {0.04, 0.5}, {0.08, 1.0}};
  write_ced_csv(ced, dir / "ced.csv");
  const auto back = read_ced_csv(dir / "ced.csv");
  REQUIRE(back.size() == 3);
  CHECK(back[1].threshold == 0.04);
  CHECK(back[1].fraction == 0.5);

  write_ced_svg(ced, dir / "ced.svg");
  std::ifstream svg(dir / "ced.svg");
  std::string text((std::istreambuf_iterator<char>(svg)), std::istreambuf_iterator<char>());
  CHECK(text.find("<svg") != std::string::npos);
  CHECK(text.find("polyline") != std::string::npos);
}

TEST_CASE("metrics JSON serializes failures as null") {
  testing::TempDir dir("metrics_io");
  MetricsReport report;
  report.per_image_nme = {0.01, std::numeric_limits<double>::infinity()};
  report.auc = 0.5;
  report.failure_rate = 0.5;
  report.mean_nme = std::numeric_limits<double>::infinity();
  write_metrics_json(report, dir / "m.json");

  std::ifstream in(dir / "m.json");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(text.find("null") != std::string::npos);
  CHECK(text.find("\"auc\"") != std::string::npos);
}

TEST_CASE("PPM image IO roundtrip and format errors") {
  testing::TempDir dir("ppm_io");
  const Image img = testing::gradient_image(17, 9);
  write_ppm(img, dir / "img.ppm");
  CHECK(read_ppm(dir / "img.ppm") == img);

  const Image gray = testing::gradient_image(8, 8, 1);
  write_ppm(gray, dir / "gray.pgm");
  CHECK(read_ppm(dir / "gray.pgm") == gray);

  {
    std::ofstream bad(dir / "bad.ppm", std::ios::binary);
    bad << "P3\n2 2\n255\n";
  }
  CHECK_THROWS_AS(read_ppm(dir / "bad.ppm"), IoError);
  {
    std::ofstream trunc(dir / "trunc.ppm", std::ios::binary);
    trunc << "P6\n4 4\n255\nxx";
  }
  CHECK_THROWS_AS(read_ppm(dir / "trunc.ppm"), IoError);
}

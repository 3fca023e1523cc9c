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
#include <cmath>
#include <fstream>

#include <doctest.h>

#include "lmkit/cli.hpp"
#include "lmkit/heatmap.hpp"
#include "lmkit/io.hpp"
#include "lmkit/pipeline.hpp"
#include "test_support.hpp"

using namespace lmkit;

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

TEST_CASE("cli: plan writes a ranked report") {
  testing::TempDir dir("cli_plan");
  const auto out = (dir / "report.csv").string();
  const int rc = run_cli({"plan", "--strategies", "DDDD,SSSS", "--report", "csv",
                          "--out", out});
  CHECK(rc == 0);
  const std::string text = slurp(out);
  CHECK(text.find("strategy,gflops") != std::string::npos);
  CHECK(text.find("SSSS") < text.find("DDDD")); // ranked ascending

  const int rc_json = run_cli({"plan", "--strategies", "SSD", "--channels", "128",
                               "--backbone", "1280x6x6", "--report", "json", "--out",
                               (dir / "report.json").string()});
  CHECK(rc_json == 0);
  CHECK(slurp(dir / "report.json").find("\"strategy\": \"SSD\"") != std::string::npos);
}

TEST_CASE("cli: plan rejects an invalid strategy") {
  CHECK(run_cli({"plan", "--strategies", "SXQ"}) != 0);
}

TEST_CASE("cli: encode then decode recovers sub-pixel landmarks") {
  testing::TempDir dir("cli_codec");
  write_landmarks_csv(Landmarks({{10.3, 20.7}, {48.0, 48.0}}), dir / "pts.csv");

  CHECK(run_cli({"encode", "--landmarks", (dir / "pts.csv").string(), "--height", "96",
                 "--width", "96", "--sigma", "1.5", "--out",
                 (dir / "stack.hms").string()}) == 0);
  CHECK(run_cli({"decode", "--stack", (dir / "stack.hms").string(), "--method", "gaussian",
                 "--out", (dir / "decoded.csv").string()}) == 0);

  const Landmarks decoded = read_landmarks_csv(dir / "decoded.csv");
  REQUIRE(decoded.size() == 2);
  CHECK(std::abs(decoded[0].x - 10.3) < 1e-3); // float32 wire format
  CHECK(std::abs(decoded[0].y - 20.7) < 1e-3);
  CHECK(std::abs(decoded[1].x - 48.0) < 1e-3);
}

TEST_CASE("cli: augment is reproducible for a fixed seed") {
  testing::TempDir dir("cli_aug");
  write_ppm(testing::gradient_image(64, 64), dir / "in.ppm");
  {
    std::ofstream cfg(dir / "aug.json");
    cfg << R"({"erase": {"probability": 1.0}, "color_jitter": {"strength": 0.4}})";
  }

  CHECK(run_cli({"--seed", "5", "augment", "--image", (dir / "in.ppm").string(),
                 "--config", (dir / "aug.json").string(), "--out",
                 (dir / "a.ppm").string()}) == 0);
  CHECK(run_cli({"--seed", "5", "augment", "--image", (dir / "in.ppm").string(),
                 "--config", (dir / "aug.json").string(), "--out",
                 (dir / "b.ppm").string()}) == 0);
  CHECK(read_ppm(dir / "a.ppm") == read_ppm(dir / "b.ppm"));
  CHECK(read_ppm(dir / "a.ppm") != read_ppm(dir / "in.ppm"));
}

TEST_CASE("cli: align -> infer -> eval -> ced-plot on a synthetic pair") {
  testing::TempDir dir("cli_e2e");
  namespace fs = std::filesystem;
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "annotations");

  // two synthetic faces: naive points are the reference template moved by a
  // pure translation per image
  const ReferenceTemplate tmpl = ReferenceTemplate::standard();
  std::vector<DetectorOutput> dets;
  const int num_landmarks = 6;
  for (int i = 0; i < 2; ++i) {
    const std::string stem = "face" + std::to_string(i);
    write_ppm(testing::gradient_image(224, 224), dir / "images" / (stem + ".ppm"));

    const double dx = 6.0 + 3.0 * i, dy = -4.0 + 2.0 * i;
    DetectorOutput det;
    det.image = stem;
    for (const auto& p : tmpl.points.points) det.naive.points.push_back({p.x + dx, p.y + dy});
    det.bbox = {40.0 + dx, 60.0 + dy, 110.0, 120.0};
    det.confidence = 0.9;
    dets.push_back(det);

    GroundTruthRecord gt;
    for (int k = 0; k < num_landmarks; ++k)
      gt.landmarks.points.push_back({60.0 + dx + 12.0 * k, 90.0 + dy + 5.0 * k});
    gt.bbox = det.bbox;
    write_annotation_json(gt, dir / "annotations" / (stem + ".json"));
  }
  write_detector_outputs(dets, dir / "dets.json");

  {
    std::ofstream cfg(dir / "config.json");
    cfg << R"({"num_landmarks": 6, "decoder": "gaussian", "tta": true})";
  }
  const std::string config = (dir / "config.json").string();

  CHECK(run_cli({"--config", config, "align", "--images", (dir / "images").string(),
                 "--detections", (dir / "dets.json").string(), "--annotations",
                 (dir / "annotations").string(), "--out", (dir / "aligned").string()}) == 0);
  REQUIRE(fs::exists(dir / "aligned" / "manifest.json"));

  // replay stacks that encode the aligned ground truth
  const AlignManifest manifest = read_manifest(dir / "aligned" / "manifest.json");
  REQUIRE(manifest.entries.size() == 2);
  fs::create_directories(dir / "replay");
  for (const auto& entry : manifest.entries) {
    const Landmarks aligned = read_landmarks_json(entry.aligned_landmarks);
    Landmarks direct, mirrored;
    for (const auto& p : aligned.points) {
      direct.points.push_back({p.x / 2.0, p.y / 2.0});
      mirrored.points.push_back({(191.0 - p.x) / 2.0, p.y / 2.0});
    }
    write_hms(encode(direct, 96, 96, {1.5}, 2.0), dir / "replay" / (entry.stem + ".hms"));
    write_hms(encode(mirrored, 96, 96, {1.5}, 2.0),
              dir / "replay" / (entry.stem + ".flip.hms"));
  }

  CHECK(run_cli({"--config", config, "infer", "--manifest",
                 (dir / "aligned" / "manifest.json").string(), "--runner", "replay",
                 "--replay-dir", (dir / "replay").string(), "--out",
                 (dir / "predictions").string()}) == 0);
  REQUIRE(fs::exists(dir / "predictions" / "face0.json"));

  CHECK(run_cli({"--config", config, "eval", "--manifest",
                 (dir / "aligned" / "manifest.json").string(), "--predictions",
                 (dir / "predictions").string(), "--report", (dir / "metrics.json").string(),
                 "--ced", (dir / "ced.csv").string()}) == 0);
  const std::string metrics = slurp(dir / "metrics.json");
  CHECK(metrics.find("\"failure_rate\": 0.0") != std::string::npos);

  // the runner path through eval should agree
  CHECK(run_cli({"--config", config, "eval", "--manifest",
                 (dir / "aligned" / "manifest.json").string(), "--runner", "replay",
                 "--replay-dir", (dir / "replay").string(), "--report",
                 (dir / "metrics2.json").string()}) == 0);
  CHECK(slurp(dir / "metrics2.json").find("\"failure_rate\": 0.0") != std::string::npos);

  CHECK(run_cli({"ced-plot", "--ced", (dir / "ced.csv").string(), "--out",
                 (dir / "ced.svg").string()}) == 0);
  CHECK(slurp(dir / "ced.svg").find("<svg") != std::string::npos);
}

TEST_CASE("cli: infer with the head runner is seed-deterministic") {
  testing::TempDir dir("cli_head");
  namespace fs = std::filesystem;
  fs::create_directories(dir / "images");

  const ReferenceTemplate tmpl = ReferenceTemplate::standard();
  std::vector<DetectorOutput> dets;
  for (int i = 0; i < 2; ++i) {
    const std::string stem = "h" + std::to_string(i);
    write_ppm(testing::gradient_image(224, 224), dir / "images" / (stem + ".ppm"));
    DetectorOutput det;
    det.image = stem;
    for (const auto& p : tmpl.points.points)
      det.naive.points.push_back({p.x + 4.0 * i, p.y - 2.0 * i});
    det.bbox = {40.0, 60.0, 110.0, 120.0};
    dets.push_back(det);
  }
  write_detector_outputs(dets, dir / "dets.json");
  {
    std::ofstream cfg(dir / "config.json");
    cfg << R"({"num_landmarks": 5, "strategy": "SSSD", "channels": 32, "tta": false})";
  }
  const std::string config = (dir / "config.json").string();

  CHECK(run_cli({"--config", config, "align", "--images", (dir / "images").string(),
                 "--detections", (dir / "dets.json").string(), "--out",
                 (dir / "aligned").string()}) == 0);

  for (const char* out : {"p1", "p2"}) {
    CHECK(run_cli({"--config", config, "--seed", "11", "infer", "--manifest",
                   (dir / "aligned" / "manifest.json").string(), "--runner", "head",
                   "--out", (dir / out).string()}) == 0);
  }
  REQUIRE(fs::exists(dir / "p1" / "h0.json"));
  const Landmarks a = read_landmarks_json(dir / "p1" / "h0.json");
  const Landmarks b = read_landmarks_json(dir / "p2" / "h0.json");
  REQUIRE(a.size() == 5);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].x == b[i].x);
    CHECK(a[i].y == b[i].y);
  }
}

TEST_CASE("cli: unknown subcommand fails") {
  CHECK(run_cli({"frobnicate"}) != 0);
}

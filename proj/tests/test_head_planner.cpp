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
#include <doctest.h>

#include "lmkit/errors.hpp"
#include "lmkit/head_planner.hpp"
#include "lmkit/rng.hpp"
#include "test_support.hpp"

using namespace lmkit;

namespace {

// Reference per-strategy GFLOPS measurements the cost model is calibrated
// against (same order as kStrategies).
const std::vector<std::string> kStrategies = {"SSSS", "DSSS", "DDSS", "DSSD",
                                              "DSDS", "DDDS", "SSSD", "SDSD",
                                              "SSDD", "SDDD", "DDDD"};
const std::vector<double> kReferenceGflops = {0.56, 0.64, 0.96, 1.10, 1.73, 2.25,
                                              1.02, 1.29, 2.90, 3.36, 3.50};

Tensor random_input(const Shape3& shape, std::uint64_t seed) {
  Tensor t(shape.c, shape.h, shape.w);
  Rng rng(seed);
  for (auto& v : t.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return t;
}

} // namespace

TEST_CASE("parse_strategy: stage letters, case folding and rejection") {
  const StrategySpec dddd = parse_strategy("DDDD");
  REQUIRE(dddd.stages.size() == 4);
  for (const auto s : dddd.stages) CHECK(s == StageKind::Deconv);
  CHECK(dddd.text() == "DDDD");

  const StrategySpec sd = parse_strategy("sd");
  REQUIRE(sd.stages.size() == 2);
  CHECK(sd.stages[0] == StageKind::Shuffle);
  CHECK(sd.stages[1] == StageKind::Deconv);
  CHECK(sd.text() == "SD");

  CHECK_THROWS_AS(parse_strategy("SXD"), InvalidStrategy);
  CHECK_THROWS_AS(parse_strategy(""), InvalidStrategy);
  CHECK_THROWS_AS(parse_strategy("SSSSSSS"), InvalidStrategy);
}

TEST_CASE("build_head: DDDD from the default backbone yields 106x96x96") {
  const HeadGraph g = build_head(parse_strategy("DDDD"), 106);
  CHECK(g.output_shape == Shape3{106, 96, 96});
}

TEST_CASE("build_head: three stages quadruple-to-48 from a 6x6 map") {
  const HeadGraph g = build_head(parse_strategy("SSD"), 106);
  CHECK(g.output_shape.h == 48);
  CHECK(g.output_shape.w == 48);
  CHECK(g.output_shape.c == 106);
}

TEST_CASE("build_head: S-ending strategies emit heatmaps straight out of the shuffle") {
  const HeadGraph g = build_head(parse_strategy("DS"), 106);
  CHECK(g.output_shape == Shape3{106, 24, 24});
  CHECK(g.layers.back().kind == LayerKind::PixelShuffle);
}

TEST_CASE("build_head: executed output shape matches the plan for every strategy") {
  // Small backbone keeps the exhaustive check fast.
  for (const std::string text : {"S", "D", "SS", "SD", "DS", "DD", "SDS", "DSD", "SSDD"}) {
    StrategySpec spec = parse_strategy(text, 16, {8, 4, 4});
    const HeadGraph g = build_head(spec, 3);
    const HeadWeights w = make_random_weights(g, 7);
    const Tensor out = run_head(g, w, random_input(g.input_shape, 1));
    CHECK(Shape3{out.c, out.h, out.w} == g.output_shape);
    // S and D stages are interchangeable in shape: always 2x per stage
    CHECK(g.output_shape.h == 4 * (1 << text.size()));
    CHECK(g.output_shape.w == 4 * (1 << text.size()));
    CHECK(g.output_shape.c == 3);
  }
}

TEST_CASE("estimate_cost: zero-stage head is a bare 1x1 conv") {
  StrategySpec spec;
  spec.stages = {};
  spec.channels = 256;
  spec.backbone_out = {320, 6, 6};
  const CostModelConfig cfg;
  const CostReport report = estimate_cost(build_head(spec, 106, cfg), cfg);
  CHECK(report.total_macs == 320ULL * 106 * 36);
  CHECK(report.total_flops == doctest::Approx(1.0 * 320 * 106 * 36));
}

TEST_CASE("estimate_cost: SSSS is cheaper than DDDD") {
  const CostModelConfig cfg;
  const auto ssss = estimate_cost(build_head(parse_strategy("SSSS"), 106, cfg), cfg);
  const auto dddd = estimate_cost(build_head(parse_strategy("DDDD"), 106, cfg), cfg);
  CHECK(ssss.total_flops < dddd.total_flops);
}

TEST_CASE("estimate_cost: counting-convention knobs") {
  CostModelConfig base;
  const HeadGraph g = build_head(parse_strategy("SD", 16, {8, 4, 4}), 3, base);
  const CostReport plain = estimate_cost(g, base);

  CostModelConfig doubled = base;
  doubled.macs_per_flop = 2;
  const CostReport twice = estimate_cost(g, doubled);
  CHECK(twice.total_flops == doctest::Approx(2.0 * plain.total_flops));
  CHECK(twice.total_macs == plain.total_macs); // MACs are convention-free

  CostModelConfig with_elementwise = base;
  with_elementwise.count_elementwise = true;
  const CostReport ew = estimate_cost(g, with_elementwise);
  std::uint64_t elementwise = 0;
  for (const auto& layer : g.layers) elementwise += layer.elementwise_ops();
  CHECK(ew.total_flops ==
        doctest::Approx(plain.total_flops + static_cast<double>(elementwise)));

  CostModelConfig with_backbone = base;
  with_backbone.backbone_flops = 1.5e6;
  const CostReport bb = estimate_cost(g, with_backbone);
  CHECK(bb.total_flops == doctest::Approx(plain.total_flops + 1.5e6));
  CHECK(bb.total_params == plain.total_params);
}

TEST_CASE("estimate_cost: totals equal stage sums, parameter MB is exact") {
  const CostModelConfig cfg;
  const CostReport r = estimate_cost(build_head(parse_strategy("SDSD"), 106, cfg), cfg);
  std::uint64_t macs = 0, params = 0;
  for (const auto& s : r.stages) {
    macs += s.macs;
    params += s.params;
  }
  CHECK(macs == r.total_macs);
  CHECK(params == r.total_params);
  CHECK(r.param_mb == 4.0 * static_cast<double>(r.total_params) / 1e6);
}

TEST_CASE("analytic MACs equal instrumented execution counts for all strategies to length 5") {
  // Exhaustive over the 62 strategies on a small backbone; the acceptance
  // suite runs the full-size configurations.
  CostModelConfig cfg;
  std::vector<std::string> all = {"S", "D"};
  std::vector<std::string> prev = all;
  for (int len = 2; len <= 5; ++len) {
    std::vector<std::string> next;
    for (const auto& t : prev) {
      next.push_back(t + "S");
      next.push_back(t + "D");
    }
    all.insert(all.end(), next.begin(), next.end());
    prev = std::move(next);
  }
  REQUIRE(all.size() == 62);
  for (const std::string& text : all) {
    StrategySpec spec = parse_strategy(text, 16, {8, 4, 4});
    const HeadGraph g = build_head(spec, 3, cfg);
    const CostReport report = estimate_cost(g, cfg);
    const HeadWeights w = make_random_weights(g, 11);
    OpCounter counter;
    run_head(g, w, random_input(g.input_shape, 2), &counter);
    CHECK(counter.macs == report.total_macs);

    std::uint64_t elementwise = 0;
    for (const auto& layer : g.layers) elementwise += layer.elementwise_ops();
    CHECK(counter.elementwise == elementwise);
  }
}

TEST_CASE("appending a stage never decreases total FLOPs (default config)") {
  const CostModelConfig cfg;
  std::vector<std::string> frontier = {"S", "D"};
  for (int len = 1; len < 5; ++len) {
    std::vector<std::string> next;
    for (const auto& text : frontier) {
      const auto base = estimate_cost(build_head(parse_strategy(text), 106, cfg), cfg);
      for (const char add : {'S', 'D'}) {
        const std::string longer = text + add;
        const auto grown = estimate_cost(build_head(parse_strategy(longer), 106, cfg), cfg);
        CHECK(grown.total_flops >= base.total_flops);
        next.push_back(longer);
      }
    }
    frontier = std::move(next);
  }
}

TEST_CASE("rank_strategies: cheapest first, ties by parameter size") {
  const CostModelConfig cfg;
  const auto two = rank_strategies({parse_strategy("DDDD"), parse_strategy("SSSS")}, cfg);
  REQUIRE(two.size() == 2);
  CHECK(two[0].strategy == "SSSS");
  CHECK(two[1].strategy == "DDDD");

  const auto one = rank_strategies({parse_strategy("SDSD")}, cfg);
  REQUIRE(one.size() == 1);
  CHECK(one[0].strategy == "SDSD");
}

TEST_CASE("rank_strategies: Kendall tau vs the reference GFLOPS column") {
  const CostModelConfig cfg; // calibrated default convention
  std::vector<double> model;
  for (const auto& name : kStrategies)
    model.push_back(
        estimate_cost(build_head(parse_strategy(name), 106, cfg), cfg).total_flops);

  const double tau = testing::kendall_tau(model, kReferenceGflops);
  CHECK(tau >= 0.8);

  // extremes: SSSS cheapest, DDDD most expensive
  const auto ranked = [&] {
    std::vector<StrategySpec> specs;
    for (const auto& name : kStrategies) specs.push_back(parse_strategy(name));
    return rank_strategies(specs, cfg);
  }();
  CHECK(ranked.front().strategy == "SSSS");
  CHECK(ranked.back().strategy == "DDDD");
}

TEST_CASE("run_head: zero weights give all-zero heatmaps") {
  const HeadGraph g = build_head(parse_strategy("SD", 16, {8, 4, 4}), 3);
  const HeadWeights w = make_zero_weights(g);
  const Tensor out = run_head(g, w, random_input(g.input_shape, 3));
  for (const float v : out.data) CHECK(v == 0.0f);
}

TEST_CASE("run_head: repeated runs are bit-identical") {
  const HeadGraph g = build_head(parse_strategy("SDSD", 16, {8, 4, 4}), 3);
  const HeadWeights w = make_random_weights(g, 42);
  const Tensor input = random_input(g.input_shape, 4);
  const Tensor a = run_head(g, w, input);
  const Tensor b = run_head(g, w, input);
  CHECK(a == b);

  const HeadWeights w2 = make_random_weights(g, 42);
  const Tensor c = run_head(g, w2, input);
  CHECK(a == c); // same seed, same weights
}

TEST_CASE("run_head: rejects a mismatched input shape") {
  const HeadGraph g = build_head(parse_strategy("D", 16, {8, 4, 4}), 3);
  const HeadWeights w = make_random_weights(g, 1);
  Tensor wrong(4, 4, 4);
  CHECK_THROWS_AS(run_head(g, w, wrong), ShapeMismatch);
}

TEST_CASE("weights survive a save/load roundtrip") {
  testing::TempDir dir("weights");
  const HeadGraph g = build_head(parse_strategy("SD", 16, {8, 4, 4}), 3);
  const HeadWeights w = make_random_weights(g, 9);
  save_weights(w, dir.path());
  const HeadWeights back = load_weights(g, dir.path());

  const Tensor input = random_input(g.input_shape, 5);
  CHECK(run_head(g, w, input) == run_head(g, back, input));
}

TEST_CASE("build_head: rejects kernels that cannot double or preserve size") {
  CostModelConfig bad_deconv;
  bad_deconv.deconv_kernel = 3; // odd: (H-1)*2 - 2p + 3 cannot equal 2H
  CHECK_THROWS_AS(build_head(parse_strategy("D"), 106, bad_deconv), ShapeMismatch);

  CostModelConfig bad_shuffle;
  bad_shuffle.shuffle_conv_kernel = 2; // even: cannot preserve spatial size
  CHECK_THROWS_AS(build_head(parse_strategy("S"), 106, bad_shuffle), ShapeMismatch);
}

#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "specseg/fft.hpp"
#include "specseg/trainer.hpp"

using namespace specseg;

namespace {

std::vector<SceneSample> scenes(const SceneConfig& cfg, std::uint64_t first, std::size_t n) {
  std::vector<SceneSample> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(generate_scene(cfg, first + i));
  return out;
}

SceneConfig small_scenes() {
  SceneConfig cfg;
  cfg.height = 32;
  cfg.width = 32;
  return cfg;
}

}  // namespace

TEST_CASE("train config validation") {
  TrainConfig cfg;
  CHECK(cfg.batch_size == 8);
  CHECK(cfg.learning_rate == 0.01);
  CHECK(cfg.momentum == 0.9);
  CHECK(cfg.weight_decay == 1e-4);
  CHECK(cfg.loss.lambda == 0.2);
  cfg.learning_rate = 0.0;
  CHECK_THROWS((void)cfg.validate());
}

TEST_CASE("augmentation keeps image and mask aligned") {
  const auto s = generate_scene(small_scenes(), 3);
  for (unsigned code = 0; code < 8; ++code) {
    const auto a = augment_sample(s, code);
    CHECK(a.mask.count(1) == s.mask.count(1));
    CHECK(a.mask.count(2) == s.mask.count(2));
    // pixels that move together: find where the top-left pixel landed
    double img_sum = reduce_sum(a.image);
    CHECK(img_sum == doctest::Approx(reduce_sum(s.image)).epsilon(1e-6));
  }
  const auto flipped = augment_sample(s, 1);
  CHECK(flipped.image(0, 0) == s.image(0, 31));
  CHECK(flipped.mask(5, 0) == s.mask(5, 31));
  const auto t = augment_sample(s, 4);
  CHECK(t.image(2, 7) == s.image(7, 2));
  CHECK(t.mask(2, 7) == s.mask(7, 2));
}

TEST_CASE("duplicated sample gives the same mean gradient") {
  const auto data = scenes(small_scenes(), 0, 2);
  NetSpec spec;
  spec.widths = {4, 6, 8};
  const auto p = init_params<float>(spec, 1);
  const FftPlan plan(32, 32);
  const LossConfig loss;
  const std::vector<SceneSample> one{data[0]};
  const std::vector<SceneSample> two{data[0], data[0]};
  const auto g1 = batch_gradient(p, one, loss, plan);
  const auto g2 = batch_gradient(p, two, loss, plan);
  REQUIRE(g1.grads.size() == g2.grads.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < g1.grads.size(); ++i) {
    worst = std::max(worst, std::abs(static_cast<double>(g1.grads[i]) - g2.grads[i]));
  }
  CHECK(worst < 1e-9);
  CHECK(g1.total == doctest::Approx(g2.total).epsilon(1e-12));
}

TEST_CASE("sgd step arithmetic") {
  NetSpec spec;
  spec.widths = {2, 2, 2};
  auto p = init_params<float>(spec, 1);
  const auto w0 = p.values[0];
  std::vector<float> g(p.values.size(), 0.5F);
  TrainConfig cfg;
  sgd_step(p, g, cfg);
  CHECK(p.momentum[0] == 0.5F);
  const double expect = w0 - 0.01 * 0.5 - 0.01 * 1e-4 * w0;
  CHECK(p.values[0] == doctest::Approx(expect).epsilon(1e-6));
  const auto w1 = p.values[0];
  sgd_step(p, g, cfg);
  CHECK(p.momentum[0] == doctest::Approx(0.9 * 0.5 + 0.5));
  CHECK(p.values[0] == doctest::Approx(w1 - 0.01 * 0.95 - 0.01 * 1e-4 * w1).epsilon(1e-6));
}

TEST_CASE("lambda zero runs no transforms and shares initialization") {
  const auto data = scenes(small_scenes(), 0, 8);
  const auto val = scenes(small_scenes(), 500, 2);
  NetSpec spec;
  spec.widths = {4, 6, 8};
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.loss.lambda = 0.0;
  const auto before = fft_invocation_count();
  const auto r0 = train(data, val, spec, cfg);
  CHECK(fft_invocation_count() == before);

  // both runs start from the same parameters; only the first backward step separates them
  const auto init = init_params<float>(spec, cfg.seed);
  const FftPlan plan(32, 32);
  LossConfig l0;
  l0.lambda = 0.0;
  LossConfig l2;
  const auto f0 = forward(init, data[0].image);
  const auto g0 = batch_gradient(init, std::span(data).first(1), l0, plan);
  const auto g2 = batch_gradient(init, std::span(data).first(1), l2, plan);
  CHECK(g0.spatial == g2.spatial);
  CHECK(g0.grads != g2.grads);
  (void)f0;
  (void)r0;
}

TEST_CASE("training is reproducible and logs every epoch") {
  const auto data = scenes(small_scenes(), 0, 16);
  const auto val = scenes(small_scenes(), 500, 4);
  NetSpec spec;
  spec.widths = {4, 6, 8};
  TrainConfig cfg;
  cfg.epochs = 3;
  std::vector<int> seen;
  const auto a = train(data, val, spec, cfg, [&](const EpochLog& e) { seen.push_back(e.epoch); });
  const auto b = train(data, val, spec, cfg);
  CHECK(a.params.values == b.params.values);
  REQUIRE(a.log.size() == 3);
  CHECK(seen == std::vector<int>{1, 2, 3});
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].epoch == static_cast<int>(i) + 1);
    CHECK(a.log[i].total_loss == doctest::Approx(a.log[i].spatial_loss + 0.2 * a.log[i].spectral_loss));
  }
  CHECK(a.best_val_dsc == a.log[static_cast<std::size_t>(a.best_epoch - 1)].val_dsc);

  cfg.loss.lambda = 0.0;
  const auto c = train(data, val, spec, cfg);
  CHECK(std::isnan(c.log[0].spectral_loss));
}

TEST_CASE("training rejects empty or non-finite input") {
  NetSpec spec;
  spec.widths = {4, 6, 8};
  TrainConfig cfg;
  cfg.epochs = 1;
  const std::vector<SceneSample> none;
  auto data = scenes(small_scenes(), 0, 2);
  CHECK_THROWS((void)train(none, data, spec, cfg));
  data[1].image[3] = std::numeric_limits<float>::quiet_NaN();
  cfg.batch_size = 1;
  cfg.augment = false;
  try {
    (void)train(data, data, spec, cfg);
    FAIL("expected a numerical error");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("batch") != std::string::npos);
  }
}

TEST_CASE("evaluation of oracle and empty predictions") {
  const auto data = scenes(SceneConfig{}, 0, 10);
  const FftPlan plan(64, 64);
  std::vector<Channels> perfect;
  std::vector<Channels> background;
  std::vector<LabelMask> truths;
  for (const auto& s : data) {
    perfect.push_back(one_hot_channels(s.mask));
    Channels bg(3, Grid(64, 64));
    for (auto& v : bg[0].values()) v = 1.0F;
    background.push_back(bg);
    truths.push_back(s.mask);
  }
  const auto good = evaluate_predictions(perfect, truths, plan);
  CHECK(good.mean_dsc == 1.0);
  CHECK(good.mean_hd95 == 0.0);
  CHECK(good.ece == 0.0);
  for (const auto& m : good.mean_per_class) CHECK(m.dsc == 1.0);

  const auto bad = evaluate_predictions(background, truths, plan);
  CHECK(bad.mean_dsc == 0.0);
  CHECK(bad.mean_hd95 == doctest::Approx(std::sqrt(2.0 * 64 * 64)));

  // independent recomputation on noisy predictions
  SplitMix64 rng(41);
  std::vector<Channels> probs;
  for (std::size_t i = 0; i < data.size(); ++i) probs.push_back(oracle::random_probs(rng, 64, 64, 3, 2.0));
  const auto t = evaluate_predictions(probs, truths, plan);
  double dsum = 0.0;
  double hsum = 0.0;
  double esum = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto pred = argmax(probs[i]);
    for (int c = 1; c < 3; ++c) {
      const auto o = oracle::set_metrics(pred, truths[i], c);
      CHECK(t.samples[i].classes[static_cast<std::size_t>(c - 1)].dsc == o.dsc);
      CHECK(t.samples[i].classes[static_cast<std::size_t>(c - 1)].iou == o.iou);
      dsum += o.dsc;
      hsum += oracle::brute_hd95(pred, truths[i], c);
    }
    esum += oracle::calibration_errors(probs[i], truths[i], 10).first;
  }
  CHECK(t.mean_dsc == doctest::Approx(dsum / 20.0).epsilon(1e-12));
  CHECK(t.mean_hd95 == doctest::Approx(hsum / 20.0).epsilon(1e-12));
  CHECK(t.ece == doctest::Approx(esum / 10.0).epsilon(1e-9));
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "insdvl/nn/model.hpp"
#include "insdvl/random.hpp"

using namespace insdvl;

namespace {

WindowSample random_window(Rng& rng, int window_len, float span = 2.0f) {
  std::uniform_real_distribution<float> u(-span, span);
  std::uniform_real_distribution<float> ul(-5.0f, 5.0f);
  WindowSample w;
  w.dvl.resize(static_cast<std::size_t>(window_len) * 3);
  w.ins.resize(static_cast<std::size_t>(window_len) * 3);
  for (float& v : w.dvl) v = u(rng);
  for (float& v : w.ins) v = u(rng);
  w.label_deg = Eigen::Vector3f(ul(rng), ul(rng), ul(rng));
  return w;
}

const ParamSegment& segment(const ModelParams& p, const std::string& name) {
  return p.layout[p.index.at(name)];
}

}  // namespace

TEST_CASE("conv1d matches hand-worked values") {
  BatchTensor x = BatchTensor::zeros(1, 1, 3);
  x.at(0, 0, 0) = 1.0;
  x.at(0, 0, 1) = 2.0;
  x.at(0, 0, 2) = 3.0;
  const std::vector<double> w = {1.0, 0.0, -1.0};
  const std::vector<double> b = {0.5};

  SUBCASE("valid convolution, single tap") {
    ConvWeights cw{w.data(), b.data(), 1, 1, 3, 1, 0};
    BatchTensor y = conv1d_forward(x, cw);
    REQUIRE(y.n == 1);
    REQUIRE(y.c == 1);
    REQUIRE(y.l == 1);
    CHECK(y.at(0, 0, 0) == doctest::Approx(0.5 + (1.0 - 3.0)).epsilon(1e-15));
  }

  SUBCASE("same padding slides zeros in at both ends") {
    ConvWeights cw{w.data(), b.data(), 1, 1, 3, 1, 1};
    BatchTensor y = conv1d_forward(x, cw);
    REQUIRE(y.l == 3);
    CHECK(y.at(0, 0, 0) == doctest::Approx(0.5 - 2.0).epsilon(1e-15));
    CHECK(y.at(0, 0, 1) == doctest::Approx(0.5 + 1.0 - 3.0).epsilon(1e-15));
    CHECK(y.at(0, 0, 2) == doctest::Approx(0.5 + 2.0).epsilon(1e-15));
  }
}

TEST_CASE("kernel-1 strided conv subsamples and kernel-1 identity passes through") {
  BatchTensor x = BatchTensor::zeros(1, 1, 5);
  for (std::size_t t = 0; t < 5; ++t) x.at(0, 0, t) = static_cast<double>(t + 1);

  const std::vector<double> w1 = {1.0};
  const std::vector<double> b0 = {0.0};
  ConvWeights pick{w1.data(), b0.data(), 1, 1, 1, 2, 0};
  BatchTensor y = conv1d_forward(x, pick);
  REQUIRE(y.l == 3);
  CHECK(y.at(0, 0, 0) == 1.0);
  CHECK(y.at(0, 0, 1) == 3.0);
  CHECK(y.at(0, 0, 2) == 5.0);

  // Two-channel identity: w[oc][ic][0] = delta(oc, ic).
  BatchTensor x2 = BatchTensor::zeros(2, 2, 4);
  Rng rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& v : x2.v) v = u(rng);
  const std::vector<double> wid = {1.0, 0.0, 0.0, 1.0};
  const std::vector<double> b2 = {0.0, 0.0};
  ConvWeights id{wid.data(), b2.data(), 2, 2, 1, 1, 0};
  BatchTensor y2 = conv1d_forward(x2, id);
  REQUIRE(y2.v.size() == x2.v.size());
  for (std::size_t i = 0; i < x2.v.size(); ++i) CHECK(y2.v[i] == x2.v[i]);
}

TEST_CASE("downsampling chain halves the time axis like the published layout") {
  // 125 -> 63 (stem, k7 s2 p3) -> 32 -> 16 -> 8 (stage entries, k3 s2 p1).
  auto out_len = [](std::size_t l, int k, int s, int p) {
    std::vector<double> w(static_cast<std::size_t>(k), 0.0);
    std::vector<double> b(1, 0.0);
    BatchTensor x = BatchTensor::zeros(1, 1, l);
    ConvWeights cw{w.data(), b.data(), 1, 1, k, s, p};
    return conv1d_forward(x, cw).l;
  };
  std::size_t l = out_len(125, 7, 2, 3);
  CHECK(l == 63);
  l = out_len(l, 3, 2, 1);
  CHECK(l == 32);
  l = out_len(l, 3, 2, 1);
  CHECK(l == 16);
  l = out_len(l, 3, 2, 1);
  CHECK(l == 8);
}

TEST_CASE("residual block with a zero branch reduces to relu of the input") {
  const int c = 3, k = 3;
  Rng rng(21);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  BatchTensor x = BatchTensor::zeros(2, c, 7);
  for (double& v : x.v) v = u(rng);

  const std::vector<double> wz(static_cast<std::size_t>(c) * c * k, 0.0);
  const std::vector<double> bz(c, 0.0);
  const std::vector<double> ones(c, 1.0);
  const std::vector<double> zeros(c, 0.0);
  ConvWeights conv{wz.data(), bz.data(), c, c, k, 1, 1};
  BnWeights bn{ones.data(), zeros.data(), zeros.data(), ones.data(), c};

  BatchTensor y = residual_block_eval(x, conv, bn, conv, bn, nullptr, nullptr);
  REQUIRE(y.v.size() == x.v.size());
  for (std::size_t i = 0; i < x.v.size(); ++i)
    CHECK(y.v[i] == doctest::Approx(std::max(x.v[i], 0.0)).epsilon(1e-15));
}

TEST_CASE("projected residual block reshapes to the branch geometry") {
  const int ci = 4, co = 6, k = 3;
  BatchTensor x = BatchTensor::zeros(1, ci, 10);
  for (std::size_t i = 0; i < x.v.size(); ++i) x.v[i] = 0.1 * static_cast<double>(i);

  const std::vector<double> w1(static_cast<std::size_t>(co) * ci * k, 0.0);
  const std::vector<double> w2(static_cast<std::size_t>(co) * co * k, 0.0);
  const std::vector<double> wp(static_cast<std::size_t>(co) * ci, 0.0);
  const std::vector<double> b(co, 0.0);
  const std::vector<double> ones(co, 1.0);
  const std::vector<double> zeros(co, 0.0);
  ConvWeights c1{w1.data(), b.data(), co, ci, k, 2, 1};
  ConvWeights c2{w2.data(), b.data(), co, co, k, 1, 1};
  ConvWeights pc{wp.data(), b.data(), co, ci, 1, 2, 0};
  BnWeights bn{ones.data(), zeros.data(), zeros.data(), ones.data(), co};

  BatchTensor y = residual_block_eval(x, c1, bn, c2, bn, &pc, &bn);
  CHECK(y.n == 1);
  CHECK(y.c == static_cast<std::size_t>(co));
  CHECK(y.l == 5);
  for (double v : y.v) CHECK(v == 0.0);
}

TEST_CASE("all-zero parameters forecast exactly zero") {
  ModelParams p = build_params(ModelConfig::tiny());
  Rng rng(31);
  const WindowSample w = random_window(rng, p.config.window_len);
  const Eigen::Vector3d out = forward_deg(p, w);
  CHECK(out.x() == 0.0);
  CHECK(out.y() == 0.0);
  CHECK(out.z() == 0.0);
  const EulerAngles e = predict(p, w);
  CHECK(e.roll == 0.0);
  CHECK(e.pitch == 0.0);
  CHECK(e.yaw == 0.0);
}

TEST_CASE("head bias is the only gradient path through a zero network") {
  // With every other parameter zero, pooled activations vanish and the
  // output equals head.b, so the loss and its gradient are exact by hand.
  ModelParams p = build_params(ModelConfig::tiny());
  double* hb = p.seg_data("head.b");
  hb[0] = 1.0;
  hb[1] = -2.0;
  hb[2] = 0.5;

  Rng rng(41);
  WindowSample w = random_window(rng, p.config.window_len);
  w.label_deg = Eigen::Vector3f::Zero();

  const Eigen::Vector3d out = forward_deg(p, w);
  CHECK(out.x() == 1.0);
  CHECK(out.y() == -2.0);
  CHECK(out.z() == 0.5);

  std::vector<double> grads;
  const std::vector<const WindowSample*> batch = {&w};
  const double loss = loss_and_gradients(p, batch, grads, false);
  CHECK(loss == 5.25);

  const ParamSegment& hbs = segment(p, "head.b");
  CHECK(grads[hbs.offset + 0] == 2.0);
  CHECK(grads[hbs.offset + 1] == -4.0);
  CHECK(grads[hbs.offset + 2] == 1.0);
  for (const ParamSegment& seg : p.layout) {
    if (seg.name == "head.b") continue;
    for (std::size_t i = 0; i < seg.size; ++i)
      CHECK(grads[seg.offset + i] == 0.0);
  }
}

TEST_CASE("zero labels and a zero network give zero loss and zero gradients") {
  ModelParams p = build_params(ModelConfig::tiny());
  Rng rng(51);
  WindowSample w = random_window(rng, p.config.window_len);
  w.label_deg = Eigen::Vector3f::Zero();
  std::vector<double> grads;
  const std::vector<const WindowSample*> batch = {&w};
  CHECK(loss_and_gradients(p, batch, grads, false) == 0.0);
  for (double g : grads) CHECK(g == 0.0);
}

TEST_CASE("batched forward agrees with the single-window forward") {
  Rng init_rng(61);
  const ModelParams p = init_params(ModelConfig::tiny(), init_rng);
  Rng rng(62);
  std::vector<WindowSample> ws;
  for (int i = 0; i < 5; ++i) ws.push_back(random_window(rng, p.config.window_len));
  std::vector<const WindowSample*> batch;
  for (const WindowSample& w : ws) batch.push_back(&w);

  const std::vector<Eigen::Vector3d> outs = forward_deg_batch(p, batch);
  REQUIRE(outs.size() == ws.size());
  for (std::size_t i = 0; i < ws.size(); ++i) {
    const Eigen::Vector3d single = forward_deg(p, ws[i]);
    CHECK((outs[i] - single).norm() < 1e-12);
  }
}

TEST_CASE("inference is deterministic") {
  Rng init_rng(71);
  const ModelParams p = init_params(ModelConfig::tiny(), init_rng);
  Rng rng(72);
  const WindowSample w = random_window(rng, p.config.window_len);
  const Eigen::Vector3d a = forward_deg(p, w);
  const Eigen::Vector3d b = forward_deg(p, w);
  CHECK(a.x() == b.x());
  CHECK(a.y() == b.y());
  CHECK(a.z() == b.z());
}

TEST_CASE("fresh initialization is seeded, shaped and scaled as documented") {
  Rng r1(81), r2(81), r3(82);
  const ModelParams a = init_params(ModelConfig::tiny(), r1);
  const ModelParams b = init_params(ModelConfig::tiny(), r2);
  const ModelParams c = init_params(ModelConfig::tiny(), r3);
  REQUIRE(a.values.size() == b.values.size());
  CHECK(a.values == b.values);
  CHECK(a.values != c.values);

  // Gamma and running variance start at one, biases and running means at zero.
  const ParamSegment& g = segment(a, "stem.bn.g");
  const ParamSegment& rv = segment(a, "stem.bn.rv");
  const ParamSegment& beta = segment(a, "stem.bn.beta");
  const ParamSegment& rm = segment(a, "stem.bn.rm");
  CHECK_FALSE(rm.trainable);
  CHECK_FALSE(rv.trainable);
  for (std::size_t i = 0; i < g.size; ++i) {
    CHECK(a.values[g.offset + i] == 1.0);
    CHECK(a.values[rv.offset + i] == 1.0);
    CHECK(a.values[beta.offset + i] == 0.0);
    CHECK(a.values[rm.offset + i] == 0.0);
  }

  // Kaiming fan-in scale on the stem kernel: std = sqrt(2 / (c_in * k)).
  const ParamSegment& sw = segment(a, "stem.conv.w");
  REQUIRE(sw.size == 4u * 6u * 7u);
  double ss = 0.0;
  for (std::size_t i = 0; i < sw.size; ++i) {
    const double v = a.values[sw.offset + i];
    ss += v * v;
  }
  const double sd = std::sqrt(ss / static_cast<double>(sw.size));
  const double want = std::sqrt(2.0 / (6.0 * 7.0));
  CHECK(sd == doctest::Approx(want).epsilon(0.3));
}

TEST_CASE("untrained forecasts stay small on data-scale inputs") {
  Rng init_rng(91);
  const ModelParams p = init_params(ModelConfig::desk(), init_rng);
  Rng rng(92);
  const WindowSample w = random_window(rng, p.config.window_len);
  const Eigen::Vector3d out = forward_deg(p, w);
  CHECK(std::isfinite(out.norm()));
  CHECK(out.norm() < 30.0);
}

TEST_CASE("analytic gradients match central differences on every trainable weight") {
  const ModelConfig cfg = ModelConfig::tiny();
  Rng init_rng(101);
  ModelParams p = init_params(cfg, init_rng);

  Rng rng(102);
  std::vector<WindowSample> ws;
  for (int i = 0; i < 4; ++i) ws.push_back(random_window(rng, cfg.window_len));
  std::vector<const WindowSample*> batch;
  for (const WindowSample& w : ws) batch.push_back(&w);

  std::vector<double> grads;
  loss_and_gradients(p, batch, grads, false);
  REQUIRE(grads.size() == p.values.size());

  ModelParams probe = p;
  std::size_t checked = 0, worst_idx = 0;
  double worst = 0.0;
  for (const ParamSegment& seg : p.layout) {
    if (!seg.trainable) continue;
    for (std::size_t i = 0; i < seg.size; ++i) {
      const std::size_t idx = seg.offset + i;
      const double v0 = probe.values[idx];
      // Step below the nearest ReLU kink: batchnorm centers pre-activations
      // on zero, so steps of 1e-4 straddle a unit's sign change somewhere in
      // the net and average two branch slopes. 1e-5 stays on the branch while
      // cancellation noise (~eps * loss / h) is still two decades under tol.
      const double h = 1e-5 * std::max(1.0, std::abs(v0));
      probe.values[idx] = v0 + h;
      const double lp = compute_loss(probe, batch);
      probe.values[idx] = v0 - h;
      const double lm = compute_loss(probe, batch);
      probe.values[idx] = v0;
      const double fd = (lp - lm) / (2.0 * h);
      // Floor above the noise scale: conv biases feeding batchnorm have an
      // exactly zero gradient (the batch mean absorbs them), so fd there is
      // pure roundoff.
      const double denom = std::max({std::abs(fd), std::abs(grads[idx]), 1e-5});
      const double rel = std::abs(fd - grads[idx]) / denom;
      if (rel > worst) {
        worst = rel;
        worst_idx = idx;
      }
      ++checked;
    }
  }
  INFO("worst relative error ", worst, " at flat index ", worst_idx, " over ",
       checked, " parameters");
  CHECK(checked > 500);
  CHECK(worst < 1e-4);
}

TEST_CASE("training-mode batchnorm folds batch statistics into the running state") {
  const ModelConfig cfg = ModelConfig::tiny();
  Rng init_rng(111);
  ModelParams p = init_params(cfg, init_rng);

  Rng rng(112);
  std::vector<WindowSample> ws;
  for (int i = 0; i < 3; ++i) ws.push_back(random_window(rng, cfg.window_len));
  std::vector<const WindowSample*> batch;
  for (const WindowSample& w : ws) batch.push_back(&w);

  // Reproduce the stem convolution by hand to recover the batch statistics
  // the first batchnorm must have seen.
  BatchTensor x = BatchTensor::zeros(ws.size(), 6, static_cast<std::size_t>(cfg.window_len));
  for (std::size_t n = 0; n < ws.size(); ++n)
    for (std::size_t t = 0; t < static_cast<std::size_t>(cfg.window_len); ++t)
      for (std::size_t ax = 0; ax < 3; ++ax) {
        x.at(n, ax, t) = static_cast<double>(ws[n].dvl[t * 3 + ax]);
        x.at(n, 3 + ax, t) = static_cast<double>(ws[n].ins[t * 3 + ax]);
      }
  ConvWeights stem{p.seg_data("stem.conv.w"), p.seg_data("stem.conv.b"),
                   cfg.stem_filters, cfg.in_channels, cfg.stem_kernel,
                   cfg.stem_stride, cfg.stem_kernel / 2};
  const BatchTensor a = conv1d_forward(x, stem);

  std::vector<double> grads;
  loss_and_gradients(p, batch, grads, true);

  const double* rm = p.seg_data("stem.bn.rm");
  const double* rv = p.seg_data("stem.bn.rv");
  const std::size_t cnt = a.n * a.l;
  for (std::size_t ch = 0; ch < a.c; ++ch) {
    double mean = 0.0;
    for (std::size_t n = 0; n < a.n; ++n)
      for (std::size_t t = 0; t < a.l; ++t) mean += a.at(n, ch, t);
    mean /= static_cast<double>(cnt);
    double var = 0.0;
    for (std::size_t n = 0; n < a.n; ++n)
      for (std::size_t t = 0; t < a.l; ++t) {
        const double d = a.at(n, ch, t) - mean;
        var += d * d;
      }
    var /= static_cast<double>(cnt);
    // One momentum-0.1 update from rm = 0, rv = 1.
    CHECK(rm[ch] == doctest::Approx(0.1 * mean).epsilon(1e-9));
    CHECK(rv[ch] == doctest::Approx(0.9 + 0.1 * var).epsilon(1e-9));
  }
}

TEST_CASE("running statistics stay frozen when updates are disabled") {
  const ModelConfig cfg = ModelConfig::tiny();
  Rng init_rng(121);
  ModelParams p = init_params(cfg, init_rng);
  const std::vector<double> before = p.values;

  Rng rng(122);
  WindowSample w = random_window(rng, cfg.window_len);
  std::vector<double> grads;
  const std::vector<const WindowSample*> batch = {&w};
  loss_and_gradients(p, batch, grads, false);
  CHECK(p.values == before);

  const double l1 = compute_loss(p, batch);
  CHECK(p.values == before);
  CHECK(std::isfinite(l1));
}

TEST_CASE("batch normalization makes the loss insensitive to input scale") {
  // With the stem bias zeroed the stem output is linear in the input, and the
  // per-channel standardization cancels a common gain up to the epsilon term.
  const ModelConfig cfg = ModelConfig::tiny();
  Rng init_rng(131);
  ModelParams p = init_params(cfg, init_rng);
  const ParamSegment& sb = segment(p, "stem.conv.b");
  for (std::size_t i = 0; i < sb.size; ++i) p.values[sb.offset + i] = 0.0;

  Rng rng(132);
  std::vector<WindowSample> ws;
  for (int i = 0; i < 3; ++i) ws.push_back(random_window(rng, cfg.window_len));
  std::vector<WindowSample> scaled = ws;
  for (WindowSample& w : scaled) {
    for (float& v : w.dvl) v *= 10.0f;
    for (float& v : w.ins) v *= 10.0f;
  }
  std::vector<const WindowSample*> b1, b2;
  for (const WindowSample& w : ws) b1.push_back(&w);
  for (const WindowSample& w : scaled) b2.push_back(&w);

  const double l1 = compute_loss(p, b1);
  const double l2 = compute_loss(p, b2);
  CHECK(l2 == doctest::Approx(l1).epsilon(1e-3));
}

TEST_CASE("split evaluation is independent of the batch size") {
  const ModelConfig cfg = ModelConfig::tiny();
  Rng init_rng(141);
  const ModelParams p = init_params(cfg, init_rng);

  Rng rng(142);
  WindowDataset ds;
  ds.window_len = static_cast<std::uint32_t>(cfg.window_len);
  for (int i = 0; i < 10; ++i) ds.samples.push_back(random_window(rng, cfg.window_len));

  const double l4 = eval_loss(p, ds, 4);
  const double l32 = eval_loss(p, ds, 32);
  CHECK(l4 == doctest::Approx(l32).epsilon(1e-12));
}

TEST_CASE("model configuration survives a json roundtrip") {
  for (const ModelConfig& cfg : {ModelConfig::tiny(), ModelConfig::desk(), ModelConfig::paper()}) {
    const ModelConfig back = ModelConfig::from_json(cfg.to_json());
    CHECK(back.in_channels == cfg.in_channels);
    CHECK(back.stem_filters == cfg.stem_filters);
    CHECK(back.stem_kernel == cfg.stem_kernel);
    CHECK(back.stem_stride == cfg.stem_stride);
    CHECK(back.stage_channels == cfg.stage_channels);
    CHECK(back.blocks_per_stage == cfg.blocks_per_stage);
    CHECK(back.block_kernel == cfg.block_kernel);
    CHECK(back.window_len == cfg.window_len);
    CHECK(back.standardize == cfg.standardize);
  }
}

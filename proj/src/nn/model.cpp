#include "insdvl/nn/model.hpp"

#include <cmath>
#include <random>

#include "insdvl/errors.hpp"

namespace insdvl {

namespace {

enum class SegKind { kWeight, kZero, kOne };

struct SegInfo {
  std::string name;
  std::size_t size = 0;
  bool trainable = false;
  SegKind kind = SegKind::kZero;
  std::size_t fan_in = 0;
};

struct BlockSpec {
  std::string prefix;
  int c_in = 0, c_out = 0, stride = 1, kernel = 3;
  bool has_proj = false;
};

void validate(const ModelConfig& cfg) {
  const bool stages_ok =
      !cfg.stage_channels.empty() &&
      cfg.stage_channels.size() == cfg.blocks_per_stage.size();
  bool positive = cfg.in_channels > 0 && cfg.stem_filters > 0 &&
                  cfg.stem_kernel > 0 && cfg.stem_stride > 0 &&
                  cfg.block_kernel > 0 && cfg.window_len > 0;
  if (stages_ok) {
    for (int c : cfg.stage_channels) positive = positive && c > 0;
    for (int b : cfg.blocks_per_stage) positive = positive && b > 0;
  }
  if (!stages_ok || !positive) {
    throw ShapeMismatch("model config has empty or non-positive dimensions");
  }
}

std::vector<BlockSpec> enumerate_blocks(const ModelConfig& cfg) {
  std::vector<BlockSpec> out;
  int c_in = cfg.stem_filters;
  for (std::size_t si = 0; si < cfg.stage_channels.size(); ++si) {
    const int c = cfg.stage_channels[si];
    for (int bi = 0; bi < cfg.blocks_per_stage[si]; ++bi) {
      BlockSpec bs;
      bs.prefix = "s" + std::to_string(si) + ".b" + std::to_string(bi);
      bs.c_in = c_in;
      bs.c_out = c;
      bs.stride = (bi == 0 && si > 0) ? 2 : 1;
      bs.kernel = cfg.block_kernel;
      bs.has_proj = bs.stride != 1 || bs.c_in != bs.c_out;
      out.push_back(bs);
      c_in = c;
    }
  }
  return out;
}

void add_conv(std::vector<SegInfo>& v, const std::string& p, int co, int ci,
              int k) {
  const std::size_t n = static_cast<std::size_t>(co) * ci * k;
  v.push_back({p + ".w", n, true, SegKind::kWeight,
               static_cast<std::size_t>(ci) * k});
  v.push_back({p + ".b", static_cast<std::size_t>(co), true, SegKind::kZero, 0});
}

void add_bn(std::vector<SegInfo>& v, const std::string& p, int c) {
  const std::size_t n = static_cast<std::size_t>(c);
  v.push_back({p + ".g", n, true, SegKind::kOne, 0});
  v.push_back({p + ".beta", n, true, SegKind::kZero, 0});
  v.push_back({p + ".rm", n, false, SegKind::kZero, 0});
  v.push_back({p + ".rv", n, false, SegKind::kOne, 0});
}

std::vector<SegInfo> enumerate_segments(const ModelConfig& cfg) {
  std::vector<SegInfo> v;
  add_conv(v, "stem.conv", cfg.stem_filters, cfg.in_channels, cfg.stem_kernel);
  add_bn(v, "stem.bn", cfg.stem_filters);
  for (const BlockSpec& b : enumerate_blocks(cfg)) {
    add_conv(v, b.prefix + ".conv1", b.c_out, b.c_in, b.kernel);
    add_bn(v, b.prefix + ".bn1", b.c_out);
    add_conv(v, b.prefix + ".conv2", b.c_out, b.c_out, b.kernel);
    add_bn(v, b.prefix + ".bn2", b.c_out);
    if (b.has_proj) {
      add_conv(v, b.prefix + ".proj", b.c_out, b.c_in, 1);
      add_bn(v, b.prefix + ".bnp", b.c_out);
    }
  }
  const int c_last = cfg.stage_channels.back();
  v.push_back({"head.w", static_cast<std::size_t>(3) * c_last, true,
               SegKind::kWeight, static_cast<std::size_t>(c_last)});
  v.push_back({"head.b", 3, true, SegKind::kZero, 0});
  return v;
}

}  // namespace

nlohmann::json ModelConfig::to_json() const {
  nlohmann::json j;
  j["in_channels"] = in_channels;
  j["stem"] = {{"filters", stem_filters},
               {"kernel", stem_kernel},
               {"stride", stem_stride}};
  j["stage_channels"] = stage_channels;
  j["blocks_per_stage"] = blocks_per_stage;
  j["block_kernel"] = block_kernel;
  j["window_len"] = window_len;
  j["standardize"] = standardize;
  return j;
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.in_channels = j.at("in_channels").get<int>();
    c.stem_filters = j.at("stem").at("filters").get<int>();
    c.stem_kernel = j.at("stem").at("kernel").get<int>();
    c.stem_stride = j.at("stem").at("stride").get<int>();
    c.stage_channels = j.at("stage_channels").get<std::vector<int>>();
    c.blocks_per_stage = j.at("blocks_per_stage").get<std::vector<int>>();
    c.block_kernel = j.at("block_kernel").get<int>();
    c.window_len = j.at("window_len").get<int>();
    c.standardize = j.value("standardize", false);
  } catch (const nlohmann::json::exception& e) {
    throw CorruptManifest(std::string("bad model config: ") + e.what());
  }
  return c;
}

ModelConfig ModelConfig::paper() { return ModelConfig{}; }

ModelConfig ModelConfig::desk() {
  ModelConfig c;
  c.stem_filters = 8;
  c.stage_channels = {8, 16, 32, 64};
  c.blocks_per_stage = {1, 1, 1, 1};
  return c;
}

ModelConfig ModelConfig::tiny() {
  ModelConfig c;
  c.stem_filters = 4;
  c.stage_channels = {4, 8};
  c.blocks_per_stage = {1, 1};
  c.window_len = 16;
  return c;
}

std::size_t ModelParams::n_trainable() const {
  std::size_t n = 0;
  for (const ParamSegment& s : layout) {
    if (s.trainable) n += s.size;
  }
  return n;
}

const ParamSegment& ModelParams::segment(const std::string& name) const {
  auto it = index.find(name);
  if (it == index.end()) throw ShapeMismatch("unknown parameter segment " + name);
  return layout[it->second];
}

double* ModelParams::seg_data(const std::string& name) {
  return values.data() + segment(name).offset;
}

const double* ModelParams::seg_data(const std::string& name) const {
  return values.data() + segment(name).offset;
}

ModelParams build_params(const ModelConfig& config) {
  validate(config);
  ModelParams p;
  p.config = config;
  std::size_t total = 0;
  for (const SegInfo& s : enumerate_segments(config)) {
    p.index.emplace(s.name, p.layout.size());
    p.layout.push_back({s.name, total, s.size, s.trainable});
    total += s.size;
  }
  p.values.assign(total, 0.0);
  return p;
}

ModelParams init_params(const ModelConfig& config, Rng& rng) {
  ModelParams p = build_params(config);
  const std::vector<SegInfo> segs = enumerate_segments(config);
  std::normal_distribution<double> unit(0.0, 1.0);
  for (std::size_t si = 0; si < segs.size(); ++si) {
    double* dst = p.values.data() + p.layout[si].offset;
    switch (segs[si].kind) {
      case SegKind::kWeight: {
        const double scale = std::sqrt(2.0 / static_cast<double>(segs[si].fan_in));
        for (std::size_t i = 0; i < segs[si].size; ++i) dst[i] = scale * unit(rng);
        break;
      }
      case SegKind::kOne:
        for (std::size_t i = 0; i < segs[si].size; ++i) dst[i] = 1.0;
        break;
      case SegKind::kZero:
        break;
    }
  }
  return p;
}

BatchTensor conv1d_forward(const BatchTensor& x, const ConvWeights& cw) {
  if (static_cast<int>(x.c) != cw.c_in) {
    throw ShapeMismatch("conv input channel count mismatch");
  }
  const long span = static_cast<long>(x.l) + 2L * cw.padding - cw.k;
  if (span < 0) throw ShapeMismatch("kernel longer than padded input");
  const std::size_t lo = static_cast<std::size_t>(span / cw.stride) + 1;
  BatchTensor y = BatchTensor::zeros(x.n, cw.c_out, lo);
  const long lin = static_cast<long>(x.l);
  for (std::size_t i = 0; i < x.n; ++i) {
    for (int oc = 0; oc < cw.c_out; ++oc) {
      double* yrow = &y.v[(i * y.c + oc) * lo];
      const double bias = cw.b[oc];
      for (std::size_t t = 0; t < lo; ++t) yrow[t] = bias;
      for (int ic = 0; ic < cw.c_in; ++ic) {
        const double* xrow = &x.v[(i * x.c + ic) * x.l];
        const double* wrow = cw.w + (static_cast<std::size_t>(oc) * cw.c_in + ic) * cw.k;
        for (int kk = 0; kk < cw.k; ++kk) {
          const double wv = wrow[kk];
          const long off = kk - cw.padding;
          long tmin = 0;
          if (off < 0) tmin = (-off + cw.stride - 1) / cw.stride;
          const long num = lin - 1 - off;
          long tmax = num < 0 ? -1 : num / cw.stride;
          if (tmax >= static_cast<long>(lo)) tmax = static_cast<long>(lo) - 1;
          const double* xs = xrow + off;
          for (long t = tmin; t <= tmax; ++t) {
            yrow[t] += wv * xs[t * cw.stride];
          }
        }
      }
    }
  }
  return y;
}

namespace {

void conv1d_backward(const BatchTensor& x, const ConvWeights& cw,
                     const BatchTensor& gy, BatchTensor& gx, double* gw,
                     double* gb) {
  const std::size_t lo = gy.l;
  const long lin = static_cast<long>(x.l);
  for (std::size_t i = 0; i < x.n; ++i) {
    for (int oc = 0; oc < cw.c_out; ++oc) {
      const double* grow = &gy.v[(i * gy.c + oc) * lo];
      for (std::size_t t = 0; t < lo; ++t) gb[oc] += grow[t];
      for (int ic = 0; ic < cw.c_in; ++ic) {
        const double* xrow = &x.v[(i * x.c + ic) * x.l];
        double* gxrow = &gx.v[(i * gx.c + ic) * gx.l];
        const double* wrow = cw.w + (static_cast<std::size_t>(oc) * cw.c_in + ic) * cw.k;
        double* gwrow = gw + (static_cast<std::size_t>(oc) * cw.c_in + ic) * cw.k;
        for (int kk = 0; kk < cw.k; ++kk) {
          const long off = kk - cw.padding;
          long tmin = 0;
          if (off < 0) tmin = (-off + cw.stride - 1) / cw.stride;
          const long num = lin - 1 - off;
          long tmax = num < 0 ? -1 : num / cw.stride;
          if (tmax >= static_cast<long>(lo)) tmax = static_cast<long>(lo) - 1;
          const double wv = wrow[kk];
          double acc = 0.0;
          const double* xs = xrow + off;
          double* gxs = gxrow + off;
          for (long t = tmin; t <= tmax; ++t) {
            const double g = grow[t];
            acc += g * xs[t * cw.stride];
            gxs[t * cw.stride] += wv * g;
          }
          gwrow[kk] += acc;
        }
      }
    }
  }
}

struct BnCtx {
  BatchTensor xhat;
  std::vector<double> invstd;
};

BatchTensor bn1d_train(const BatchTensor& x, const double* gamma,
                       const double* beta, double* run_mean, double* run_var,
                       BnCtx* ctx) {
  const std::size_t cnt = x.n * x.l;
  BatchTensor y = BatchTensor::zeros(x.n, x.c, x.l);
  if (ctx) {
    ctx->xhat = BatchTensor::zeros(x.n, x.c, x.l);
    ctx->invstd.assign(x.c, 0.0);
  }
  for (std::size_t ch = 0; ch < x.c; ++ch) {
    double mean = 0.0;
    for (std::size_t i = 0; i < x.n; ++i) {
      const double* row = &x.v[(i * x.c + ch) * x.l];
      for (std::size_t t = 0; t < x.l; ++t) mean += row[t];
    }
    mean /= static_cast<double>(cnt);
    double var = 0.0;
    for (std::size_t i = 0; i < x.n; ++i) {
      const double* row = &x.v[(i * x.c + ch) * x.l];
      for (std::size_t t = 0; t < x.l; ++t) {
        const double d = row[t] - mean;
        var += d * d;
      }
    }
    var /= static_cast<double>(cnt);
    const double invstd = 1.0 / std::sqrt(var + kBnEps);
    if (ctx) ctx->invstd[ch] = invstd;
    const double g = gamma[ch];
    const double b = beta[ch];
    for (std::size_t i = 0; i < x.n; ++i) {
      const double* row = &x.v[(i * x.c + ch) * x.l];
      double* yrow = &y.v[(i * y.c + ch) * y.l];
      double* hrow = ctx ? &ctx->xhat.v[(i * x.c + ch) * x.l] : nullptr;
      for (std::size_t t = 0; t < x.l; ++t) {
        const double h = (row[t] - mean) * invstd;
        if (hrow) hrow[t] = h;
        yrow[t] = g * h + b;
      }
    }
    if (run_mean) {
      run_mean[ch] = (1.0 - kBnMomentum) * run_mean[ch] + kBnMomentum * mean;
      run_var[ch] = (1.0 - kBnMomentum) * run_var[ch] + kBnMomentum * var;
    }
  }
  return y;
}

void bn1d_backward(const BnCtx& ctx, const double* gamma, const BatchTensor& gy,
                   BatchTensor& gx, double* ggamma, double* gbeta) {
  const BatchTensor& xh = ctx.xhat;
  const double cnt = static_cast<double>(xh.n * xh.l);
  gx = BatchTensor::zeros(xh.n, xh.c, xh.l);
  for (std::size_t ch = 0; ch < xh.c; ++ch) {
    double sum_g = 0.0;
    double sum_gh = 0.0;
    for (std::size_t i = 0; i < xh.n; ++i) {
      const double* grow = &gy.v[(i * gy.c + ch) * gy.l];
      const double* hrow = &xh.v[(i * xh.c + ch) * xh.l];
      for (std::size_t t = 0; t < xh.l; ++t) {
        sum_g += grow[t];
        sum_gh += grow[t] * hrow[t];
      }
    }
    ggamma[ch] += sum_gh;
    gbeta[ch] += sum_g;
    const double scale = gamma[ch] * ctx.invstd[ch] / cnt;
    for (std::size_t i = 0; i < xh.n; ++i) {
      const double* grow = &gy.v[(i * gy.c + ch) * gy.l];
      const double* hrow = &xh.v[(i * xh.c + ch) * xh.l];
      double* out = &gx.v[(i * gx.c + ch) * gx.l];
      for (std::size_t t = 0; t < xh.l; ++t) {
        out[t] = scale * (cnt * grow[t] - sum_g - hrow[t] * sum_gh);
      }
    }
  }
}

void relu_inplace(BatchTensor& x) {
  for (double& v : x.v) {
    if (v < 0.0) v = 0.0;
  }
}

// gx = gy masked by the forward output y (> 0 passes).
void relu_backward_inplace(const BatchTensor& y, BatchTensor& gy) {
  for (std::size_t i = 0; i < y.v.size(); ++i) {
    if (y.v[i] <= 0.0) gy.v[i] = 0.0;
  }
}

struct BlockCtx {
  BatchTensor in;
  BatchTensor relu1_out;
  BatchTensor y;
  BnCtx bn1, bn2, bnp;
};

struct ForwardCtx {
  BatchTensor x0;
  BatchTensor stem_relu;
  BnCtx stem_bn;
  std::vector<BlockCtx> blocks;
  std::vector<double> gap_out;  // n x c_last
  std::vector<double> pred;     // n x 3
};

ConvWeights conv_view(const ModelParams& p, const std::string& prefix, int co,
                      int ci, int k, int stride, int padding) {
  ConvWeights cw;
  cw.w = p.seg_data(prefix + ".w");
  cw.b = p.seg_data(prefix + ".b");
  cw.c_out = co;
  cw.c_in = ci;
  cw.k = k;
  cw.stride = stride;
  cw.padding = padding;
  return cw;
}

BatchTensor make_input(const ModelConfig& cfg,
                       const std::vector<const WindowSample*>& batch) {
  if (batch.empty()) throw ShapeMismatch("empty batch");
  if (cfg.standardize) {
    throw Error("standardize flag is reserved; inputs must be raw m/s");
  }
  const std::size_t w = static_cast<std::size_t>(cfg.window_len);
  BatchTensor x = BatchTensor::zeros(batch.size(), 6, w);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const WindowSample& s = *batch[i];
    if (s.dvl.size() != 3 * w || s.ins.size() != 3 * w) {
      throw ShapeMismatch("window length disagrees with model config");
    }
    for (std::size_t t = 0; t < w; ++t) {
      for (int a = 0; a < 3; ++a) {
        x.at(i, static_cast<std::size_t>(a), t) = s.dvl[t * 3 + a];
        x.at(i, static_cast<std::size_t>(a) + 3, t) = s.ins[t * 3 + a];
      }
    }
  }
  return x;
}

void linear_forward(const ModelParams& p, const std::vector<double>& x,
                    std::size_t n, std::size_t c, std::vector<double>& y) {
  const double* w = p.seg_data("head.w");
  const double* b = p.seg_data("head.b");
  y.assign(n * 3, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t o = 0; o < 3; ++o) {
      double acc = b[o];
      const double* wrow = w + o * c;
      const double* xrow = x.data() + i * c;
      for (std::size_t ch = 0; ch < c; ++ch) acc += wrow[ch] * xrow[ch];
      y[i * 3 + o] = acc;
    }
  }
}

// Training-mode forward. run_values non-null enables the running-stat update
// (it must point at the same storage as params.values).
void forward_train(const ModelParams& params,
                   const std::vector<const WindowSample*>& batch,
                   double* run_values, ForwardCtx& ctx) {
  const ModelConfig& cfg = params.config;
  ctx.x0 = make_input(cfg, batch);

  const auto run = [&](const std::string& name) -> double* {
    return run_values ? run_values + params.segment(name).offset : nullptr;
  };

  ConvWeights stem = conv_view(params, "stem.conv", cfg.stem_filters,
                               cfg.in_channels, cfg.stem_kernel,
                               cfg.stem_stride, cfg.stem_kernel / 2);
  BatchTensor a = conv1d_forward(ctx.x0, stem);
  a = bn1d_train(a, params.seg_data("stem.bn.g"), params.seg_data("stem.bn.beta"),
                 run("stem.bn.rm"), run("stem.bn.rv"), &ctx.stem_bn);
  relu_inplace(a);
  ctx.stem_relu = a;

  const std::vector<BlockSpec> blocks = enumerate_blocks(cfg);
  ctx.blocks.resize(blocks.size());
  for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
    const BlockSpec& bs = blocks[bi];
    BlockCtx& bc = ctx.blocks[bi];
    bc.in = a;

    ConvWeights c1 = conv_view(params, bs.prefix + ".conv1", bs.c_out, bs.c_in,
                               bs.kernel, bs.stride, bs.kernel / 2);
    BatchTensor t = conv1d_forward(bc.in, c1);
    t = bn1d_train(t, params.seg_data(bs.prefix + ".bn1.g"),
                   params.seg_data(bs.prefix + ".bn1.beta"),
                   run(bs.prefix + ".bn1.rm"), run(bs.prefix + ".bn1.rv"),
                   &bc.bn1);
    relu_inplace(t);
    bc.relu1_out = t;

    ConvWeights c2 = conv_view(params, bs.prefix + ".conv2", bs.c_out, bs.c_out,
                               bs.kernel, 1, bs.kernel / 2);
    t = conv1d_forward(bc.relu1_out, c2);
    t = bn1d_train(t, params.seg_data(bs.prefix + ".bn2.g"),
                   params.seg_data(bs.prefix + ".bn2.beta"),
                   run(bs.prefix + ".bn2.rm"), run(bs.prefix + ".bn2.rv"),
                   &bc.bn2);

    BatchTensor skip;
    if (bs.has_proj) {
      ConvWeights pc = conv_view(params, bs.prefix + ".proj", bs.c_out, bs.c_in,
                                 1, bs.stride, 0);
      skip = conv1d_forward(bc.in, pc);
      skip = bn1d_train(skip, params.seg_data(bs.prefix + ".bnp.g"),
                        params.seg_data(bs.prefix + ".bnp.beta"),
                        run(bs.prefix + ".bnp.rm"), run(bs.prefix + ".bnp.rv"),
                        &bc.bnp);
    } else {
      skip = bc.in;
    }
    if (t.v.size() != skip.v.size()) {
      throw ShapeMismatch("residual branch and skip shapes disagree");
    }
    for (std::size_t i = 0; i < t.v.size(); ++i) t.v[i] += skip.v[i];
    relu_inplace(t);
    bc.y = t;
    a = bc.y;
  }

  const std::size_t c_last = a.c;
  ctx.gap_out.assign(a.n * c_last, 0.0);
  for (std::size_t i = 0; i < a.n; ++i) {
    for (std::size_t ch = 0; ch < c_last; ++ch) {
      const double* row = &a.v[(i * a.c + ch) * a.l];
      double acc = 0.0;
      for (std::size_t t = 0; t < a.l; ++t) acc += row[t];
      ctx.gap_out[i * c_last + ch] = acc / static_cast<double>(a.l);
    }
  }
  linear_forward(params, ctx.gap_out, a.n, c_last, ctx.pred);
}

}  // namespace

BatchTensor bn1d_eval(const BatchTensor& x, const BnWeights& bw) {
  if (static_cast<int>(x.c) != bw.c) {
    throw ShapeMismatch("batchnorm channel count mismatch");
  }
  BatchTensor y = BatchTensor::zeros(x.n, x.c, x.l);
  for (std::size_t ch = 0; ch < x.c; ++ch) {
    const double invstd = 1.0 / std::sqrt(bw.running_var[ch] + kBnEps);
    const double g = bw.gamma[ch];
    const double b = bw.beta[ch];
    const double m = bw.running_mean[ch];
    for (std::size_t i = 0; i < x.n; ++i) {
      const double* row = &x.v[(i * x.c + ch) * x.l];
      double* yrow = &y.v[(i * y.c + ch) * y.l];
      for (std::size_t t = 0; t < x.l; ++t) {
        yrow[t] = g * (row[t] - m) * invstd + b;
      }
    }
  }
  return y;
}

BatchTensor relu(const BatchTensor& x) {
  BatchTensor y = x;
  relu_inplace(y);
  return y;
}

BatchTensor residual_block_eval(const BatchTensor& x, const ConvWeights& conv1,
                                const BnWeights& bn1, const ConvWeights& conv2,
                                const BnWeights& bn2, const ConvWeights* proj,
                                const BnWeights* bn_proj) {
  BatchTensor t = relu(bn1d_eval(conv1d_forward(x, conv1), bn1));
  t = bn1d_eval(conv1d_forward(t, conv2), bn2);
  BatchTensor skip = proj ? bn1d_eval(conv1d_forward(x, *proj), *bn_proj) : x;
  if (t.v.size() != skip.v.size()) {
    throw ShapeMismatch("residual branch and skip shapes disagree");
  }
  for (std::size_t i = 0; i < t.v.size(); ++i) t.v[i] += skip.v[i];
  relu_inplace(t);
  return t;
}

namespace {

BnWeights bn_view(const ModelParams& p, const std::string& prefix) {
  BnWeights bw;
  bw.gamma = p.seg_data(prefix + ".g");
  bw.beta = p.seg_data(prefix + ".beta");
  bw.running_mean = p.seg_data(prefix + ".rm");
  bw.running_var = p.seg_data(prefix + ".rv");
  bw.c = static_cast<int>(p.segment(prefix + ".g").size);
  return bw;
}

std::vector<double> forward_eval_batch(const ModelParams& params,
                                       const std::vector<const WindowSample*>& batch) {
  const ModelConfig& cfg = params.config;
  BatchTensor a = make_input(cfg, batch);

  ConvWeights stem = conv_view(params, "stem.conv", cfg.stem_filters,
                               cfg.in_channels, cfg.stem_kernel,
                               cfg.stem_stride, cfg.stem_kernel / 2);
  a = relu(bn1d_eval(conv1d_forward(a, stem), bn_view(params, "stem.bn")));

  for (const BlockSpec& bs : enumerate_blocks(cfg)) {
    ConvWeights c1 = conv_view(params, bs.prefix + ".conv1", bs.c_out, bs.c_in,
                               bs.kernel, bs.stride, bs.kernel / 2);
    ConvWeights c2 = conv_view(params, bs.prefix + ".conv2", bs.c_out, bs.c_out,
                               bs.kernel, 1, bs.kernel / 2);
    BnWeights b1 = bn_view(params, bs.prefix + ".bn1");
    BnWeights b2 = bn_view(params, bs.prefix + ".bn2");
    if (bs.has_proj) {
      ConvWeights pc = conv_view(params, bs.prefix + ".proj", bs.c_out, bs.c_in,
                                 1, bs.stride, 0);
      BnWeights bp = bn_view(params, bs.prefix + ".bnp");
      a = residual_block_eval(a, c1, b1, c2, b2, &pc, &bp);
    } else {
      a = residual_block_eval(a, c1, b1, c2, b2, nullptr, nullptr);
    }
  }

  const std::size_t c_last = a.c;
  std::vector<double> gap(a.n * c_last, 0.0);
  for (std::size_t i = 0; i < a.n; ++i) {
    for (std::size_t ch = 0; ch < c_last; ++ch) {
      const double* row = &a.v[(i * a.c + ch) * a.l];
      double acc = 0.0;
      for (std::size_t t = 0; t < a.l; ++t) acc += row[t];
      gap[i * c_last + ch] = acc / static_cast<double>(a.l);
    }
  }
  std::vector<double> pred;
  linear_forward(params, gap, a.n, c_last, pred);
  return pred;
}

double mse_deg2(const std::vector<double>& pred,
                const std::vector<const WindowSample*>& batch) {
  double ss = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (int a = 0; a < 3; ++a) {
      const double d = pred[i * 3 + a] - static_cast<double>(batch[i]->label_deg(a));
      ss += d * d;
    }
  }
  return ss / static_cast<double>(batch.size());
}

}  // namespace

Eigen::Vector3d forward_deg(const ModelParams& params, const WindowSample& w) {
  const std::vector<const WindowSample*> batch{&w};
  const std::vector<double> pred = forward_eval_batch(params, batch);
  return {pred[0], pred[1], pred[2]};
}

EulerAngles predict(const ModelParams& params, const WindowSample& w) {
  const Eigen::Vector3d p = forward_deg(params, w);
  return EulerAngles::from_deg(p.x(), p.y(), p.z());
}

std::vector<Eigen::Vector3d> forward_deg_batch(
    const ModelParams& params, const std::vector<const WindowSample*>& batch) {
  const std::vector<double> pred = forward_eval_batch(params, batch);
  std::vector<Eigen::Vector3d> out(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out[i] = Eigen::Vector3d(pred[i * 3], pred[i * 3 + 1], pred[i * 3 + 2]);
  }
  return out;
}

double compute_loss(const ModelParams& params,
                    const std::vector<const WindowSample*>& batch) {
  ForwardCtx ctx;
  forward_train(params, batch, nullptr, ctx);
  return mse_deg2(ctx.pred, batch);
}

double loss_and_gradients(ModelParams& params,
                          const std::vector<const WindowSample*>& batch,
                          std::vector<double>& grads, bool update_running) {
  const ModelConfig& cfg = params.config;
  ForwardCtx ctx;
  forward_train(params, batch, update_running ? params.values.data() : nullptr,
                ctx);
  const double loss = mse_deg2(ctx.pred, batch);

  grads.assign(params.size(), 0.0);
  const auto g = [&](const std::string& name) -> double* {
    return grads.data() + params.segment(name).offset;
  };

  const std::size_t n = batch.size();
  std::vector<double> gpred(n * 3, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (int a = 0; a < 3; ++a) {
      gpred[i * 3 + a] = 2.0 *
                         (ctx.pred[i * 3 + a] -
                          static_cast<double>(batch[i]->label_deg(a))) /
                         static_cast<double>(n);
    }
  }

  // Head: y = W x + b over the pooled features.
  const std::size_t c_last = static_cast<std::size_t>(cfg.stage_channels.back());
  {
    const double* w = params.seg_data("head.w");
    double* gw = g("head.w");
    double* gb = g("head.b");
    std::vector<double> ggap(n * c_last, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t o = 0; o < 3; ++o) {
        const double gp = gpred[i * 3 + o];
        gb[o] += gp;
        for (std::size_t ch = 0; ch < c_last; ++ch) {
          gw[o * c_last + ch] += gp * ctx.gap_out[i * c_last + ch];
          ggap[i * c_last + ch] += gp * w[o * c_last + ch];
        }
      }
    }
    ctx.gap_out.swap(ggap);  // reuse the field as the gradient wrt pooled features
  }

  // GAP: spread the pooled gradient uniformly over the temporal axis.
  const BatchTensor& last = ctx.blocks.empty() ? ctx.stem_relu : ctx.blocks.back().y;
  BatchTensor ga = BatchTensor::zeros(last.n, last.c, last.l);
  for (std::size_t i = 0; i < last.n; ++i) {
    for (std::size_t ch = 0; ch < last.c; ++ch) {
      const double v = ctx.gap_out[i * last.c + ch] / static_cast<double>(last.l);
      double* row = &ga.v[(i * ga.c + ch) * ga.l];
      for (std::size_t t = 0; t < last.l; ++t) row[t] = v;
    }
  }

  const std::vector<BlockSpec> blocks = enumerate_blocks(cfg);
  for (std::size_t bi = blocks.size(); bi-- > 0;) {
    const BlockSpec& bs = blocks[bi];
    BlockCtx& bc = ctx.blocks[bi];

    relu_backward_inplace(bc.y, ga);  // ga now grads the pre-relu sum

    // Branch: conv1 -> bn1 -> relu -> conv2 -> bn2.
    BatchTensor g_conv2out;
    bn1d_backward(bc.bn2, params.seg_data(bs.prefix + ".bn2.g"), ga, g_conv2out,
                  g(bs.prefix + ".bn2.g"), g(bs.prefix + ".bn2.beta"));
    ConvWeights c2 = conv_view(params, bs.prefix + ".conv2", bs.c_out, bs.c_out,
                               bs.kernel, 1, bs.kernel / 2);
    BatchTensor g_relu1 = BatchTensor::zeros(bc.relu1_out.n, bc.relu1_out.c,
                                             bc.relu1_out.l);
    conv1d_backward(bc.relu1_out, c2, g_conv2out, g_relu1,
                    g(bs.prefix + ".conv2.w"), g(bs.prefix + ".conv2.b"));
    relu_backward_inplace(bc.relu1_out, g_relu1);
    BatchTensor g_conv1out;
    bn1d_backward(bc.bn1, params.seg_data(bs.prefix + ".bn1.g"), g_relu1,
                  g_conv1out, g(bs.prefix + ".bn1.g"),
                  g(bs.prefix + ".bn1.beta"));
    ConvWeights c1 = conv_view(params, bs.prefix + ".conv1", bs.c_out, bs.c_in,
                               bs.kernel, bs.stride, bs.kernel / 2);
    BatchTensor g_in = BatchTensor::zeros(bc.in.n, bc.in.c, bc.in.l);
    conv1d_backward(bc.in, c1, g_conv1out, g_in, g(bs.prefix + ".conv1.w"),
                    g(bs.prefix + ".conv1.b"));

    // Skip path adds its share of the block-output gradient.
    if (bs.has_proj) {
      BatchTensor g_projconv;
      bn1d_backward(bc.bnp, params.seg_data(bs.prefix + ".bnp.g"), ga,
                    g_projconv, g(bs.prefix + ".bnp.g"),
                    g(bs.prefix + ".bnp.beta"));
      ConvWeights pc = conv_view(params, bs.prefix + ".proj", bs.c_out, bs.c_in,
                                 1, bs.stride, 0);
      conv1d_backward(bc.in, pc, g_projconv, g_in, g(bs.prefix + ".proj.w"),
                      g(bs.prefix + ".proj.b"));
    } else {
      for (std::size_t i = 0; i < g_in.v.size(); ++i) g_in.v[i] += ga.v[i];
    }
    ga = std::move(g_in);
  }

  relu_backward_inplace(ctx.stem_relu, ga);
  BatchTensor g_stemconv;
  bn1d_backward(ctx.stem_bn, params.seg_data("stem.bn.g"), ga, g_stemconv,
                g("stem.bn.g"), g("stem.bn.beta"));
  ConvWeights stem = conv_view(params, "stem.conv", cfg.stem_filters,
                               cfg.in_channels, cfg.stem_kernel, cfg.stem_stride,
                               cfg.stem_kernel / 2);
  BatchTensor g_x0 = BatchTensor::zeros(ctx.x0.n, ctx.x0.c, ctx.x0.l);
  conv1d_backward(ctx.x0, stem, g_stemconv, g_x0, g("stem.conv.w"),
                  g("stem.conv.b"));
  return loss;
}

double eval_loss(const ModelParams& params, const WindowDataset& ds,
                 std::size_t batch_size) {
  if (ds.samples.empty()) throw LengthMismatch("empty evaluation split");
  double ss = 0.0;
  std::vector<const WindowSample*> batch;
  for (std::size_t start = 0; start < ds.samples.size(); start += batch_size) {
    const std::size_t end = std::min(ds.samples.size(), start + batch_size);
    batch.clear();
    for (std::size_t i = start; i < end; ++i) batch.push_back(&ds.samples[i]);
    const std::vector<double> pred = forward_eval_batch(params, batch);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      for (int a = 0; a < 3; ++a) {
        const double d =
            pred[i * 3 + a] - static_cast<double>(batch[i]->label_deg(a));
        ss += d * d;
      }
    }
  }
  return ss / static_cast<double>(ds.samples.size());
}

}  // namespace insdvl

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "insdvl/dataset.hpp"
#include "insdvl/random.hpp"
#include "insdvl/so3.hpp"

namespace insdvl {

// 1D residual convolutional regressor: stem conv, four (configurable) stages
// of residual blocks, global average pooling over time, linear head to three
// alignment angles in degrees. Parameters live in one flat float64 array with
// a deterministic layout so that optimization, checkpointing and gradient
// checking all address the same storage.

struct ModelConfig {
  int in_channels = 6;
  int stem_filters = 64;
  int stem_kernel = 7;
  int stem_stride = 2;
  std::vector<int> stage_channels = {64, 128, 256, 512};
  std::vector<int> blocks_per_stage = {2, 2, 2, 2};
  int block_kernel = 3;
  int window_len = 125;
  bool standardize = false;  // reserved; inputs are raw m/s

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);

  // Full-size architecture with the published channel widths.
  static ModelConfig paper();
  // Narrow single-block variant that trains in minutes on one core.
  static ModelConfig desk();
  // Two-stage miniature for finite-difference gradient checks.
  static ModelConfig tiny();
};

// One contiguous slice of the flat parameter array. Batchnorm running
// statistics are segments with trainable = false: they travel with the
// checkpoint but receive no gradient and no optimizer update.
struct ParamSegment {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
  bool trainable = false;
};

struct ModelParams {
  ModelConfig config;
  std::vector<double> values;
  std::vector<ParamSegment> layout;
  std::unordered_map<std::string, std::size_t> index;  // name -> layout pos

  std::size_t size() const { return values.size(); }
  std::size_t n_trainable() const;
  const ParamSegment& segment(const std::string& name) const;
  double* seg_data(const std::string& name);
  const double* seg_data(const std::string& name) const;
};

// Builds the layout for config and zero-fills values (running variances
// included, so a freshly built model is the all-zero network).
ModelParams build_params(const ModelConfig& config);

// Kaiming fan-in normal init for conv/linear weights, zero biases and beta,
// one for gamma and running variances. Draw order equals layout order.
ModelParams init_params(const ModelConfig& config, Rng& rng);

// Dense [n, c, l] activation block, row-major with t fastest.
struct BatchTensor {
  std::size_t n = 0, c = 0, l = 0;
  std::vector<double> v;

  static BatchTensor zeros(std::size_t n, std::size_t c, std::size_t l) {
    BatchTensor t;
    t.n = n;
    t.c = c;
    t.l = l;
    t.v.assign(n * c * l, 0.0);
    return t;
  }
  double& at(std::size_t i, std::size_t ch, std::size_t t) {
    return v[(i * c + ch) * l + t];
  }
  double at(std::size_t i, std::size_t ch, std::size_t t) const {
    return v[(i * c + ch) * l + t];
  }
};

struct ConvWeights {
  const double* w = nullptr;  // [c_out][c_in][k]
  const double* b = nullptr;  // [c_out]
  int c_out = 0, c_in = 0, k = 0, stride = 1, padding = 0;
};

struct BnWeights {
  const double* gamma = nullptr;
  const double* beta = nullptr;
  const double* running_mean = nullptr;
  const double* running_var = nullptr;
  int c = 0;
};

inline constexpr double kBnEps = 1e-5;
inline constexpr double kBnMomentum = 0.1;

// y[oc, t'] = b[oc] + sum_ic sum_k w[oc, ic, k] * x[ic, t'*stride + k - padding]
// with zeros outside; L' = floor((L + 2*padding - k)/stride) + 1.
BatchTensor conv1d_forward(const BatchTensor& x, const ConvWeights& cw);

// Inference-mode batchnorm over the channel axis using running statistics.
BatchTensor bn1d_eval(const BatchTensor& x, const BnWeights& bw);

BatchTensor relu(const BatchTensor& x);

// conv-bn-relu-conv-bn branch plus (optionally projected) skip, then relu.
// Projection (1x1 strided conv + bn) applies exactly when proj != nullptr.
BatchTensor residual_block_eval(const BatchTensor& x, const ConvWeights& conv1,
                                const BnWeights& bn1, const ConvWeights& conv2,
                                const BnWeights& bn2, const ConvWeights* proj,
                                const BnWeights* bn_proj);

// Inference forward for one window: channels stacked [dvl xyz, ins xyz],
// output angles in degrees.
Eigen::Vector3d forward_deg(const ModelParams& params, const WindowSample& w);
EulerAngles predict(const ModelParams& params, const WindowSample& w);

// Batched inference forward; rows of the result are degree triples.
std::vector<Eigen::Vector3d> forward_deg_batch(const ModelParams& params,
                                               const std::vector<const WindowSample*>& batch);

// Mean over the batch of the summed squared per-angle error, deg^2.
// Training-mode batchnorm (batch statistics); running statistics are updated
// only when update_running is true. Gradient array matches params.values in
// size, zero on non-trainable segments.
double loss_and_gradients(ModelParams& params,
                          const std::vector<const WindowSample*>& batch,
                          std::vector<double>& grads, bool update_running = true);

// Loss only, training-mode batchnorm, never touches running statistics.
// Finite-difference oracle for the gradient check.
double compute_loss(const ModelParams& params,
                    const std::vector<const WindowSample*>& batch);

// Inference-mode loss of a whole split, batched to bound memory.
double eval_loss(const ModelParams& params, const WindowDataset& ds,
                 std::size_t batch_size = 32);

}  // namespace insdvl

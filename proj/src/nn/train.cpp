#include "insdvl/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "insdvl/binio.hpp"
#include "insdvl/csv.hpp"
#include "insdvl/errors.hpp"

namespace insdvl {

void adam_step(AdamState& state, ModelParams& params,
               const std::vector<double>& grads) {
  if (grads.size() != params.size() || state.m.size() != params.size()) {
    throw ShapeMismatch("optimizer state and parameter sizes disagree");
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (const ParamSegment& seg : params.layout) {
    if (!seg.trainable) continue;
    for (std::size_t i = seg.offset; i < seg.offset + seg.size; ++i) {
      const double g = grads[i];
      state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
      state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
      const double mhat = state.m[i] / bc1;
      const double vhat = state.v[i] / bc2;
      params.values[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

TrainResult train(const ModelConfig& config, const WindowDataset& train_ds,
                  const WindowDataset& val_ds, const TrainOptions& opt,
                  Rng& rng) {
  if (train_ds.samples.empty()) throw LengthMismatch("empty training split");
  if (val_ds.samples.empty()) throw LengthMismatch("empty validation split");

  ModelParams params = init_params(config, rng);
  AdamState adam(params.size(), opt.lr);

  std::vector<std::size_t> order(train_ds.samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  result.best_val_loss = std::numeric_limits<double>::infinity();
  std::vector<double> grads;
  std::vector<const WindowSample*> batch;

  std::size_t since_best = 0;
  for (std::size_t epoch = 0; epoch < opt.max_epochs; ++epoch) {
    if (opt.shuffle) {
      for (std::size_t i = order.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(order[i - 1], order[j]);
      }
    }

    double ss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
      const std::size_t end = std::min(order.size(), start + opt.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(&train_ds.samples[order[i]]);
      }
      const double loss = loss_and_gradients(params, batch, grads);
      if (!std::isfinite(loss)) throw Diverged("training loss is non-finite");
      ss += loss * static_cast<double>(batch.size());
      adam_step(adam, params, grads);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = ss / static_cast<double>(order.size());
    stats.val_loss = eval_loss(params, val_ds, opt.batch_size);
    if (!std::isfinite(stats.val_loss)) {
      throw Diverged("validation loss is non-finite");
    }
    result.history.push_back(stats);

    if (stats.val_loss < result.best_val_loss) {
      result.best_val_loss = stats.val_loss;
      result.best_epoch = epoch;
      result.params = params;
      since_best = 0;
    } else {
      since_best += 1;
      if (opt.patience > 0 && since_best >= opt.patience) break;
    }
  }
  return result;
}

std::string history_csv(const std::vector<EpochStats>& history) {
  std::string out = "epoch,train_loss,val_loss\n";
  for (const EpochStats& e : history) {
    out += csv_row(
        {std::to_string(e.epoch), fmt_num(e.train_loss), fmt_num(e.val_loss)});
  }
  return out;
}

namespace {
constexpr char kCkptMagic[9] = "IDVLNN01";
}

void save_checkpoint(const ModelParams& params, const std::string& path) {
  const std::string cfg = params.config.to_json().dump();
  std::string buf;
  buf.reserve(16 + cfg.size() + 8 + params.size() * 8);
  buf.append(kCkptMagic, 8);
  put_u32(buf, static_cast<std::uint32_t>(cfg.size()));
  buf += cfg;
  put_u64(buf, params.size());
  for (double v : params.values) put_f64(buf, v);
  write_binary_file(path, buf);
}

ModelParams load_checkpoint(const std::string& path) {
  const std::string data = read_binary_file(path);
  ByteReader r(data, path);
  if (r.get_bytes(8) != std::string(kCkptMagic, 8)) {
    throw CorruptManifest(path + ": bad magic bytes");
  }
  const std::uint32_t json_len = r.get_u32();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(r.get_bytes(json_len));
  } catch (const nlohmann::json::exception&) {
    throw CorruptManifest(path + ": unparseable config header");
  }
  ModelParams params = build_params(ModelConfig::from_json(j));
  const std::uint64_t n = r.get_u64();
  if (n != params.size()) {
    throw CorruptManifest(path + ": parameter count disagrees with config");
  }
  for (double& v : params.values) v = r.get_f64();
  r.expect_exhausted();
  return params;
}

}  // namespace insdvl

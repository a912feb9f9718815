#include "insdvl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <map>
#include <numeric>
#include <utility>

#include "insdvl/binio.hpp"
#include "insdvl/csv.hpp"
#include "insdvl/errors.hpp"
#include "insdvl/wahba.hpp"

namespace insdvl {

namespace {

constexpr char kMagic[9] = "IDVLDS01";

}  // namespace

std::vector<WindowSample> make_windows(const DvlSeries& dvl,
                                       const InsVelocitySeries& ins,
                                       std::uint32_t window_len) {
  const std::size_t n = dvl.t.size();
  if (window_len == 0 || n < window_len) {
    throw TooShort("stream shorter than one window");
  }
  const PairedVelocityWindow paired = pair_streams(dvl, ins);
  const std::size_t count = n - window_len + 1;
  std::vector<WindowSample> out(count);
  for (std::size_t k = 0; k < count; ++k) {
    WindowSample& w = out[k];
    w.dvl.resize(static_cast<std::size_t>(window_len) * 3);
    w.ins.resize(static_cast<std::size_t>(window_len) * 3);
    for (std::uint32_t i = 0; i < window_len; ++i) {
      const Eigen::Vector3d& vd = paired.v_d[k + i];
      const Eigen::Vector3d& vb = paired.v_b[k + i];
      for (int a = 0; a < 3; ++a) {
        w.dvl[static_cast<std::size_t>(i) * 3 + a] = static_cast<float>(vd(a));
        w.ins[static_cast<std::size_t>(i) * 3 + a] = static_cast<float>(vb(a));
      }
    }
  }
  return out;
}

std::vector<WindowSample> augment_and_build(const Trajectory& traj,
                                            const std::vector<EulerAngles>& alignments,
                                            const DvlSpec& dvl_spec,
                                            const ImuSpec& imu_spec,
                                            std::uint32_t window_len, Rng& rng) {
  if (alignments.empty()) throw LengthMismatch("no alignment configurations");
  std::vector<WindowSample> out;
  for (const EulerAngles& a : alignments) {
    DvlSeries dvl = simulate_dvl(traj, a, dvl_spec, rng);
    ImuSeries imu = imu_corrupt(traj, imu_spec, rng);
    InsVelocitySeries ins = mechanize(imu, traj.samples.front().v_n,
                                      traj.samples.front().R_nb);
    std::vector<WindowSample> windows = make_windows(dvl, ins, window_len);
    if (out.empty()) out.reserve(alignments.size() * windows.size());
    const Eigen::Vector3f label = a.vec_deg().cast<float>();
    for (WindowSample& w : windows) {
      w.label_deg = label;
      out.push_back(std::move(w));
    }
  }
  return out;
}

DatasetSplits split_dataset(const std::vector<WindowSample>& samples,
                            std::uint32_t window_len,
                            const std::array<double, 3>& fractions,
                            std::uint64_t seed) {
  const double sum = fractions[0] + fractions[1] + fractions[2];
  if (!(fractions[0] > 0.0 && fractions[1] > 0.0 && fractions[2] > 0.0) ||
      std::abs(sum - 1.0) > 1e-9) {
    throw Error("split fractions must be positive and sum to 1");
  }

  // Group windows by exact label bits: one group per alignment configuration.
  std::map<std::array<std::uint32_t, 3>, std::size_t> group_of;
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Eigen::Vector3f& l = samples[i].label_deg;
    const std::array<std::uint32_t, 3> key = {std::bit_cast<std::uint32_t>(l.x()),
                                              std::bit_cast<std::uint32_t>(l.y()),
                                              std::bit_cast<std::uint32_t>(l.z())};
    auto [it, inserted] = group_of.try_emplace(key, groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(i);
  }

  const std::size_t n = groups.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng r(derive_seed(seed, seed_domain::split));
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(r() % i);
    std::swap(order[i - 1], order[j]);
  }

  const auto cut = [n](double f) {
    return static_cast<std::size_t>(
        std::floor(f * static_cast<double>(n) + 1e-9));
  };
  const std::size_t c1 = cut(fractions[0]);
  const std::size_t c2 = cut(fractions[0] + fractions[1]);

  DatasetSplits s;
  s.train.window_len = s.val.window_len = s.test.window_len = window_len;
  for (std::size_t gi = 0; gi < n; ++gi) {
    WindowDataset& dst = gi < c1 ? s.train : (gi < c2 ? s.val : s.test);
    for (std::size_t si : groups[order[gi]]) dst.samples.push_back(samples[si]);
  }
  return s;
}

void write_record_file(const std::string& path, const WindowDataset& ds) {
  const std::size_t block = static_cast<std::size_t>(ds.window_len) * 3;
  std::string buf;
  buf.reserve(16 + ds.samples.size() * (3 + 2 * block) * 4);
  buf.append(kMagic, 8);
  put_u32(buf, static_cast<std::uint32_t>(ds.samples.size()));
  put_u32(buf, ds.window_len);
  for (const WindowSample& w : ds.samples) {
    if (w.dvl.size() != block || w.ins.size() != block) {
      throw ShapeMismatch("window block size disagrees with window_len");
    }
    for (int a = 0; a < 3; ++a) put_f32(buf, w.label_deg(a));
    for (float v : w.dvl) put_f32(buf, v);
    for (float v : w.ins) put_f32(buf, v);
  }
  write_binary_file(path, buf);
}

WindowDataset read_record_file(const std::string& path) {
  const std::string data = read_binary_file(path);
  ByteReader r(data, path);
  if (r.get_bytes(8) != std::string(kMagic, 8)) {
    throw CorruptManifest(path + ": bad magic bytes");
  }
  const std::uint32_t count = r.get_u32();
  const std::uint32_t w_len = r.get_u32();
  const std::size_t block = static_cast<std::size_t>(w_len) * 3;
  WindowDataset ds;
  ds.window_len = w_len;
  ds.samples.resize(count);
  for (WindowSample& w : ds.samples) {
    for (int a = 0; a < 3; ++a) w.label_deg(a) = r.get_f32();
    w.dvl.resize(block);
    for (float& v : w.dvl) v = r.get_f32();
    w.ins.resize(block);
    for (float& v : w.ins) v = r.get_f32();
  }
  r.expect_exhausted();
  return ds;
}

nlohmann::json DatasetManifest::to_json() const {
  nlohmann::json j;
  j["format"] = std::string(kMagic, 8);
  j["window_len"] = window_len;
  j["dvl_rate_hz"] = dvl_rate_hz;
  j["counts"] = {{"train", n_train}, {"val", n_val}, {"test", n_test}};
  j["alignment_mode"] = alignment_mode;
  j["range_deg"] = range_deg;
  j["seed"] = seed;
  j["split_granularity"] = "alignment-configuration";
  j["creation"] = creation;
  return j;
}

DatasetManifest DatasetManifest::from_json(const nlohmann::json& j) {
  DatasetManifest m;
  try {
    if (j.at("format").get<std::string>() != std::string(kMagic, 8)) {
      throw CorruptManifest("manifest format tag mismatch");
    }
    m.window_len = j.at("window_len").get<std::uint32_t>();
    m.dvl_rate_hz = j.at("dvl_rate_hz").get<double>();
    m.n_train = j.at("counts").at("train").get<std::uint64_t>();
    m.n_val = j.at("counts").at("val").get<std::uint64_t>();
    m.n_test = j.at("counts").at("test").get<std::uint64_t>();
    m.alignment_mode = j.at("alignment_mode").get<std::string>();
    m.range_deg = j.at("range_deg").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.creation = j.value("creation", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw CorruptManifest(std::string("manifest missing fields: ") + e.what());
  }
  return m;
}

void save_dataset(const DatasetSplits& splits, const DatasetManifest& manifest,
                  const std::string& dir) {
  if (splits.val.window_len != splits.train.window_len ||
      splits.test.window_len != splits.train.window_len) {
    throw ShapeMismatch("split window lengths disagree");
  }
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory: " + dir);

  DatasetManifest m = manifest;
  m.window_len = splits.train.window_len;
  m.n_train = splits.train.size();
  m.n_val = splits.val.size();
  m.n_test = splits.test.size();

  write_record_file(dir + "/train.bin", splits.train);
  write_record_file(dir + "/val.bin", splits.val);
  write_record_file(dir + "/test.bin", splits.test);
  write_text_file(dir + "/manifest.json", m.to_json().dump(2) + "\n");
}

std::pair<DatasetSplits, DatasetManifest> load_dataset(const std::string& dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(dir + "/manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw CorruptManifest(std::string("unparseable manifest: ") + e.what());
  }
  const DatasetManifest m = DatasetManifest::from_json(j);

  DatasetSplits s;
  s.train = read_record_file(dir + "/train.bin");
  s.val = read_record_file(dir + "/val.bin");
  s.test = read_record_file(dir + "/test.bin");

  const auto check = [&m](const WindowDataset& ds, std::uint64_t want,
                          const char* name) {
    if (ds.size() != want) {
      throw CorruptManifest(std::string(name) + " record count disagrees with manifest");
    }
    if (ds.window_len != m.window_len) {
      throw CorruptManifest(std::string(name) + " window length disagrees with manifest");
    }
  };
  check(s.train, m.n_train, "train.bin");
  check(s.val, m.n_val, "val.bin");
  check(s.test, m.n_test, "test.bin");
  return {std::move(s), m};
}

}  // namespace insdvl

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "insdvl/dvl.hpp"
#include "insdvl/imu.hpp"
#include "insdvl/random.hpp"
#include "insdvl/so3.hpp"
#include "insdvl/trajectory.hpp"

namespace insdvl {

// One supervised example: W DVL-frame velocity rows plus the temporally
// nearest mechanized body-frame velocity rows, labeled with the alignment
// angles that produced the DVL stream. Blocks are row-major (epoch, axis)
// and stored as f32 so that the on-disk record format roundtrips bit-exactly.
struct WindowSample {
  Eigen::Vector3f label_deg = Eigen::Vector3f::Zero();
  std::vector<float> dvl;
  std::vector<float> ins;

  EulerAngles label() const {
    return EulerAngles::from_deg(label_deg.x(), label_deg.y(), label_deg.z());
  }
};

struct WindowDataset {
  std::uint32_t window_len = 0;
  std::vector<WindowSample> samples;

  std::size_t size() const { return samples.size(); }
};

struct DatasetSplits {
  WindowDataset train;
  WindowDataset val;
  WindowDataset test;
};

struct DatasetManifest {
  std::uint32_t window_len = 0;
  double dvl_rate_hz = 0.0;
  std::uint64_t n_train = 0;
  std::uint64_t n_val = 0;
  std::uint64_t n_test = 0;
  std::string alignment_mode;  // "grid" or "random"
  double range_deg = 0.0;
  std::uint64_t seed = 0;
  nlohmann::json creation;  // sensor specs and trajectory preset, echoed

  nlohmann::json to_json() const;
  static DatasetManifest from_json(const nlohmann::json& j);
};

// Stride-1 overlapping windows over the DVL stream; the INS row paired with
// each DVL timestamp is the mechanized v_b at the nearest INS epoch. Labels
// are left zero for the caller to fill. Throws TooShort when the stream has
// fewer than W epochs.
std::vector<WindowSample> make_windows(const DvlSeries& dvl,
                                       const InsVelocitySeries& ins,
                                       std::uint32_t window_len);

// For each alignment: fresh DVL simulation and fresh IMU corruption plus one
// mechanization run (noise drawn sequentially from rng), windowed and labeled
// with that alignment. Output is ordered by alignment, then window start.
std::vector<WindowSample> augment_and_build(const Trajectory& traj,
                                            const std::vector<EulerAngles>& alignments,
                                            const DvlSpec& dvl_spec,
                                            const ImuSpec& imu_spec,
                                            std::uint32_t window_len, Rng& rng);

// Partitions at alignment-configuration granularity: windows sharing a label
// always land in the same split, because stride-1 windows of one
// configuration overlap by W-1 samples and would otherwise leak across
// splits. Configurations are shuffled deterministically from seed, then cut
// at the cumulative-floor boundaries of the fractions.
DatasetSplits split_dataset(const std::vector<WindowSample>& samples,
                            std::uint32_t window_len,
                            const std::array<double, 3>& fractions,
                            std::uint64_t seed);

// Record file: 8-byte magic "IDVLDS01", u32 record count, u32 W, then per
// record [label 3xf32 degrees | dvl Wx3 f32 | ins Wx3 f32], all
// little-endian.
void write_record_file(const std::string& path, const WindowDataset& ds);
WindowDataset read_record_file(const std::string& path);

// Dataset directory: manifest.json plus train.bin / val.bin / test.bin.
// load_dataset throws CorruptManifest when the manifest disagrees with the
// stored records (counts, window length, magic) or a record file is
// truncated.
void save_dataset(const DatasetSplits& splits, const DatasetManifest& manifest,
                  const std::string& dir);
std::pair<DatasetSplits, DatasetManifest> load_dataset(const std::string& dir);

}  // namespace insdvl

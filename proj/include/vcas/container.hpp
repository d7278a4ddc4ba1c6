#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "vcas/envsim.hpp"
#include "vcas/features.hpp"
#include "vcas/learn.hpp"
#include "vcas/policy.hpp"
#include "vcas/signal.hpp"

namespace vcas::io {

inline constexpr std::uint16_t kContainerVersion = 1;

enum class PayloadKind : std::uint16_t {
  Waveform = 1,
  KernelPcaModel = 2,
  MlpModel = 3,
  PolicyModel = 4,
  Dataset = 5,
  TaskModel = 6,
};

std::string_view to_string(PayloadKind k);

struct Array {
  std::vector<std::uint64_t> dims;
  std::vector<double> data;

  friend bool operator==(const Array&, const Array&) = default;
};

// Layout (little-endian):
//   "VCAS" u16 version u16 kind u32 entry-count
//   per entry: u8 type (0 = f64 array, 1 = UTF-8 string) u32 name-length name
//     array:  u32 ndim, u64 dims[ndim], f64 data[prod(dims)]
//     string: u64 length, bytes
// Entries are written in name order.
struct Container {
  PayloadKind kind = PayloadKind::Dataset;
  std::map<std::string, Array> arrays;
  std::map<std::string, std::string> strings;

  const Array& array(const std::string& name) const;
  const std::string& string(const std::string& name) const;
  bool has_array(const std::string& name) const { return arrays.count(name) > 0; }

  void put(const std::string& name, std::vector<double> values);
  void put(const std::string& name, const Eigen::MatrixXd& m);
  void put(const std::string& name, const Eigen::VectorXd& v);
  void put_scalar(const std::string& name, double value);
  void put_string(const std::string& name, std::string value);

  double scalar(const std::string& name) const;
  Eigen::MatrixXd matrix(const std::string& name) const;
  Eigen::VectorXd vector(const std::string& name) const;

  friend bool operator==(const Container&, const Container&) = default;
};

std::string encode(const Container& c);
// Throws DataError on bad magic (checked before anything else), unknown
// version, truncation or trailing bytes.
Container decode(const std::string& bytes);

void write_container(const std::filesystem::path& path, const Container& c);
Container read_container(const std::filesystem::path& path);
// Reads and checks the payload kind.
Container read_container(const std::filesystem::path& path, PayloadKind expected);

// Text and binary helpers that throw DataError naming the path.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

// Payload conversions.
Container to_container(const signal::Waveform& w);
signal::Waveform waveform_from(const Container& c);

Container to_container(const features::KernelPcaModel& m);
features::KernelPcaModel kpca_from(const Container& c);

Container to_container(const learn::MlpModel& m);
learn::MlpModel mlp_from(const Container& c);

Container to_container(const policy::PolicyModel& m);
policy::PolicyModel policy_from(const Container& c);

// Dataset rows plus per-row tags (angles) and a free-form string header.
struct TaggedDataset {
  learn::Dataset data;
  std::map<std::string, std::vector<double>> tags;  // e.g. theta_x, theta_z, angle
  std::map<std::string, std::string> info;          // task, split, condition, ...
  double bin_hz = 0.0;
  std::size_t n_fft = 0;
  std::size_t first_bin = 0;
};

Container to_container(const TaggedDataset& d);
TaggedDataset dataset_from(const Container& c);

// Trained feature pipeline + estimator for one task and band.
struct TaskModel {
  std::string task;
  std::string band;
  double f_low = 0.0;
  double f_high = 0.0;
  features::KernelPcaModel kpca;
  learn::MlpModel mlp;
};

Container to_container(const TaskModel& m);
TaskModel task_model_from(const Container& c);

// Observation model CSV: three rows of three comma-separated probabilities in
// the order diagonal, line, in_hole. Lines starting with '#' are ignored.
std::string observation_model_csv(const envsim::ObservationModel& m, const std::string& comment = {});
envsim::ObservationModel parse_observation_model(const std::string& text);

}  // namespace vcas::io

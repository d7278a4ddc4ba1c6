#include <cmath>
#include <iomanip>
#include <sstream>

#include "vcas/container.hpp"
#include "vcas/error.hpp"

namespace vcas::io {

namespace {

std::string join_lines(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += '\n';
    out += items[i];
  }
  return out;
}

std::vector<std::string> split_lines(const std::string& s) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  std::istringstream in(s);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

std::size_t as_count(double v, const std::string& what) {
  if (!(v >= 0.0) || v != std::floor(v) || v > 1e12) throw DataError("container field '" + what + "' is not a count");
  return static_cast<std::size_t>(v);
}

void put_kpca(Container& c, const std::string& p, const features::KernelPcaModel& m) {
  c.put_scalar(p + "kernel", static_cast<double>(m.kernel));
  c.put(p + "training_rows", m.training_rows);
  c.put(p + "eigenvalues", m.eigenvalues);
  c.put(p + "eigenvectors", m.eigenvectors);
  c.put(p + "kernel_row_means", m.kernel_row_means);
  c.put_scalar(p + "kernel_grand_mean", m.kernel_grand_mean);
  c.put(p + "positive_eigenvalues", m.positive_eigenvalues);
}

features::KernelPcaModel get_kpca(const Container& c, const std::string& p) {
  features::KernelPcaModel m;
  const double kernel = c.scalar(p + "kernel");
  if (kernel != 0.0 && kernel != 1.0) throw DataError("unknown kernel id in container");
  m.kernel = static_cast<features::Kernel>(static_cast<int>(kernel));
  m.training_rows = c.matrix(p + "training_rows");
  m.eigenvalues = c.vector(p + "eigenvalues");
  m.eigenvectors = c.matrix(p + "eigenvectors");
  m.kernel_row_means = c.vector(p + "kernel_row_means");
  m.kernel_grand_mean = c.scalar(p + "kernel_grand_mean");
  m.positive_eigenvalues = c.vector(p + "positive_eigenvalues");
  const auto n = m.training_rows.rows();
  if (m.eigenvectors.rows() != n || m.eigenvectors.cols() != m.eigenvalues.size() ||
      m.kernel_row_means.size() != n) {
    throw DataError("kernel PCA container has inconsistent shapes");
  }
  return m;
}

void put_mlp(Container& c, const std::string& p, const learn::MlpModel& m) {
  c.put_scalar(p + "head", m.head == learn::Head::Classification ? 0.0 : 1.0);
  c.put_scalar(p + "n_layers", static_cast<double>(m.layers.size()));
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    const std::string l = p + "layer" + std::to_string(i);
    c.put(l + ".weights", m.layers[i].weights);
    c.put(l + ".bias", m.layers[i].bias);
  }
  c.put_string(p + "label_names", join_lines(m.label_names));
  c.put_scalar(p + "target_offset", m.target_offset);
  c.put_scalar(p + "target_scale", m.target_scale);
}

learn::MlpModel get_mlp(const Container& c, const std::string& p) {
  learn::MlpModel m;
  const double head = c.scalar(p + "head");
  if (head != 0.0 && head != 1.0) throw DataError("unknown MLP head id in container");
  m.head = head == 0.0 ? learn::Head::Classification : learn::Head::Regression;
  const std::size_t n = as_count(c.scalar(p + "n_layers"), p + "n_layers");
  for (std::size_t i = 0; i < n; ++i) {
    const std::string l = p + "layer" + std::to_string(i);
    m.layers.push_back({c.matrix(l + ".weights"), c.vector(l + ".bias")});
  }
  m.label_names = split_lines(c.string(p + "label_names"));
  m.target_offset = c.scalar(p + "target_offset");
  m.target_scale = c.scalar(p + "target_scale");
  try {
    m.validate();
  } catch (const ParameterError& e) {
    throw DataError(std::string("MLP container is inconsistent: ") + e.what());
  }
  return m;
}

}  // namespace

Container to_container(const signal::Waveform& w) {
  Container c;
  c.kind = PayloadKind::Waveform;
  c.put("samples", w.samples);
  c.put_scalar("sample_rate", w.sample_rate);
  return c;
}

signal::Waveform waveform_from(const Container& c) {
  signal::Waveform w;
  w.samples = c.array("samples").data;
  w.sample_rate = c.scalar("sample_rate");
  return w;
}

Container to_container(const features::KernelPcaModel& m) {
  Container c;
  c.kind = PayloadKind::KernelPcaModel;
  put_kpca(c, "", m);
  return c;
}

features::KernelPcaModel kpca_from(const Container& c) { return get_kpca(c, ""); }

Container to_container(const learn::MlpModel& m) {
  Container c;
  c.kind = PayloadKind::MlpModel;
  put_mlp(c, "", m);
  return c;
}

learn::MlpModel mlp_from(const Container& c) { return get_mlp(c, ""); }

Container to_container(const policy::PolicyModel& m) {
  Container c;
  c.kind = PayloadKind::PolicyModel;
  put_mlp(c, "network.", m.network);
  c.put_scalar("history_length", static_cast<double>(m.history_length));
  return c;
}

policy::PolicyModel policy_from(const Container& c) {
  policy::PolicyModel m;
  m.network = get_mlp(c, "network.");
  m.history_length = as_count(c.scalar("history_length"), "history_length");
  if (m.network.in_dim() != m.history_length * envsim::kTokenCount || m.network.out_dim() != 2) {
    throw DataError("policy container: network shape does not match the history length");
  }
  return m;
}

Container to_container(const TaggedDataset& d) {
  Container c;
  c.kind = PayloadKind::Dataset;
  c.put("rows", d.data.rows);
  c.put("targets", d.data.targets);
  if (!d.data.weights.empty()) c.put("weights", d.data.weights);
  if (!d.data.session_ids.empty()) {
    c.put("session_ids", std::vector<double>(d.data.session_ids.begin(), d.data.session_ids.end()));
  }
  c.put_string("label_names", join_lines(d.data.label_names));
  for (const auto& [name, values] : d.tags) c.put("tag." + name, values);
  for (const auto& [key, value] : d.info) c.put_string("info." + key, value);
  c.put_scalar("bin_hz", d.bin_hz);
  c.put_scalar("n_fft", static_cast<double>(d.n_fft));
  c.put_scalar("first_bin", static_cast<double>(d.first_bin));
  return c;
}

TaggedDataset dataset_from(const Container& c) {
  TaggedDataset d;
  d.data.rows = c.matrix("rows");
  d.data.targets = c.array("targets").data;
  if (c.has_array("weights")) d.data.weights = c.array("weights").data;
  if (c.has_array("session_ids")) {
    for (double s : c.array("session_ids").data) d.data.session_ids.push_back(static_cast<int>(s));
  }
  d.data.label_names = split_lines(c.string("label_names"));
  for (const auto& [name, a] : c.arrays) {
    if (name.rfind("tag.", 0) == 0) d.tags[name.substr(4)] = a.data;
  }
  for (const auto& [name, s] : c.strings) {
    if (name.rfind("info.", 0) == 0) d.info[name.substr(5)] = s;
  }
  d.bin_hz = c.scalar("bin_hz");
  d.n_fft = as_count(c.scalar("n_fft"), "n_fft");
  d.first_bin = as_count(c.scalar("first_bin"), "first_bin");
  if (static_cast<std::size_t>(d.data.rows.rows()) != d.data.targets.size()) {
    throw DataError("dataset container: rows and targets differ in length");
  }
  return d;
}

Container to_container(const TaskModel& m) {
  Container c;
  c.kind = PayloadKind::TaskModel;
  c.put_string("task", m.task);
  c.put_string("band", m.band);
  c.put_scalar("f_low", m.f_low);
  c.put_scalar("f_high", m.f_high);
  put_kpca(c, "kpca.", m.kpca);
  put_mlp(c, "mlp.", m.mlp);
  return c;
}

TaskModel task_model_from(const Container& c) {
  TaskModel m;
  m.task = c.string("task");
  m.band = c.string("band");
  m.f_low = c.scalar("f_low");
  m.f_high = c.scalar("f_high");
  m.kpca = get_kpca(c, "kpca.");
  m.mlp = get_mlp(c, "mlp.");
  if (m.mlp.in_dim() != m.kpca.n_components()) {
    throw DataError("task model: estimator input width does not match the component count");
  }
  return m;
}

std::string observation_model_csv(const envsim::ObservationModel& m, const std::string& comment) {
  std::ostringstream out;
  if (!comment.empty()) {
    std::istringstream lines(comment);
    std::string line;
    while (std::getline(lines, line)) out << "# " << line << '\n';
  }
  out << std::setprecision(17);
  for (const auto& row : m.matrix()) out << row[0] << ',' << row[1] << ',' << row[2] << '\n';
  return out.str();
}

envsim::ObservationModel parse_observation_model(const std::string& text) {
  envsim::ObservationModel::Matrix rows{};
  std::istringstream in(text);
  std::string line;
  int r = 0;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    if (r >= envsim::kContactTypes) throw DataError("observation model CSV has more than three rows");
    std::istringstream cells(line);
    std::string cell;
    int c = 0;
    while (std::getline(cells, cell, ',')) {
      if (c >= envsim::kContactTypes) throw DataError("observation model row " + std::to_string(r + 1) + " has more than three entries");
      try {
        std::size_t used = 0;
        rows[r][c] = std::stod(cell, &used);
        if (cell.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(cell);
      } catch (const std::logic_error&) {
        throw DataError("observation model entry '" + cell + "' is not a number");
      }
      ++c;
    }
    if (c != envsim::kContactTypes) throw DataError("observation model row " + std::to_string(r + 1) + " needs three entries");
    ++r;
  }
  if (r != envsim::kContactTypes) throw DataError("observation model CSV needs three rows");
  try {
    return envsim::ObservationModel(rows);
  } catch (const ParameterError& e) {
    throw DataError(e.what());
  }
}

}  // namespace vcas::io

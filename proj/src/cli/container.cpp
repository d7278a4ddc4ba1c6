#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "vcas/container.hpp"
#include "vcas/error.hpp"

namespace vcas::io {

static_assert(std::endian::native == std::endian::little, "container I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'V', 'C', 'A', 'S'};
constexpr std::uint8_t kArrayEntry = 0;
constexpr std::uint8_t kStringEntry = 1;

class Writer {
 public:
  template <typename T>
  void pod(T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out_.append(buf, sizeof(T));
  }
  void bytes(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}

  template <typename T>
  T pod() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void doubles(double* dst, std::size_t n) {
    if (n > (in_.size() - pos_) / sizeof(double)) truncated();
    std::memcpy(dst, in_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (n > in_.size() - pos_) truncated();
  }
  [[noreturn]] static void truncated() { throw DataError("container is truncated"); }

  const std::string& in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string_view to_string(PayloadKind k) {
  switch (k) {
    case PayloadKind::Waveform: return "waveform";
    case PayloadKind::KernelPcaModel: return "kernel_pca_model";
    case PayloadKind::MlpModel: return "mlp_model";
    case PayloadKind::PolicyModel: return "policy_model";
    case PayloadKind::Dataset: return "dataset";
    case PayloadKind::TaskModel: return "task_model";
  }
  return "unknown";
}

const Array& Container::array(const std::string& name) const {
  auto it = arrays.find(name);
  if (it == arrays.end()) throw DataError("container has no array '" + name + "'");
  return it->second;
}

const std::string& Container::string(const std::string& name) const {
  auto it = strings.find(name);
  if (it == strings.end()) throw DataError("container has no string '" + name + "'");
  return it->second;
}

void Container::put(const std::string& name, std::vector<double> values) {
  Array a;
  a.dims = {values.size()};
  a.data = std::move(values);
  arrays[name] = std::move(a);
}

void Container::put(const std::string& name, const Eigen::MatrixXd& m) {
  Array a;
  a.dims = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
  a.data.resize(static_cast<std::size_t>(m.size()));
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      a.data.data(), m.rows(), m.cols()) = m;
  arrays[name] = std::move(a);
}

void Container::put(const std::string& name, const Eigen::VectorXd& v) {
  put(name, std::vector<double>(v.data(), v.data() + v.size()));
}

void Container::put_scalar(const std::string& name, double value) {
  arrays[name] = Array{{}, {value}};
}

void Container::put_string(const std::string& name, std::string value) { strings[name] = std::move(value); }

double Container::scalar(const std::string& name) const {
  const Array& a = array(name);
  if (!a.dims.empty() || a.data.size() != 1) throw DataError("container entry '" + name + "' is not a scalar");
  return a.data[0];
}

Eigen::MatrixXd Container::matrix(const std::string& name) const {
  const Array& a = array(name);
  if (a.dims.size() != 2) throw DataError("container entry '" + name + "' is not a matrix");
  const auto rows = static_cast<Eigen::Index>(a.dims[0]);
  const auto cols = static_cast<Eigen::Index>(a.dims[1]);
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      a.data.data(), rows, cols);
}

Eigen::VectorXd Container::vector(const std::string& name) const {
  const Array& a = array(name);
  if (a.dims.size() != 1) throw DataError("container entry '" + name + "' is not a vector");
  return Eigen::Map<const Eigen::VectorXd>(a.data.data(), static_cast<Eigen::Index>(a.data.size()));
}

std::string encode(const Container& c) {
  Writer w;
  w.bytes(kMagic, 4);
  w.pod<std::uint16_t>(kContainerVersion);
  w.pod<std::uint16_t>(static_cast<std::uint16_t>(c.kind));
  w.pod<std::uint32_t>(static_cast<std::uint32_t>(c.arrays.size() + c.strings.size()));
  // Arrays and strings share one name-ordered stream.
  auto a = c.arrays.begin();
  auto s = c.strings.begin();
  while (a != c.arrays.end() || s != c.strings.end()) {
    const bool take_array = s == c.strings.end() || (a != c.arrays.end() && a->first < s->first);
    const std::string& name = take_array ? a->first : s->first;
    w.pod<std::uint8_t>(take_array ? kArrayEntry : kStringEntry);
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
    w.bytes(name.data(), name.size());
    if (take_array) {
      const Array& arr = a->second;
      w.pod<std::uint32_t>(static_cast<std::uint32_t>(arr.dims.size()));
      for (auto d : arr.dims) w.pod<std::uint64_t>(d);
      w.bytes(arr.data.data(), arr.data.size() * sizeof(double));
      ++a;
    } else {
      w.pod<std::uint64_t>(s->second.size());
      w.bytes(s->second.data(), s->second.size());
      ++s;
    }
  }
  return w.take();
}

Container decode(const std::string& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw DataError("not a VCAS container (bad magic)");
  }
  Reader r(bytes);
  r.str(4);
  const auto version = r.pod<std::uint16_t>();
  if (version != kContainerVersion) {
    throw DataError("unsupported container version " + std::to_string(version) + " (expected " +
                    std::to_string(kContainerVersion) + ")");
  }
  const auto kind = r.pod<std::uint16_t>();
  if (kind < 1 || kind > 6) throw DataError("unknown container payload kind " + std::to_string(kind));
  Container c;
  c.kind = static_cast<PayloadKind>(kind);
  const auto count = r.pod<std::uint32_t>();
  for (std::uint32_t e = 0; e < count; ++e) {
    const auto type = r.pod<std::uint8_t>();
    const std::string name = r.str(r.pod<std::uint32_t>());
    if (type == kArrayEntry) {
      Array a;
      const auto ndim = r.pod<std::uint32_t>();
      if (ndim > 8) throw DataError("container array '" + name + "' has too many dimensions");
      std::uint64_t total = 1;
      for (std::uint32_t d = 0; d < ndim; ++d) {
        a.dims.push_back(r.pod<std::uint64_t>());
        if (a.dims.back() != 0 && total > (std::uint64_t{1} << 60) / a.dims.back()) {
          throw DataError("container array '" + name + "' is implausibly large");
        }
        total *= a.dims.back();
      }
      if (total > bytes.size() / sizeof(double)) throw DataError("container is truncated");
      a.data.resize(total);
      r.doubles(a.data.data(), total);
      c.arrays[name] = std::move(a);
    } else if (type == kStringEntry) {
      const auto len = r.pod<std::uint64_t>();
      if (len > bytes.size()) throw DataError("container is truncated");
      c.strings[name] = r.str(len);
    } else {
      throw DataError("container entry '" + name + "' has unknown type " + std::to_string(type));
    }
  }
  if (!r.done()) throw DataError("container has trailing bytes");
  return c;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw DataError("failed writing " + path.string());
}

void write_container(const std::filesystem::path& path, const Container& c) {
  write_file(path, encode(c));
}

Container read_container(const std::filesystem::path& path) {
  try {
    return decode(read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

Container read_container(const std::filesystem::path& path, PayloadKind expected) {
  Container c = read_container(path);
  if (c.kind != expected) {
    throw DataError(path.string() + ": expected a " + std::string(to_string(expected)) +
                    " container, found " + std::string(to_string(c.kind)));
  }
  return c;
}

}  // namespace vcas::io

#include "iti/nn/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <sstream>

namespace iti::nn {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void write_le(std::string& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
  U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>(bits & 0xffu));
    if constexpr (sizeof(T) > 1) bits >>= 8;
  }
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T read() {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
    need(sizeof(T));
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      bits |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    return std::bit_cast<T>(bits);
  }

  std::string_view take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw ConfigError("checkpoint: truncated file");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::uint64_t element_count(const std::vector<std::uint64_t>& shape) {
  std::uint64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

}  // namespace

void Checkpoint::insert(StoredTensor t) {
  auto it = std::find_if(entries_.begin(), entries_.end(),
                         [&](const StoredTensor& e) { return e.name == t.name; });
  if (it != entries_.end())
    *it = std::move(t);
  else
    entries_.push_back(std::move(t));
}

bool Checkpoint::contains(const std::string& name) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const StoredTensor& e) { return e.name == name; });
}

const StoredTensor& Checkpoint::entry(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return e;
  throw ConfigError("checkpoint: no tensor named '" + name + "'");
}

Eigen::MatrixXd Checkpoint::get(const std::string& name) const {
  const auto& e = entry(name);
  Eigen::Index rows = 1, cols = 1;
  if (e.shape.size() == 1) {
    rows = Eigen::Index(e.shape[0]);
  } else if (e.shape.size() == 2) {
    rows = Eigen::Index(e.shape[0]);
    cols = Eigen::Index(e.shape[1]);
  } else if (!e.shape.empty()) {
    throw ConfigError("checkpoint: tensor '" + name + "' has rank > 2");
  }
  Eigen::MatrixXd m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = e.values[k++];
  return m;
}

std::string Checkpoint::serialize() const {
  std::string out(kMagic);
  write_le<std::uint64_t>(out, entries_.size());
  for (const auto& e : entries_) {
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
    out += e.name;
    write_le<std::uint8_t>(out, static_cast<std::uint8_t>(e.dtype));
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(e.shape.size()));
    for (auto d : e.shape) write_le<std::uint64_t>(out, d);
  }
  for (const auto& e : entries_) {
    for (double v : e.values) {
      if (e.dtype == DType::f32)
        write_le<float>(out, static_cast<float>(v));
      else
        write_le<double>(out, v);
    }
  }
  return out;
}

Checkpoint Checkpoint::deserialize(std::string_view bytes) {
  Reader in(bytes);
  if (in.take(kMagic.size()) != kMagic) throw ConfigError("checkpoint: bad magic");
  Checkpoint ckpt;
  const auto count = in.read<std::uint64_t>();
  for (std::uint64_t i = 0; i < count; ++i) {
    StoredTensor t;
    const auto len = in.read<std::uint32_t>();
    t.name = std::string(in.take(len));
    const auto dtype = in.read<std::uint8_t>();
    if (dtype > 1) throw ConfigError("checkpoint: unknown dtype for '" + t.name + "'");
    t.dtype = static_cast<DType>(dtype);
    const auto rank = in.read<std::uint32_t>();
    for (std::uint32_t r = 0; r < rank; ++r) t.shape.push_back(in.read<std::uint64_t>());
    ckpt.entries_.push_back(std::move(t));
  }
  for (auto& t : ckpt.entries_) {
    const auto n = element_count(t.shape);
    t.values.resize(n);
    for (std::uint64_t k = 0; k < n; ++k)
      t.values[k] = t.dtype == DType::f32 ? static_cast<double>(in.read<float>()) : in.read<double>();
  }
  if (!in.done()) throw ConfigError("checkpoint: trailing bytes");
  return ckpt;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ConfigError("checkpoint: cannot write " + path.string());
  const auto bytes = serialize();
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw ConfigError("checkpoint: write failed for " + path.string());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("checkpoint: cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return deserialize(ss.str());
}

bool operator==(const Checkpoint& a, const Checkpoint& b) { return a.serialize() == b.serialize(); }

}  // namespace iti::nn

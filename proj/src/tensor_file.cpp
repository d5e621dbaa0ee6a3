#include "rfdfin/tensor_file.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>

#include "rfdfin/error.hpp"

namespace rfdfin {

static_assert(std::endian::native == std::endian::little, "container I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'R', 'F', 'D', 'F'};

template <class T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  out.insert(out.end(), raw, raw + sizeof(T));
}

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& bytes, std::size_t pos, std::size_t end) : bytes_(bytes), pos_(pos), end_(end) {}

  template <class T>
  T get() {
    T value;
    need(sizeof(T));
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  void read(void* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }

  std::size_t remaining() const { return end_ - pos_; }

 private:
  void need(std::size_t n) const {
    if (n > end_ - pos_) throw Error(ErrorCode::Corrupt, "tensor container truncated");
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_;
  std::size_t end_;
};

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

void TensorFile::put(NamedTensor tensor) {
  if (tensor.name.empty() || tensor.name.size() > 0xFFFF) throw Error(ErrorCode::InvalidArgument, "tensor name length out of range");
  if (tensor.dims.size() > 0xFF) throw Error(ErrorCode::InvalidArgument, "tensor rank out of range");
  const auto count = std::accumulate(tensor.dims.begin(), tensor.dims.end(), std::uint64_t{1}, std::multiplies<>());
  if (count != tensor.data.size()) throw Error(ErrorCode::DimMismatch, "tensor '" + tensor.name + "' payload does not match dims");
  for (auto& t : tensors_)
    if (t.name == tensor.name) {
      t = std::move(tensor);
      return;
    }
  tensors_.push_back(std::move(tensor));
}

const NamedTensor* TensorFile::find(const std::string& name) const {
  for (const auto& t : tensors_)
    if (t.name == name) return &t;
  return nullptr;
}

const NamedTensor& TensorFile::at(const std::string& name) const {
  if (const auto* t = find(name)) return *t;
  throw Error(ErrorCode::Corrupt, "missing tensor '" + name + "'");
}

std::vector<std::uint8_t> TensorFile::serialize() const {
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  put_le<std::uint16_t>(out, kVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensors_.size()));
  for (const auto& t : tensors_) {
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(t.name.size()));
    out.insert(out.end(), t.name.begin(), t.name.end());
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(t.dims.size()));
    for (auto d : t.dims) put_le<std::uint64_t>(out, d);
    const auto* raw = reinterpret_cast<const std::uint8_t*>(t.data.data());
    out.insert(out.end(), raw, raw + t.data.size() * sizeof(float));
  }
  put_le<std::uint32_t>(out, crc32_of(out.data() + 4, out.size() - 4));
  return out;
}

TensorFile TensorFile::deserialize(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 + 2 + 4 + 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorCode::Corrupt, "not a tensor container (bad magic)");
  }
  const std::size_t body_end = bytes.size() - 4;
  std::uint32_t stored;
  std::memcpy(&stored, bytes.data() + body_end, 4);
  if (stored != crc32_of(bytes.data() + 4, body_end - 4)) throw Error(ErrorCode::Corrupt, "tensor container CRC mismatch");

  Reader r(bytes, 4, body_end);
  const auto version = r.get<std::uint16_t>();
  if (version != kVersion) throw Error(ErrorCode::Corrupt, "unsupported container version " + std::to_string(version));
  const auto count = r.get<std::uint32_t>();
  TensorFile file;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name.resize(r.get<std::uint16_t>());
    r.read(t.name.data(), t.name.size());
    t.dims.resize(r.get<std::uint8_t>());
    std::uint64_t elems = 1;
    for (auto& d : t.dims) {
      d = r.get<std::uint64_t>();
      if (d != 0 && elems > r.remaining() / d) throw Error(ErrorCode::Corrupt, "tensor dims exceed payload");
      elems *= d;
    }
    if (elems > r.remaining() / sizeof(float)) throw Error(ErrorCode::Corrupt, "tensor payload truncated");
    t.data.resize(static_cast<std::size_t>(elems));
    r.read(t.data.data(), t.data.size() * sizeof(float));
    if (file.contains(t.name)) throw Error(ErrorCode::Corrupt, "duplicate tensor name '" + t.name + "'");
    file.tensors_.push_back(std::move(t));
  }
  if (r.remaining() != 0) throw Error(ErrorCode::Corrupt, "trailing bytes in tensor container");
  return file;
}

void TensorFile::save(const std::filesystem::path& path) const {
  const auto bytes = serialize();
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::Io, "short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

TensorFile TensorFile::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return deserialize(bytes);
}

}  // namespace rfdfin

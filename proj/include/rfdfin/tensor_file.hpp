#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace rfdfin {

// Named f32 array as stored in the container.
struct NamedTensor {
  std::string name;
  std::vector<std::uint64_t> dims;
  std::vector<float> data;
};

// Binary container shared by checkpoints, feature caches and spectrum exports.
//
//   "RFDF" | u16 version=1 | u32 count |
//   count x { u16 name_len | name (UTF-8) | u8 rank | rank x u64 dims | f32 payload } |
//   u32 CRC-32 of every byte after the magic
//
// All integers and floats are little-endian.
class TensorFile {
 public:
  static constexpr std::uint16_t kVersion = 1;

  void put(NamedTensor tensor);  // replaces an existing entry of the same name
  const NamedTensor* find(const std::string& name) const;
  const NamedTensor& at(const std::string& name) const;
  bool contains(const std::string& name) const { return find(name) != nullptr; }
  const std::vector<NamedTensor>& tensors() const noexcept { return tensors_; }

  std::vector<std::uint8_t> serialize() const;
  static TensorFile deserialize(const std::vector<std::uint8_t>& bytes);

  void save(const std::filesystem::path& path) const;
  static TensorFile load(const std::filesystem::path& path);

 private:
  std::vector<NamedTensor> tensors_;
};

}  // namespace rfdfin

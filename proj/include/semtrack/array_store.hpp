#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "semtrack/tensor.hpp"

namespace semtrack {

// Flat name -> tensor container. On disk:
//   magic "SEMARR01", u32 count, then per entry
//   u32 name_len, name bytes, u32 rank, u64 extents[rank], f64 data[]
// All integers and reals little-endian, entries in name order.
class ArrayStore {
 public:
  void put(const std::string& name, const Tensor& t) { arrays_[name] = t; }
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const { return arrays_.count(name) != 0; }
  std::size_t size() const { return arrays_.size(); }
  const std::map<std::string, Tensor>& entries() const { return arrays_; }

  std::vector<std::uint8_t> serialize() const;
  static ArrayStore deserialize(std::span<const std::uint8_t> bytes);

  void save(const std::filesystem::path& path) const;
  static ArrayStore load(const std::filesystem::path& path);

  friend bool operator==(const ArrayStore&, const ArrayStore&) = default;

 private:
  std::map<std::string, Tensor> arrays_;
};

}  // namespace semtrack

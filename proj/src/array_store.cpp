#include "semtrack/array_store.hpp"

#include <bit>
#include <cstring>

#include "semtrack/image.hpp"

namespace semtrack {

namespace {

constexpr char kMagic[8] = {'S', 'E', 'M', 'A', 'R', 'R', '0', '1'};

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  std::uint64_t bits = 0;
  if constexpr (std::is_same_v<T, double>) {
    bits = std::bit_cast<std::uint64_t>(value);
  } else {
    bits = static_cast<std::uint64_t>(value);
  }
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += sizeof(T);
    if constexpr (std::is_same_v<T, double>) {
      return std::bit_cast<double>(bits);
    } else {
      return static_cast<T>(bits);
    }
  }

  std::string string(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw ValidationError("array container is truncated");
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

const Tensor& ArrayStore::get(const std::string& name) const {
  auto it = arrays_.find(name);
  if (it == arrays_.end()) throw ValidationError("array container has no entry '" + name + "'");
  return it->second;
}

std::vector<std::uint8_t> ArrayStore::serialize() const {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_le(out, static_cast<std::uint32_t>(arrays_.size()));
  for (const auto& [name, t] : arrays_) {
    put_le(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put_le(out, static_cast<std::uint32_t>(t.rank()));
    for (auto e : t.shape()) put_le(out, static_cast<std::uint64_t>(e));
    for (double v : t.data()) put_le(out, v);
  }
  return out;
}

ArrayStore ArrayStore::deserialize(std::span<const std::uint8_t> bytes) {
  Reader in(bytes);
  if (in.string(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    throw ValidationError("not an array container (bad magic)");
  }
  ArrayStore store;
  const auto count = in.get<std::uint32_t>();
  for (std::uint32_t n = 0; n < count; ++n) {
    auto name = in.string(in.get<std::uint32_t>());
    const auto rank = in.get<std::uint32_t>();
    Shape shape(rank);
    for (auto& e : shape) e = static_cast<std::size_t>(in.get<std::uint64_t>());
    std::vector<double> data(shape_size(shape));
    for (auto& v : data) v = in.get<double>();
    store.arrays_[std::move(name)] = Tensor(std::move(shape), std::move(data));
  }
  if (!in.done()) throw ValidationError("array container has trailing bytes");
  return store;
}

void ArrayStore::save(const std::filesystem::path& path) const { write_file_bytes(path, serialize()); }

ArrayStore ArrayStore::load(const std::filesystem::path& path) { return deserialize(read_file_bytes(path)); }

}  // namespace semtrack

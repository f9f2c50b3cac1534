#include "cloudsample/param_store.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace cloudsample::ad {

namespace {

constexpr char kMagic[4] = {'C', 'S', 'W', 'T'};

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
  using U = std::make_unsigned_t<T>;
  auto bits = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>(bits & 0xFFu));
    bits = static_cast<U>(bits >> 8);
  }
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    std::make_unsigned_t<T> bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      bits |= static_cast<std::make_unsigned_t<T>>(
          static_cast<std::make_unsigned_t<T>>(bytes_[pos_ + i]) << (8 * i));
    pos_ += sizeof(T);
    return static_cast<T>(bits);
  }

  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  std::size_t position() const { return pos_; }
  std::size_t size() const { return bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size())
      throw Error(Errc::MalformedLength, "weight file truncated");
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_weights(std::span<const StoredTensor> tensors) {
  std::vector<std::uint8_t> out;
  out.push_back(kWeightFileVersion);
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  std::uint64_t offset = 0;
  for (const auto& t : tensors) {
    if (element_count(t.shape) != t.data.size())
      throw Error(Errc::ShapeMismatch, "stored tensor '" + t.name + "' size differs from shape");
    if (t.name.size() > 0xFFFF || t.shape.size() > 0xFF)
      throw Error(Errc::ShapeMismatch, "stored tensor '" + t.name + "' header too large");
    put<std::uint16_t>(out, static_cast<std::uint16_t>(t.name.size()));
    out.insert(out.end(), t.name.begin(), t.name.end());
    out.push_back(static_cast<std::uint8_t>(t.shape.size()));
    for (auto d : t.shape) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    put<std::uint64_t>(out, offset);
    offset += 4 * t.data.size();
  }
  for (const auto& t : tensors)
    for (float v : t.data) put<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

std::vector<StoredTensor> decode_weights(std::span<const std::uint8_t> bytes) {
  Reader in(bytes);
  const auto version = in.get<std::uint8_t>();
  if (version != kWeightFileVersion)
    throw Error(Errc::ParseFailure, "unsupported weight file version " + std::to_string(version));
  const auto magic = in.take(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0)
    throw Error(Errc::ParseFailure, "not a weight file");
  const auto count = in.get<std::uint32_t>();
  std::vector<StoredTensor> tensors(count);
  std::vector<std::uint64_t> offsets(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = in.get<std::uint16_t>();
    const auto name = in.take(name_len);
    tensors[i].name.assign(name.begin(), name.end());
    const auto rank = in.get<std::uint8_t>();
    for (std::uint8_t r = 0; r < rank; ++r) tensors[i].shape.push_back(in.get<std::uint32_t>());
    offsets[i] = in.get<std::uint64_t>();
  }
  const std::size_t payload = in.position();
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t n = element_count(tensors[i].shape);
    const std::uint64_t start = payload + offsets[i];
    if (start + 4 * n > bytes.size())
      throw Error(Errc::MalformedLength, "payload of '" + tensors[i].name + "' truncated");
    Reader values(bytes.subspan(start, 4 * n));
    tensors[i].data.resize(n);
    for (auto& v : tensors[i].data) v = std::bit_cast<float>(values.get<std::uint32_t>());
  }
  return tensors;
}

void write_weight_file(const std::filesystem::path& path,
                       std::span<const StoredTensor> tensors) {
  const auto bytes = encode_weights(tensors);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoFailure, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::IoFailure, "write failed for " + path.string());
}

std::vector<StoredTensor> read_weight_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_weights(bytes);
}

}  // namespace cloudsample::ad

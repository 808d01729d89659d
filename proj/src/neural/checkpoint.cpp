#include "pdlab/neural/checkpoint.hpp"

#include "pdlab/common/hash.hpp"

#include <bit>
#include <fstream>
#include <sstream>

namespace pdlab::nn {

namespace {

constexpr std::string_view kMagic = "PDLABCK1";
constexpr std::size_t kDigestSize = 32;

template <typename U>
void put(std::string& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out += static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF);
}

class Reader {
 public:
  explicit Reader(std::string_view s) : s_(s) {}

  template <typename U>
  U get() {
    need(sizeof(U));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s_[pos_ + i])) << (8 * i);
    pos_ += sizeof(U);
    return static_cast<U>(v);
  }

  std::string_view take(std::uint64_t n) {
    need(n);
    auto out = s_.substr(pos_, static_cast<std::size_t>(n));
    pos_ += static_cast<std::size_t>(n);
    return out;
  }

  bool done() const { return pos_ == s_.size(); }

 private:
  void need(std::uint64_t n) const {
    if (n > s_.size() - pos_) throw CheckpointError("checkpoint is truncated");
  }
  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

bool detail::host_is_little_endian() { return std::endian::native == std::endian::little; }

const StoredArray* CheckpointData::find(std::string_view name) const {
  for (const auto& a : arrays)
    if (a.name == name) return &a;
  return nullptr;
}

std::string serialize_checkpoint(const CheckpointData& data) {
  std::string out(kMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  const std::string meta = data.meta.dump();
  put<std::uint64_t>(out, meta.size());
  out += meta;
  put<std::uint32_t>(out, static_cast<std::uint32_t>(data.arrays.size()));
  for (const auto& a : data.arrays) {
    const std::size_t width = a.dtype == DType::F32 ? 4 : 8;
    if (a.bytes.size() != a.rows * a.cols * width) throw CheckpointError("array '" + a.name + "' has the wrong payload size");
    put<std::uint32_t>(out, static_cast<std::uint32_t>(a.name.size()));
    out += a.name;
    put<std::uint8_t>(out, static_cast<std::uint8_t>(a.dtype));
    put<std::uint64_t>(out, a.rows);
    put<std::uint64_t>(out, a.cols);
    out += a.bytes;
  }
  out += sha256(out);
  return out;
}

CheckpointData parse_checkpoint(std::string_view bytes) {
  if (bytes.size() < kMagic.size() + kDigestSize || bytes.substr(0, kMagic.size()) != kMagic)
    throw CheckpointError("not a checkpoint file");
  const std::string_view body = bytes.substr(0, bytes.size() - kDigestSize);
  if (sha256(body) != bytes.substr(body.size())) throw CheckpointError("checkpoint digest mismatch");
  Reader r(body);
  r.take(kMagic.size());
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  CheckpointData data;
  const auto meta_len = r.get<std::uint64_t>();
  try {
    data.meta = nlohmann::json::parse(r.take(meta_len));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint metadata: ") + e.what());
  }
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t k = 0; k < count; ++k) {
    StoredArray a;
    a.name = std::string(r.take(r.get<std::uint32_t>()));
    const auto dtype = r.get<std::uint8_t>();
    if (dtype != static_cast<std::uint8_t>(DType::F32) && dtype != static_cast<std::uint8_t>(DType::F64))
      throw CheckpointError("array '" + a.name + "' has unknown dtype");
    a.dtype = static_cast<DType>(dtype);
    a.rows = r.get<std::uint64_t>();
    a.cols = r.get<std::uint64_t>();
    const std::uint64_t width = a.dtype == DType::F32 ? 4 : 8;
    if (a.cols != 0 && a.rows > (std::uint64_t(1) << 40) / a.cols) throw CheckpointError("array '" + a.name + "' is too large");
    a.bytes = std::string(r.take(a.rows * a.cols * width));
    data.arrays.push_back(std::move(a));
  }
  if (!r.done()) throw CheckpointError("trailing bytes in checkpoint");
  return data;
}

void write_checkpoint(const std::filesystem::path& path, const CheckpointData& data) {
  const std::string bytes = serialize_checkpoint(data);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

CheckpointData read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str());
}

}  // namespace pdlab::nn

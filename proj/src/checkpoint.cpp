#include "wdsel/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "wdsel/error.hpp"

namespace wdsel {

namespace {

constexpr char kMagic[4] = {'W', 'D', 'S', 'C'};
constexpr char kTrailer[4] = {'C', 'S', 'D', 'W'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

class Writer {
 public:
  void bytes(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  template <typename T>
  void put(T v) { bytes(&v, sizeof(T)); }
  const std::string& data() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(std::string data, std::string path) : data_(std::move(data)), path_(std::move(path)) {}

  void bytes(void* p, std::size_t n) {
    if (n > data_.size() - pos_)
      fail(ErrorKind::corrupt, path_ + ": truncated checkpoint at byte " + std::to_string(pos_));
    std::memcpy(p, data_.data() + pos_, n);
    pos_ += n;
  }
  template <typename T>
  T get() {
    T v;
    bytes(&v, sizeof(T));
    return v;
  }
  bool at_end() const { return pos_ == data_.size(); }

 private:
  std::string data_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const WdsNet& model, const std::filesystem::path& path) {
  WdsNet copy = model;
  const ModelConfig& c = copy.config;
  Writer w;
  w.bytes(kMagic, 4);
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint64_t>(copy.architecture_hash());
  w.put<std::uint32_t>(static_cast<std::uint32_t>(c.bank_size));
  for (std::size_t v : {c.feature_dim, c.blocks, c.channels, c.head_channels, c.head_blocks,
                        c.min_window})
    w.put<std::uint64_t>(v);
  w.put<std::uint8_t>(c.linear_activation ? 1 : 0);
  const auto params = copy.named_parameters();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, t] : params) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
    w.bytes(name.data(), name.size());
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t->shape.size()));
    for (std::size_t d : t->shape) w.put<std::uint64_t>(d);
    w.bytes(t->values.data(), t->values.size() * sizeof(double));
  }
  w.bytes(kTrailer, 4);

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  out.write(w.data().data(), static_cast<std::streamsize>(w.data().size()));
  if (!out) fail(ErrorKind::io, "write failed for " + path.string());
}

WdsNet load_checkpoint(const std::filesystem::path& path,
                       const std::optional<ModelConfig>& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  Reader r(ss.str(), path.string());

  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    fail(ErrorKind::corrupt, path.string() + ": not a checkpoint (bad magic)");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    fail(ErrorKind::version, path.string() + ": checkpoint version " + std::to_string(version) +
                                 ", expected " + std::to_string(kCheckpointVersion));
  const auto hash = r.get<std::uint64_t>();
  ModelConfig c;
  c.bank_size = r.get<std::uint32_t>();
  for (std::size_t* field : {&c.feature_dim, &c.blocks, &c.channels, &c.head_channels,
                             &c.head_blocks, &c.min_window})
    *field = static_cast<std::size_t>(r.get<std::uint64_t>());
  c.linear_activation = r.get<std::uint8_t>() != 0;
  if (architecture_hash(c) != hash)
    fail(ErrorKind::hash_mismatch, path.string() + ": header hash does not match its architecture");
  if (expected) {
    if (expected->bank_size != c.bank_size)
      fail(ErrorKind::hash_mismatch, path.string() + ": checkpoint bank size " +
                                         std::to_string(c.bank_size) + ", run expects " +
                                         std::to_string(expected->bank_size));
    if (architecture_hash(*expected) != hash)
      fail(ErrorKind::hash_mismatch, path.string() + ": architecture hash mismatch");
  }

  WdsNet model = WdsNet::zeros(c);
  std::map<std::string, ad::Tensor*> slots;
  for (auto& [name, t] : model.named_parameters()) slots[name] = t;
  const auto count = r.get<std::uint32_t>();
  if (count != slots.size())
    fail(ErrorKind::corrupt, path.string() + ": parameter count " + std::to_string(count) +
                                 " does not match architecture");
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = r.get<std::uint32_t>();
    if (len > 256) fail(ErrorKind::corrupt, path.string() + ": implausible parameter name");
    std::string name(len, '\0');
    r.bytes(name.data(), len);
    auto it = slots.find(name);
    if (it == slots.end() || it->second == nullptr)
      fail(ErrorKind::corrupt, path.string() + ": unexpected parameter '" + name + "'");
    ad::Tensor& t = *it->second;
    it->second = nullptr;
    const auto rank = r.get<std::uint32_t>();
    if (rank != t.shape.size())
      fail(ErrorKind::corrupt, path.string() + ": rank mismatch for '" + name + "'");
    for (std::size_t d = 0; d < rank; ++d)
      if (r.get<std::uint64_t>() != t.shape[d])
        fail(ErrorKind::corrupt, path.string() + ": shape mismatch for '" + name + "'");
    r.bytes(t.values.data(), t.values.size() * sizeof(double));
  }
  char trailer[4];
  r.bytes(trailer, 4);
  if (std::memcmp(trailer, kTrailer, 4) != 0 || !r.at_end())
    fail(ErrorKind::corrupt, path.string() + ": bad trailer");
  return model;
}

}  // namespace wdsel

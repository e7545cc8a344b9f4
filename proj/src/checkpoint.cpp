#include "sentigen/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

namespace sentigen {

namespace {

constexpr char kMagic[4] = {'S', 'G', 'C', 'K'};
constexpr uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary), path_(path) {
    if (!out_) throw std::runtime_error("cannot write checkpoint " + path);
  }

  void u32(uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out_.write(b, 4);
  }

  void i32(int32_t v) { u32(static_cast<uint32_t>(v)); }

  void f64(double v) {
    uint64_t bits = std::bit_cast<uint64_t>(v);
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    out_.write(b, 8);
  }

  void str(const std::string& s) {
    u32(static_cast<uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

  void raw(const char* data, size_t n) { out_.write(data, static_cast<std::streamsize>(n)); }

  void finish() {
    out_.flush();
    if (!out_) throw std::runtime_error("write failed for checkpoint " + path_);
  }

 private:
  std::ofstream out_;
  std::string path_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw std::runtime_error("cannot open checkpoint " + path);
  }

  uint32_t u32() {
    unsigned char b[4];
    read(reinterpret_cast<char*>(b), 4);
    return static_cast<uint32_t>(b[0]) | static_cast<uint32_t>(b[1]) << 8 |
           static_cast<uint32_t>(b[2]) << 16 | static_cast<uint32_t>(b[3]) << 24;
  }

  int32_t i32() { return static_cast<int32_t>(u32()); }

  double f64() {
    unsigned char b[8];
    read(reinterpret_cast<char*>(b), 8);
    uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) bits = (bits << 8) | b[i];
    return std::bit_cast<double>(bits);
  }

  std::string str() {
    uint32_t n = u32();
    if (n > (1u << 24)) corrupt("oversized string");
    std::string s(n, '\0');
    read(s.data(), n);
    return s;
  }

  void read(char* dst, size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in_.gcount()) != n) corrupt("truncated file");
  }

  [[noreturn]] void corrupt(const std::string& why) {
    throw std::runtime_error("corrupt checkpoint " + path_ + ": " + why);
  }

 private:
  std::ifstream in_;
  std::string path_;
};

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  Writer w(path);
  w.raw(kMagic, 4);
  w.u32(kVersion);

  const ModelConfig& cfg = ckpt.params.config;
  w.u32(static_cast<uint32_t>(cfg.variant));
  w.i32(cfg.vocab_size);
  w.i32(cfg.embed_dim);
  w.i32(cfg.hidden_dim);
  w.i32(cfg.sentiment_embed_dim);
  w.i32(cfg.feature_dim);
  w.i32(cfg.classifier_hidden);

  const std::vector<std::string>& tokens = ckpt.vocab.token_list();
  w.u32(static_cast<uint32_t>(tokens.size()));
  for (const std::string& t : tokens) w.str(t);

  uint32_t count = 0;
  ckpt.params.for_each([&](const std::string&, const Tensor&) { ++count; });
  w.u32(count);
  ckpt.params.for_each([&](const std::string& name, const Tensor& t) {
    w.str(name);
    w.u32(static_cast<uint32_t>(t.rank()));
    for (int i = 0; i < t.rank(); ++i) w.i32(t.dim(i));
    for (size_t i = 0; i < t.size(); ++i) w.f64(t[i]);
  });
  w.finish();
}

Checkpoint load_checkpoint(const std::string& path) {
  Reader r(path);
  char magic[4];
  r.read(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("checkpoint " + path + ": bad magic (not a checkpoint file)");
  uint32_t version = r.u32();
  if (version != kVersion)
    throw std::runtime_error("checkpoint " + path + ": unsupported version " +
                             std::to_string(version));

  Checkpoint ckpt;
  ModelConfig cfg;
  uint32_t variant = r.u32();
  if (variant > 2) r.corrupt("bad variant tag");
  cfg.variant = static_cast<Variant>(variant);
  cfg.vocab_size = r.i32();
  cfg.embed_dim = r.i32();
  cfg.hidden_dim = r.i32();
  cfg.sentiment_embed_dim = r.i32();
  cfg.feature_dim = r.i32();
  cfg.classifier_hidden = r.i32();

  uint32_t n_tokens = r.u32();
  if (n_tokens > (1u << 24)) r.corrupt("oversized vocabulary");
  std::vector<std::string> tokens;
  tokens.reserve(n_tokens);
  for (uint32_t i = 0; i < n_tokens; ++i) tokens.push_back(r.str());
  ckpt.vocab = Vocabulary::from_token_list(std::move(tokens));
  if (ckpt.vocab.size() != cfg.vocab_size) r.corrupt("vocab size disagrees with config");

  // Initialize with the right layout, then overwrite every tensor from disk.
  ckpt.params = ModelParams::init(cfg, 0);
  uint32_t n_params = r.u32();
  std::map<std::string, Tensor> loaded;
  for (uint32_t i = 0; i < n_params; ++i) {
    std::string name = r.str();
    uint32_t rank = r.u32();
    if (rank > 8) r.corrupt("bad tensor rank");
    std::vector<int> shape;
    size_t total = 1;
    for (uint32_t d = 0; d < rank; ++d) {
      int dim = r.i32();
      if (dim <= 0 || dim > (1 << 24)) r.corrupt("bad tensor dimension");
      shape.push_back(dim);
      total *= static_cast<size_t>(dim);
    }
    Tensor t(shape);
    for (size_t k = 0; k < total; ++k) t[k] = r.f64();
    loaded.emplace(std::move(name), std::move(t));
  }

  size_t used = 0;
  ckpt.params.for_each([&](const std::string& name, Tensor& t) {
    auto it = loaded.find(name);
    if (it == loaded.end()) r.corrupt("missing parameter '" + name + "'");
    if (!it->second.same_shape(t)) r.corrupt("shape mismatch for parameter '" + name + "'");
    t = it->second;
    ++used;
  });
  if (used != loaded.size()) r.corrupt("unexpected extra parameters");
  return ckpt;
}

}  // namespace sentigen

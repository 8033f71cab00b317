#include "textile/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace textile {

namespace {

constexpr char kMagic[4] = {'T', 'X', 'C', 'K'};
constexpr uint32_t kVersion = 1;

void put_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw std::runtime_error(path + ": truncated checkpoint");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

} // namespace

void save_checkpoint(const ModelParams& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  const ModelConfig& c = params.config;
  for (int field : {c.layers, c.hidden, c.heads, c.ff, c.vocab, c.max_text_len, c.patch_count,
                    c.d_patch})
    put_u32(out, static_cast<uint32_t>(field));

  put_u32(out, static_cast<uint32_t>(params.all.size()));
  for (const Tensor& t : params.all) {
    const std::string& name = t.name();
    put_u32(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(out, static_cast<uint32_t>(t.shape().size()));
    for (int d : t.shape()) put_u32(out, static_cast<uint32_t>(d));
    for (Real v : t.value()) {
      const float f = static_cast<float>(v);
      uint32_t bits;
      std::memcpy(&bits, &f, 4);
      put_u32(out, bits);
    }
  }
  if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error(path + ": not a checkpoint file");
  if (get_u32(in, path) != kVersion)
    throw std::runtime_error(path + ": unsupported checkpoint version");

  ModelConfig c;
  c.layers = static_cast<int>(get_u32(in, path));
  c.hidden = static_cast<int>(get_u32(in, path));
  c.heads = static_cast<int>(get_u32(in, path));
  c.ff = static_cast<int>(get_u32(in, path));
  c.vocab = static_cast<int>(get_u32(in, path));
  c.max_text_len = static_cast<int>(get_u32(in, path));
  c.patch_count = static_cast<int>(get_u32(in, path));
  c.d_patch = static_cast<int>(get_u32(in, path));

  ModelParams params = ModelParams::init(c, 0);
  const uint32_t block_count = get_u32(in, path);
  if (block_count != params.all.size())
    throw std::runtime_error(path + ": block count does not match the stored config");

  for (uint32_t b = 0; b < block_count; ++b) {
    const uint32_t name_len = get_u32(in, path);
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw std::runtime_error(path + ": truncated name");
    Tensor& t = params.at(name);
    const uint32_t ndim = get_u32(in, path);
    if (ndim != t.shape().size()) throw std::runtime_error(path + ": rank mismatch on " + name);
    for (uint32_t d = 0; d < ndim; ++d)
      if (static_cast<int>(get_u32(in, path)) != t.shape()[d])
        throw std::runtime_error(path + ": shape mismatch on " + name);
    for (Real& v : t.value()) {
      const uint32_t bits = get_u32(in, path);
      float f;
      std::memcpy(&f, &bits, 4);
      v = f;
    }
  }
  return params;
}

} // namespace textile

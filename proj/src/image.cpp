#include "textile/image.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace textile {

namespace {

constexpr char kRasterMagic[4] = {'T', 'X', 'I', 'F'};

// Reads the next PPM header token, skipping whitespace and # comments.
std::string next_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

void write_le32(std::ostream& out, int32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

int32_t read_le32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw std::runtime_error(path + ": truncated raster header");
  return static_cast<int32_t>(static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
                              (static_cast<uint32_t>(b[2]) << 16) |
                              (static_cast<uint32_t>(b[3]) << 24));
}

void write_le_f32(std::ostream& out, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  write_le32(out, static_cast<int32_t>(bits));
}

} // namespace

Image Image::zeros(int height, int width) {
  Image img;
  img.height = height;
  img.width = width;
  img.pixels.assign(static_cast<size_t>(height) * width * 3, 0.0);
  return img;
}

Image read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_ppm: cannot open " + path);
  if (next_token(in) != "P6") throw std::runtime_error(path + ": not a binary P6 file");
  const int width = std::stoi(next_token(in));
  const int height = std::stoi(next_token(in));
  const int maxval = std::stoi(next_token(in));
  if (width <= 0 || height <= 0) throw std::runtime_error(path + ": bad dimensions");
  if (maxval != 255) throw std::runtime_error(path + ": only maxval 255 supported");

  std::vector<unsigned char> bytes(static_cast<size_t>(height) * width * 3);
  if (!in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size())))
    throw std::runtime_error(path + ": truncated pixel data");

  Image img = Image::zeros(height, width);
  for (size_t i = 0; i < bytes.size(); ++i) img.pixels[i] = bytes[i] / 255.0;
  return img;
}

void write_ppm(const Image& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_ppm: cannot open " + path);
  out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  std::vector<unsigned char> bytes(img.pixels.size());
  for (size_t i = 0; i < img.pixels.size(); ++i) {
    const Real v = std::min(Real(1), std::max(Real(0), img.pixels[i]));
    bytes[i] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write_ppm: write failed for " + path);
}

Image read_raster(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_raster: cannot open " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kRasterMagic, 4) != 0)
    throw std::runtime_error(path + ": bad raster magic");
  const int height = read_le32(in, path);
  const int width = read_le32(in, path);
  const int channels = read_le32(in, path);
  if (height <= 0 || width <= 0) throw std::runtime_error(path + ": bad dimensions");
  if (channels != 3) throw std::runtime_error(path + ": expected 3 channels");

  Image img = Image::zeros(height, width);
  for (auto& p : img.pixels) {
    const uint32_t bits = static_cast<uint32_t>(read_le32(in, path));
    float f;
    std::memcpy(&f, &bits, 4);
    p = f;
  }
  return img;
}

void write_raster(const Image& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_raster: cannot open " + path);
  out.write(kRasterMagic, 4);
  write_le32(out, img.height);
  write_le32(out, img.width);
  write_le32(out, 3);
  for (Real p : img.pixels) write_le_f32(out, static_cast<float>(p));
  if (!out) throw std::runtime_error("write_raster: write failed for " + path);
}

} // namespace textile

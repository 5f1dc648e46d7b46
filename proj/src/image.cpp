#include "camweight/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "camweight/errors.hpp"

namespace camweight {

Image::Image(int width, int height, double fill) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw DimensionMismatch("image dimensions must be nonnegative");
  data_.assign(static_cast<std::size_t>(width) * height * 3, fill);
}

void Image::clamp01() {
  for (double& v : data_) v = std::clamp(v, 0.0, 1.0);
}

std::string encode_ppm(const Image& img) {
  std::string out = "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  out.reserve(out.size() + img.data().size());
  for (double v : img.data()) {
    out.push_back(static_cast<char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  }
  return out;
}

Image decode_ppm(const std::string& bytes) {
  std::istringstream in(bytes);
  std::string magic;
  int w = 0;
  int h = 0;
  int maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (!in || magic != "P6" || maxval != 255 || w < 0 || h < 0) throw MalformedInput("not a P6 PPM with maxval 255");
  in.get();
  Image img(w, h);
  const std::size_t offset = static_cast<std::size_t>(in.tellg());
  if (bytes.size() < offset + img.data().size()) throw MalformedInput("truncated PPM payload");
  for (std::size_t i = 0; i < img.data().size(); ++i) {
    img.data()[i] = static_cast<unsigned char>(bytes[offset + i]) / 255.0;
  }
  return img;
}

void write_ppm(const Image& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  const std::string bytes = encode_ppm(img);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MalformedInput("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return decode_ppm(buffer.str());
}

}  // namespace camweight

#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace camweight {

/// Row-major RGB raster with a top-left origin, channels interleaved.
class Image {
 public:
  Image() = default;
  Image(int width, int height, double fill = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

  double& at(int x, int y, int c) { return data_[index(x, y, c)]; }
  double at(int x, int y, int c) const { return data_[index(x, y, c)]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  void clamp01();

  bool operator==(const Image& other) const = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * 3 + c;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

// Binary PPM (P6, maxval 255). Values are clamped to [0, 1] and rounded to the nearest level.
std::string encode_ppm(const Image& img);
Image decode_ppm(const std::string& bytes);
void write_ppm(const Image& img, const std::filesystem::path& path);
Image read_ppm(const std::filesystem::path& path);

}  // namespace camweight

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace nucleo {

struct ImageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnreadableFile : ImageError {
    explicit UnreadableFile(const std::string& path)
        : ImageError("cannot read file: " + path) {}
};
struct UnsupportedFormat : ImageError {
    explicit UnsupportedFormat(const std::string& what)
        : ImageError("unsupported raster format: " + what) {}
};

// Row-major 8-bit grayscale image, 0 = black.
class GrayImage {
public:
    GrayImage() = default;
    GrayImage(int width, int height, std::uint8_t fill = 0)
        : width_(width), height_(height),
          pixels_(static_cast<std::size_t>(width) * height, fill) {
        if (width < 1 || height < 1)
            throw ImageError("GrayImage dimensions must be >= 1");
    }
    GrayImage(int width, int height, std::vector<std::uint8_t> pixels)
        : width_(width), height_(height), pixels_(std::move(pixels)) {
        if (width < 1 || height < 1)
            throw ImageError("GrayImage dimensions must be >= 1");
        if (pixels_.size() != static_cast<std::size_t>(width) * height)
            throw ImageError("pixel count does not match dimensions");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::uint8_t at(int x, int y) const {
        return pixels_[static_cast<std::size_t>(y) * width_ + x];
    }
    std::uint8_t& at(int x, int y) {
        return pixels_[static_cast<std::size_t>(y) * width_ + x];
    }
    bool contains(int x, int y) const {
        return x >= 0 && x < width_ && y >= 0 && y < height_;
    }
    const std::vector<std::uint8_t>& pixels() const { return pixels_; }
    std::vector<std::uint8_t>& pixels() { return pixels_; }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> pixels_;
};

// Binary mask over a frame; stored as 0/1 bytes.
class BinaryMask {
public:
    BinaryMask() = default;
    BinaryMask(int width, int height, bool fill = false)
        : width_(width), height_(height),
          bits_(static_cast<std::size_t>(width) * height, fill ? 1 : 0) {
        if (width < 1 || height < 1)
            throw ImageError("BinaryMask dimensions must be >= 1");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    bool get(int x, int y) const {
        return bits_[static_cast<std::size_t>(y) * width_ + x] != 0;
    }
    void set(int x, int y, bool v) {
        bits_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0;
    }
    const std::vector<std::uint8_t>& bits() const { return bits_; }
    std::vector<std::uint8_t>& bits() { return bits_; }
    long long count() const {
        long long n = 0;
        for (auto b : bits_) n += b;
        return n;
    }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> bits_;
};

// Interleaved RGB, for overlays only.
class RgbImage {
public:
    RgbImage() = default;
    RgbImage(int width, int height)
        : width_(width), height_(height),
          data_(static_cast<std::size_t>(width) * height * 3, 0) {}
    explicit RgbImage(const GrayImage& g) : RgbImage(g.width(), g.height()) {
        for (std::size_t i = 0; i < g.pixels().size(); ++i) {
            data_[3 * i] = data_[3 * i + 1] = data_[3 * i + 2] = g.pixels()[i];
        }
    }

    int width() const { return width_; }
    int height() const { return height_; }
    void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
        std::size_t i = (static_cast<std::size_t>(y) * width_ + x) * 3;
        data_[i] = r;
        data_[i + 1] = g;
        data_[i + 2] = b;
    }
    const std::vector<std::uint8_t>& data() const { return data_; }
    std::vector<std::uint8_t>& data() { return data_; }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

// Rounded integer luminance used when collapsing color inputs.
std::uint8_t luminance(std::uint8_t r, std::uint8_t g, std::uint8_t b);

// Decodes PNG, BMP or PGM/PPM by content; color inputs are converted to
// grayscale with luminance().
GrayImage load_frame(const std::string& path);

// 16-bit grayscale raster, used for label images and hit-map exports.
struct Gray16Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint16_t> pixels;  // row-major

    std::uint16_t at(int x, int y) const {
        return pixels[static_cast<std::size_t>(y) * width + x];
    }
};

void save_png(const std::string& path, const GrayImage& img);
void save_png(const std::string& path, const Gray16Image& img);
void save_png(const std::string& path, const RgbImage& img);
Gray16Image load_png16(const std::string& path);

void save_pgm(const std::string& path, const GrayImage& img);

// Mask rasters are written as 0/255 PNG and read back with any nonzero
// pixel counting as foreground.
void save_mask_png(const std::string& path, const BinaryMask& mask);
BinaryMask load_mask(const std::string& path);

}  // namespace nucleo

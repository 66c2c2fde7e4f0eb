#pragma once

#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace aoisim {

/// Grayscale image with kappa bits per pixel, row-major storage.
class Image {
public:
    Image() = default;
    Image(int width, int height, int depth_bits = 8, int fill = 0)
        : width_(width), height_(height), depth_bits_(depth_bits),
          pixels_(static_cast<std::size_t>(width) * height, fill) {
        if (width < 1 || height < 1)
            throw std::invalid_argument("Image: dimensions must be >= 1");
        if (depth_bits < 1 || depth_bits > 16)
            throw std::invalid_argument("Image: depth must be in [1,16] bits");
        if (fill < 0 || fill > max_value())
            throw std::invalid_argument("Image: fill out of range");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    int depth_bits() const { return depth_bits_; }
    int max_value() const { return (1 << depth_bits_) - 1; }  // R_I = 2^kappa - 1
    std::size_t size() const { return pixels_.size(); }

    int at(int row, int col) const { return pixels_[idx(row, col)]; }
    void set(int row, int col, int value) {
        if (value < 0) value = 0;
        if (value > max_value()) value = max_value();
        pixels_[idx(row, col)] = static_cast<std::uint16_t>(value);
    }

    const std::vector<std::uint16_t>& pixels() const { return pixels_; }
    std::vector<std::uint16_t>& pixels() { return pixels_; }

    bool same_shape(const Image& other) const {
        return width_ == other.width_ && height_ == other.height_ &&
               depth_bits_ == other.depth_bits_;
    }

    bool operator==(const Image& other) const {
        return same_shape(other) && pixels_ == other.pixels_;
    }

    // Binary PGM (P5). 8-bit payloads only; debugging aid.
    void write_pgm(std::ostream& os) const {
        if (depth_bits_ > 8)
            throw std::runtime_error("write_pgm: only depths up to 8 bits supported");
        os << "P5\n" << width_ << " " << height_ << "\n" << max_value() << "\n";
        for (auto p : pixels_) os.put(static_cast<char>(p & 0xff));
    }

private:
    std::size_t idx(int row, int col) const {
        return static_cast<std::size_t>(row) * width_ + col;
    }
    int width_ = 0;
    int height_ = 0;
    int depth_bits_ = 8;
    std::vector<std::uint16_t> pixels_;
};

}  // namespace aoisim

#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace neva {

// Raised when a caller violates a documented precondition.
class InvalidArgument : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

// Raised when input data (files, records, images) cannot be used.
class DataError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Planar (channel-major) real-valued array of logical shape H x W x C.
// Used for stimuli, single-channel maps and network activations alike.
class Image {
  public:
    Image() = default;
    Image(int height, int width, int channels, double fill = 0.0);

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    int channels() const noexcept { return channels_; }
    std::size_t plane_size() const noexcept {
        return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
    }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& at(int y, int x, int c = 0) noexcept { return data_[index(y, x, c)]; }
    double at(int y, int x, int c = 0) const noexcept { return data_[index(y, x, c)]; }

    std::span<double> plane(int c) noexcept { return {data_.data() + c * plane_size(), plane_size()}; }
    std::span<const double> plane(int c) const noexcept {
        return {data_.data() + c * plane_size(), plane_size()};
    }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }
    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }

    bool same_shape(const Image& other) const noexcept {
        return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
    }

    friend bool operator==(const Image&, const Image&) = default;

  private:
    std::size_t index(int y, int x, int c) const noexcept {
        return (static_cast<std::size_t>(c) * height_ + y) * static_cast<std::size_t>(width_) + x;
    }

    int height_ = 0;
    int width_ = 0;
    int channels_ = 0;
    std::vector<double> data_;
};

// A point of regard in normalized image coordinates; (0,0) is the top-left
// corner, (1,1) the bottom-right.
struct Fixation {
    double x = 0.5;
    double y = 0.5;

    friend bool operator==(const Fixation&, const Fixation&) = default;
};

struct Scanpath {
    std::string stimulus_id;
    std::vector<Fixation> fixations;

    std::size_t size() const noexcept { return fixations.size(); }
};

bool in_unit_square(const Fixation& f) noexcept;

// Throws InvalidArgument unless the image is a usable stimulus: at least 8x8,
// one or three channels, every value finite and in [0,1].
void validate_stimulus(const Image& s);

// Pixel-center coordinate of column j / row i in normalized units.
inline double pixel_center(int index, int extent) noexcept {
    return (index + 0.5) / static_cast<double>(extent);
}

// Bilinear resampling with pixel-center alignment.
Image resize_bilinear(const Image& src, int height, int width);

// Adjoint of resize_bilinear: maps a gradient on the resized image back onto
// the source grid of shape (height, width).
Image resize_bilinear_adjoint(const Image& grad, int height, int width);

// Channel adapter between stimuli and models: 1 -> n replicates, n -> 1
// averages, equal counts copy.
Image adapt_channels(const Image& src, int channels);
Image adapt_channels_adjoint(const Image& grad, int source_channels);

}  // namespace neva

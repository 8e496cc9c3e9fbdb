#pragma once

#include "tracknet/tensor.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace tracknet {

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error("data: " + msg) {}
};

// 8-bit image as stored on disk; channels is 1 (PGM) or 3 (PPM)
struct RawImage {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<std::uint8_t> pixels;  // row-major, interleaved channels
};

RawImage read_pnm(const std::string& path);
void write_pgm(const std::string& path, const Tensor& image);  // [h,w] in [0,1]
RawImage to_raw_gray(const Tensor& image);                     // quantizes to 8 bits

// Luminance conversion, 2x2 mean-pool halving steps down to target_side,
// then scale to [0,1]. Input must be square with side = target_side * 2^k.
Tensor preprocess_image(const RawImage& raw, int target_side);
// Same on a float tensor with values in 0..255; shape [h,w] or [h,w,3].
Tensor preprocess_image(const Tensor& raw, int target_side);

// pixel coordinate in [0, side] <-> tanh-range label in [-1, 1]
float label_to_norm(float pixel, int side);
float norm_to_label(float norm, int side);

struct Sample {
    Tensor image;   // [side, side] in [0,1]
    float label_x;  // track-center pixel coordinates at the stored resolution
    float label_y;

    float norm_x(int side) const { return label_to_norm(label_x, side); }
    float norm_y(int side) const { return label_to_norm(label_y, side); }
};

struct Dataset {
    std::vector<Sample> samples;
    int side = 0;
    std::string split;  // "train" / "test" / free-form tag

    std::size_t size() const { return samples.size(); }
};

struct GenConfig {
    int count = 385;
    int side = 112;
    float track_width_min = 6.0f;   // pixels
    float track_width_max = 14.0f;
    float angle_min = -0.6f;        // radians from vertical
    float angle_max = 0.6f;
    float offset_min = -40.0f;      // center-line offset from mid-column at the label row
    float offset_max = 40.0f;
    float brightness_min = 0.7f;
    float brightness_max = 1.0f;
    float noise_sigma = 0.02f;
    std::uint64_t seed = 0;

    void validate() const;
};

// Row (in pixels) where the track-center label is taken: 75% of image height.
int label_row(int side);

// Bright center line over a darker road surface; the label is the line's
// intersection with the reference row. Deterministic per seed.
Dataset generate_synthetic(const GenConfig& cfg);

// Directory layout: labels.csv (`filename,x,y`) plus PGM/PPM images.
void save_dataset(const Dataset& ds, const std::string& dir);
Dataset load_dataset(const std::string& dir, int target_side);

// Deterministic split of one dataset into train/test parts.
std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double test_fraction,
                                          std::uint64_t seed);

}  // namespace tracknet

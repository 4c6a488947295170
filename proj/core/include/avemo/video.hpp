#pragma once

#include "avemo/sampling.hpp"

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace avemo {

inline constexpr std::size_t kFrameHeight = 112;
inline constexpr std::size_t kFrameWidth = 96;
inline constexpr std::size_t kFrameChannels = 3;
inline constexpr std::size_t kFrameValues = kFrameHeight * kFrameWidth * kFrameChannels;

// A pre-cropped face image, height x width x channel (RGB), values in [0, 1].
struct FrameImage {
    std::vector<float> pixels = std::vector<float>(kFrameValues, 0.0f);

    float& at(std::size_t y, std::size_t x, std::size_t c) {
        return pixels[(y * kFrameWidth + x) * kFrameChannels + c];
    }
    float at(std::size_t y, std::size_t x, std::size_t c) const {
        return pixels[(y * kFrameWidth + x) * kFrameChannels + c];
    }
};

struct ClipSample {
    std::vector<FrameImage> frames;
    std::vector<std::size_t> source_indices;
};

// Accepts binary PPM (P6, 96x112, maxval 255) or the raw-float FRM1 format.
// No resizing: any other geometry is an error.
FrameImage load_frame(const std::filesystem::path& path);
FrameImage decode_frame(std::string_view bytes, const std::string& context);

// P6 quantizes each value to round(255 * p).
std::string encode_ppm(const FrameImage& frame);
// "FRM1\0", u32 112, u32 96, u32 3, f32 values row-major.
std::string encode_frm(const FrameImage& frame);
void save_ppm(const std::filesystem::path& path, const FrameImage& frame);
void save_frm(const std::filesystem::path& path, const FrameImage& frame);

// Segment i covers [floor(i*L/N), floor((i+1)*L/N) - 1]. Train mode picks
// uniformly inside each segment, eval mode picks floor((lo + hi) / 2). An empty
// segment (L < N) repeats the last index of the nearest previous non-empty
// segment, or index 0 when there is none yet.
std::vector<std::size_t> sample_segments(std::size_t n_frames, std::size_t n_out, const SampleMode& mode);

// Regular files ending in .ppm or .frm, sorted by name.
std::vector<std::filesystem::path> list_frame_files(const std::filesystem::path& dir);

ClipSample load_clip(const std::filesystem::path& frames_dir, std::size_t n_out, const SampleMode& mode);

}  // namespace avemo

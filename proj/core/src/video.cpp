#include "avemo/video.hpp"

#include "avemo/binary_io.hpp"
#include "avemo/error.hpp"
#include "avemo/rng.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace avemo {

namespace {

constexpr std::string_view kFrmMagic{"FRM1\0", 5};

std::string dims_error(const std::string& context, std::size_t w, std::size_t h) {
    return context + ": wrong frame dimensions, expected 96×112 (width×height), found " +
           std::to_string(w) + "×" + std::to_string(h);
}

// Reads one whitespace-delimited header token, skipping `#` comments.
std::string ppm_token(std::string_view bytes, std::size_t& pos, const std::string& context) {
    while (pos < bytes.size()) {
        const char c = bytes[pos];
        if (c == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            ++pos;
        } else {
            break;
        }
    }
    std::string token;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos])) && bytes[pos] != '#') {
        token.push_back(bytes[pos++]);
    }
    if (token.empty()) {
        throw DataError(context + ": malformed PPM header");
    }
    return token;
}

std::size_t ppm_number(std::string_view bytes, std::size_t& pos, const std::string& context) {
    const auto tok = ppm_token(bytes, pos, context);
    if (!std::all_of(tok.begin(), tok.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }) ||
        tok.size() > 9) {
        throw DataError(context + ": malformed PPM header field '" + tok + "'");
    }
    return static_cast<std::size_t>(std::stoul(tok));
}

FrameImage decode_ppm(std::string_view bytes, const std::string& context) {
    std::size_t pos = 0;
    if (ppm_token(bytes, pos, context) != "P6") {
        throw DataError(context + ": not a binary PPM (P6)");
    }
    const auto width = ppm_number(bytes, pos, context);
    const auto height = ppm_number(bytes, pos, context);
    const auto maxval = ppm_number(bytes, pos, context);
    if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        throw DataError(context + ": malformed PPM header");
    }
    ++pos;
    if (width != kFrameWidth || height != kFrameHeight) {
        throw DataError(dims_error(context, width, height));
    }
    if (maxval != 255) {
        throw DataError(context + ": PPM maxval " + std::to_string(maxval) + ", expected 255");
    }
    if (bytes.size() - pos != kFrameValues) {
        throw DataError(context + ": PPM payload size mismatch");
    }
    FrameImage frame;
    for (std::size_t i = 0; i < kFrameValues; ++i) {
        frame.pixels[i] = static_cast<float>(static_cast<unsigned char>(bytes[pos + i])) / 255.0f;
    }
    return frame;
}

FrameImage decode_frm(std::string_view bytes, const std::string& context) {
    ByteReader in(bytes, context);
    in.expect(kFrmMagic);
    const auto h = in.u32();
    const auto w = in.u32();
    const auto c = in.u32();
    if (h != kFrameHeight || w != kFrameWidth || c != kFrameChannels) {
        throw DataError(dims_error(context, w, h) + " with " + std::to_string(c) + " channels");
    }
    if (in.remaining() != kFrameValues * 4) {
        throw DataError(context + ": FRM1 payload size mismatch");
    }
    FrameImage frame;
    for (auto& p : frame.pixels) {
        p = in.f32();
        if (!(p >= 0.0f && p <= 1.0f)) {
            throw DataError(context + ": pixel value out of range [0, 1]");
        }
    }
    return frame;
}

}  // namespace

FrameImage decode_frame(std::string_view bytes, const std::string& context) {
    if (bytes.substr(0, kFrmMagic.size()) == kFrmMagic) {
        return decode_frm(bytes, context);
    }
    if (bytes.substr(0, 2) == "P6") {
        return decode_ppm(bytes, context);
    }
    throw DataError(context + ": unrecognized frame format (expected P6 PPM or FRM1)");
}

FrameImage load_frame(const std::filesystem::path& path) {
    return decode_frame(read_file(path), path.string());
}

std::string encode_ppm(const FrameImage& frame) {
    std::string out = "P6\n96 112\n255\n";
    out.reserve(out.size() + kFrameValues);
    for (float p : frame.pixels) {
        const auto q = std::clamp(std::lround(static_cast<double>(p) * 255.0), 0L, 255L);
        out.push_back(static_cast<char>(static_cast<unsigned char>(q)));
    }
    return out;
}

std::string encode_frm(const FrameImage& frame) {
    ByteWriter out;
    out.bytes(kFrmMagic);
    out.u32(kFrameHeight);
    out.u32(kFrameWidth);
    out.u32(kFrameChannels);
    for (float p : frame.pixels) out.f32(p);
    return out.take();
}

void save_ppm(const std::filesystem::path& path, const FrameImage& frame) {
    write_file_atomic(path, encode_ppm(frame));
}

void save_frm(const std::filesystem::path& path, const FrameImage& frame) {
    write_file_atomic(path, encode_frm(frame));
}

std::vector<std::size_t> sample_segments(std::size_t n_frames, std::size_t n_out, const SampleMode& mode) {
    if (n_frames < 1 || n_out < 1) {
        throw ConfigError("sample_segments: frame count and output count must be >= 1");
    }
    std::vector<std::size_t> indices(n_out);
    Rng rng(mode.seed());
    bool have_previous = false;
    std::size_t previous_last = 0;
    for (std::size_t i = 0; i < n_out; ++i) {
        const std::size_t lo = i * n_frames / n_out;
        const std::size_t end = (i + 1) * n_frames / n_out;
        if (end <= lo) {
            indices[i] = have_previous ? previous_last : 0;
            continue;
        }
        const std::size_t hi = end - 1;
        if (mode.is_train()) {
            indices[i] = static_cast<std::size_t>(
                rng.uniform_int(static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi)));
        } else {
            indices[i] = (lo + hi) / 2;
        }
        have_previous = true;
        previous_last = hi;
    }
    return indices;
}

std::vector<std::filesystem::path> list_frame_files(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw DataError("frames directory not found: " + dir.string());
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const auto ext = entry.path().extension();
        if (ext == ".ppm" || ext == ".frm") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end(),
              [](const auto& a, const auto& b) { return a.filename().string() < b.filename().string(); });
    return files;
}

ClipSample load_clip(const std::filesystem::path& frames_dir, std::size_t n_out, const SampleMode& mode) {
    const auto files = list_frame_files(frames_dir);
    if (files.empty()) {
        throw DataError("no frame files in " + frames_dir.string());
    }
    ClipSample clip;
    clip.source_indices = sample_segments(files.size(), n_out, mode);
    clip.frames.reserve(n_out);
    for (auto idx : clip.source_indices) {
        clip.frames.push_back(load_frame(files[idx]));
    }
    return clip;
}

}  // namespace avemo

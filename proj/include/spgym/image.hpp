#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace spgym {

/// Channel-last float image, values nominally in [0, 1].
struct Image {
  int height = 0;
  int width = 0;
  int channels = 3;
  std::vector<float> data;

  Image() = default;
  Image(int h, int w, int c = 3, float fill = 0.0f)
      : height(h), width(w), channels(c),
        data(static_cast<std::size_t>(h) * static_cast<std::size_t>(w) * static_cast<std::size_t>(c), fill) {}

  std::size_t index(int row, int col, int ch = 0) const {
    return (static_cast<std::size_t>(row) * static_cast<std::size_t>(width) + static_cast<std::size_t>(col)) *
               static_cast<std::size_t>(channels) +
           static_cast<std::size_t>(ch);
  }
  float& at(int row, int col, int ch) { return data[index(row, col, ch)]; }
  float at(int row, int col, int ch) const { return data[index(row, col, ch)]; }

  bool same_shape(const Image& other) const {
    return height == other.height && width == other.width && channels == other.channels;
  }

  friend bool operator==(const Image&, const Image&) = default;
};

/// Bilinear resampling with half-pixel centers: destination pixel (y, x) reads
/// source coordinate ((y + 0.5) * in_h / out_h - 0.5, likewise for x), clamped
/// to the edge. Interpolation runs in double and rounds once to float. Equal
/// sizes return the input unchanged.
Image resize_bilinear(const Image& src, int out_height, int out_width);

/// Copy of the rectangle [row0, row0 + h) x [col0, col0 + w).
Image crop_region(const Image& src, int row0, int col0, int h, int w);

/// Per-pixel 8-bit quantization used at every file boundary:
/// q = round(clamp(x, 0, 1) * 255).
std::uint8_t quantize_u8(float value);

/// The image as it reads back after an 8-bit round trip.
Image quantized(const Image& image);

// -- File I/O ---------------------------------------------------------------

/// Decodes a PNG or JPEG file (sniffed by signature) to RGB in [0, 1].
/// Gray, palette and alpha inputs are converted to 3-channel RGB.
/// Throws ConfigError if the file is missing or cannot be decoded.
Image read_image(const std::filesystem::path& path);

/// Writes an 8-bit RGB PNG. The encoder settings are fixed, so identical
/// images produce identical bytes.
void write_png(const std::filesystem::path& path, const Image& image);

/// Baseline JPEG writer (quality 95). Mostly used to build test fixtures.
void write_jpeg(const std::filesystem::path& path, const Image& image, int quality = 95);

/// In-memory PNG codec, used for piping renders through stdin/stdout.
std::vector<std::uint8_t> encode_png(const Image& image);
Image decode_png(std::span<const std::uint8_t> encoded);

bool has_image_extension(const std::filesystem::path& path);

// -- Raw tensor format --------------------------------------------------------
//
// 16-byte header: magic "SPGT", then H, W, C as uint32 little-endian, followed
// by H*W*C float32 little-endian values in channel-last order. Files may hold
// several records back to back.

inline constexpr char kRawTensorMagic[4] = {'S', 'P', 'G', 'T'};

struct RawTensor {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::uint32_t channels = 0;
  std::vector<float> data;
};

void write_raw_tensor(std::ostream& out, std::uint32_t height, std::uint32_t width,
                      std::uint32_t channels, std::span<const float> data);
/// Returns false at clean end of stream; throws ConfigError on a bad record.
bool read_raw_tensor(std::istream& in, RawTensor& tensor);

/// Appends `values` to `out` as little-endian float32.
void append_f32_le(std::vector<std::uint8_t>& out, std::span<const float> values);

}  // namespace spgym

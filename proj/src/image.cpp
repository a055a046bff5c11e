#include "spgym/image.hpp"

#include <png.h>
// jpeglib.h needs FILE and size_t declared first.
#include <cstdio>
#include <jpeglib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <string>

#include "spgym/errors.hpp"

namespace spgym {

Image resize_bilinear(const Image& src, int out_height, int out_width) {
  if (out_height <= 0 || out_width <= 0) throw DomainError("resize target must be positive");
  if (src.height == out_height && src.width == out_width) return src;
  Image out(out_height, out_width, src.channels);
  const double sy = static_cast<double>(src.height) / out_height;
  const double sx = static_cast<double>(src.width) / out_width;

  struct Tap {
    int lo, hi;
    double frac;
  };
  auto taps = [](int out_n, int in_n, double scale) {
    std::vector<Tap> result(static_cast<std::size_t>(out_n));
    for (int i = 0; i < out_n; ++i) {
      const double coord = std::clamp((i + 0.5) * scale - 0.5, 0.0, static_cast<double>(in_n - 1));
      const int lo = static_cast<int>(std::floor(coord));
      const int hi = std::min(lo + 1, in_n - 1);
      result[static_cast<std::size_t>(i)] = {lo, hi, coord - lo};
    }
    return result;
  };
  const auto ys = taps(out_height, src.height, sy);
  const auto xs = taps(out_width, src.width, sx);

  for (int y = 0; y < out_height; ++y) {
    const Tap& ty = ys[static_cast<std::size_t>(y)];
    for (int x = 0; x < out_width; ++x) {
      const Tap& tx = xs[static_cast<std::size_t>(x)];
      for (int c = 0; c < src.channels; ++c) {
        const double top = src.at(ty.lo, tx.lo, c) * (1.0 - tx.frac) + src.at(ty.lo, tx.hi, c) * tx.frac;
        const double bottom = src.at(ty.hi, tx.lo, c) * (1.0 - tx.frac) + src.at(ty.hi, tx.hi, c) * tx.frac;
        out.at(y, x, c) = static_cast<float>(top * (1.0 - ty.frac) + bottom * ty.frac);
      }
    }
  }
  return out;
}

Image crop_region(const Image& src, int row0, int col0, int h, int w) {
  if (row0 < 0 || col0 < 0 || h <= 0 || w <= 0 || row0 + h > src.height || col0 + w > src.width) {
    throw DomainError("crop region outside the image");
  }
  Image out(h, w, src.channels);
  const auto row_len = static_cast<std::size_t>(w) * static_cast<std::size_t>(src.channels);
  for (int r = 0; r < h; ++r) {
    std::copy_n(src.data.begin() + static_cast<std::ptrdiff_t>(src.index(row0 + r, col0)),
                row_len, out.data.begin() + static_cast<std::ptrdiff_t>(out.index(r, 0)));
  }
  return out;
}

std::uint8_t quantize_u8(float value) {
  const float clamped = std::clamp(value, 0.0f, 1.0f);
  return static_cast<std::uint8_t>(std::lround(clamped * 255.0f));
}

Image quantized(const Image& image) {
  Image out = image;
  for (float& v : out.data) v = static_cast<float>(quantize_u8(v)) / 255.0f;
  return out;
}

namespace {

std::vector<std::uint8_t> to_rgb8(const Image& image) {
  if (image.channels != 3) throw DomainError("only 3-channel images can be encoded");
  std::vector<std::uint8_t> bytes(image.data.size());
  std::transform(image.data.begin(), image.data.end(), bytes.begin(), quantize_u8);
  return bytes;
}

Image from_rgb8(int height, int width, const std::vector<std::uint8_t>& bytes) {
  Image out(height, width, 3);
  std::transform(bytes.begin(), bytes.end(), out.data.begin(),
                 [](std::uint8_t b) { return static_cast<float>(b) / 255.0f; });
  return out;
}

Image read_png(const std::filesystem::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw ConfigError("cannot decode PNG " + path.string() + ": " + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> bytes(PNG_IMAGE_SIZE(png));
  png_color background{0, 0, 0};
  if (!png_image_finish_read(&png, &background, bytes.data(), 0, nullptr)) {
    const std::string message = png.message;
    png_image_free(&png);
    throw ConfigError("cannot decode PNG " + path.string() + ": " + message);
  }
  return from_rgb8(static_cast<int>(png.height), static_cast<int>(png.width), bytes);
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// No C++ objects with non-trivial destructors may be created between setjmp
// and the last libjpeg call, so the decoder fills caller-owned storage.
bool decode_jpeg(std::FILE* file, JpegErrorManager& err, std::vector<std::uint8_t>& bytes,
                 int& height, int& width) {
  jpeg_decompress_struct cinfo;
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    return false;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, file);
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  height = static_cast<int>(cinfo.output_height);
  width = static_cast<int>(cinfo.output_width);
  bytes.resize(static_cast<std::size_t>(height) * static_cast<std::size_t>(width) * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = bytes.data() + static_cast<std::size_t>(cinfo.output_scanline) *
                                      static_cast<std::size_t>(width) * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return true;
}

Image read_jpeg(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw ConfigError("cannot open " + path.string());
  JpegErrorManager err{};
  std::vector<std::uint8_t> bytes;
  int height = 0;
  int width = 0;
  if (!decode_jpeg(file.get(), err, bytes, height, width)) {
    throw ConfigError("cannot decode JPEG " + path.string() + ": " + err.message);
  }
  return from_rgb8(height, width, bytes);
}

bool encode_jpeg(std::FILE* file, JpegErrorManager& err, const std::vector<std::uint8_t>& bytes,
                 int height, int width, int quality) {
  jpeg_compress_struct cinfo;
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  if (setjmp(err.jump)) {
    jpeg_destroy_compress(&cinfo);
    return false;
  }
  jpeg_create_compress(&cinfo);
  jpeg_stdio_dest(&cinfo, file);
  cinfo.image_width = static_cast<JDIMENSION>(width);
  cinfo.image_height = static_cast<JDIMENSION>(height);
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  while (cinfo.next_scanline < cinfo.image_height) {
    auto* row = const_cast<JSAMPLE*>(bytes.data() + static_cast<std::size_t>(cinfo.next_scanline) *
                                                        static_cast<std::size_t>(width) * 3);
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
  return true;
}

}  // namespace

Image read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open image " + path.string());
  std::array<unsigned char, 4> magic{};
  in.read(reinterpret_cast<char*>(magic.data()), magic.size());
  if (in.gcount() < 3) throw ConfigError("file too short to be an image: " + path.string());
  in.close();
  if (magic[0] == 0x89 && magic[1] == 'P' && magic[2] == 'N' && magic[3] == 'G') return read_png(path);
  if (magic[0] == 0xFF && magic[1] == 0xD8 && magic[2] == 0xFF) return read_jpeg(path);
  throw ConfigError("unrecognized image format: " + path.string());
}

void write_png(const std::filesystem::path& path, const Image& image) {
  const auto bytes = to_rgb8(image);
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&png, path.c_str(), 0, bytes.data(), 0, nullptr)) {
    throw ConfigError("cannot write PNG " + path.string() + ": " + png.message);
  }
}

void write_jpeg(const std::filesystem::path& path, const Image& image, int quality) {
  const auto bytes = to_rgb8(image);
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw ConfigError("cannot open " + path.string() + " for writing");
  JpegErrorManager err{};
  if (!encode_jpeg(file.get(), err, bytes, image.height, image.width, quality)) {
    throw ConfigError("cannot encode JPEG " + path.string() + ": " + err.message);
  }
}

std::vector<std::uint8_t> encode_png(const Image& image) {
  const auto bytes = to_rgb8(image);
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_get_memory_size(png, size, 0, bytes.data(), 0, nullptr)) {
    throw ConfigError(std::string("cannot encode PNG: ") + png.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, bytes.data(), 0, nullptr)) {
    throw ConfigError(std::string("cannot encode PNG: ") + png.message);
  }
  out.resize(size);
  return out;
}

Image decode_png(std::span<const std::uint8_t> encoded) {
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, encoded.data(), encoded.size())) {
    throw ConfigError(std::string("cannot decode PNG data: ") + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> bytes(PNG_IMAGE_SIZE(png));
  png_color background{0, 0, 0};
  if (!png_image_finish_read(&png, &background, bytes.data(), 0, nullptr)) {
    const std::string message = png.message;
    png_image_free(&png);
    throw ConfigError("cannot decode PNG data: " + message);
  }
  return from_rgb8(static_cast<int>(png.height), static_cast<int>(png.width), bytes);
}

bool has_image_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                         static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(bytes, 4);
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

void append_f32_le(std::vector<std::uint8_t>& out, std::span<const float> values) {
  out.reserve(out.size() + values.size() * 4);
  for (float v : values) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<std::uint8_t>(bits >> shift));
  }
}

void write_raw_tensor(std::ostream& out, std::uint32_t height, std::uint32_t width,
                      std::uint32_t channels, std::span<const float> data) {
  if (static_cast<std::size_t>(height) * width * channels != data.size()) {
    throw DomainError("raw tensor header does not match the data length");
  }
  out.write(kRawTensorMagic, 4);
  put_u32(out, height);
  put_u32(out, width);
  put_u32(out, channels);
  std::vector<std::uint8_t> bytes;
  append_f32_le(bytes, data);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

bool read_raw_tensor(std::istream& in, RawTensor& tensor) {
  unsigned char header[16];
  in.read(reinterpret_cast<char*>(header), 16);
  if (in.gcount() == 0) return false;
  if (in.gcount() != 16 || std::memcmp(header, kRawTensorMagic, 4) != 0) {
    throw ConfigError("bad raw tensor header");
  }
  tensor.height = get_u32(header + 4);
  tensor.width = get_u32(header + 8);
  tensor.channels = get_u32(header + 12);
  const std::size_t count = static_cast<std::size_t>(tensor.height) * tensor.width * tensor.channels;
  std::vector<unsigned char> bytes(count * 4);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(in.gcount()) != bytes.size()) throw ConfigError("truncated raw tensor");
  tensor.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) tensor.data[i] = std::bit_cast<float>(get_u32(&bytes[4 * i]));
  return true;
}

}  // namespace spgym

#include "spgym/augment.hpp"

#include <algorithm>
#include <cmath>

#include "spgym/errors.hpp"

namespace spgym {

namespace {

constexpr std::array<std::array<int, 3>, 6> kChannelPermutations = {{
    {0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0},
}};

double draw(const Range& range, RandomSource& rng) {
  return range.lo + (range.hi - range.lo) * rng.uniform01();
}

float clamp01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

void require_rgb(const Image& img) {
  if (img.channels != 3) throw DomainError("augmentations expect 3-channel images");
}

int resolve_crop_side(int crop_side, int image_side) {
  return crop_side > 0 ? crop_side : std::max(1, image_side * 84 / 100);
}

// Hue rotation through HSV; `turn` is a fraction of a full rotation.
void rotate_hue(float& r, float& g, float& b, double turn) {
  const double rd = r, gd = g, bd = b;
  const double mx = std::max({rd, gd, bd});
  const double mn = std::min({rd, gd, bd});
  const double delta = mx - mn;
  if (delta <= 0.0) return;  // gray pixels have no hue
  double h;
  if (mx == rd) {
    h = std::fmod((gd - bd) / delta, 6.0);
  } else if (mx == gd) {
    h = (bd - rd) / delta + 2.0;
  } else {
    h = (rd - gd) / delta + 4.0;
  }
  h = h / 6.0 + turn;
  h -= std::floor(h);
  const double s = delta / mx;
  const double v = mx;

  const double h6 = h * 6.0;
  const int sector = static_cast<int>(std::floor(h6)) % 6;
  const double f = h6 - std::floor(h6);
  const double p = v * (1.0 - s);
  const double q = v * (1.0 - s * f);
  const double t = v * (1.0 - s * (1.0 - f));
  double nr, ng, nb;
  switch (sector) {
    case 0: nr = v; ng = t; nb = p; break;
    case 1: nr = q; ng = v; nb = p; break;
    case 2: nr = p; ng = v; nb = t; break;
    case 3: nr = p; ng = q; nb = v; break;
    case 4: nr = t; ng = p; nb = v; break;
    default: nr = v; ng = p; nb = q; break;
  }
  r = clamp01(nr);
  g = clamp01(ng);
  b = clamp01(nb);
}

}  // namespace

std::string_view augment_name(AugmentKind kind) {
  switch (kind) {
    case AugmentKind::kCrop: return "crop";
    case AugmentKind::kGrayscale: return "grayscale";
    case AugmentKind::kChannelShuffle: return "channel_shuffle";
    case AugmentKind::kShift: return "shift";
    case AugmentKind::kInversion: return "inversion";
    case AugmentKind::kColorJitter: return "color_jitter";
    case AugmentKind::kPipeline: return "pipeline";
  }
  return "?";
}

AugmentKind parse_augment_kind(std::string_view name) {
  for (AugmentKind kind : kSingleAugmentations) {
    if (augment_name(kind) == name) return kind;
  }
  if (name == "pipeline" || name == "standard") return AugmentKind::kPipeline;
  throw ConfigError("unknown augmentation '" + std::string(name) +
                    "' (expected crop, grayscale, channel_shuffle, shift, inversion, "
                    "color_jitter or pipeline)");
}

AugmentSpec AugmentSpec::of(AugmentKind kind) {
  AugmentSpec spec;
  spec.kind = kind;
  spec.grayscale_probability = kind == AugmentKind::kGrayscale ? 1.0 : 0.2;
  return spec;
}

void AugmentSpec::validate(int image_side) const {
  if (grayscale_probability < 0.0 || grayscale_probability > 1.0) {
    throw ConfigError("grayscale probability must lie in [0, 1]");
  }
  if (kind == AugmentKind::kCrop && resolve_crop_side(crop_side, image_side) > image_side) {
    throw ConfigError("crop side " + std::to_string(crop_side) + " exceeds image side " +
                      std::to_string(image_side));
  }
  if (kind == AugmentKind::kShift && (shift_max_offset < 0 || shift_max_offset >= image_side)) {
    throw ConfigError("shift max offset must lie in [0, image side)");
  }
  for (const Range* r : {&jitter.brightness, &jitter.contrast, &jitter.saturation, &jitter.hue}) {
    if (r->lo > r->hi) throw ConfigError("color jitter range has lo > hi");
  }
}

std::vector<AugmentSpec> parse_augment_list(std::string_view text) {
  std::vector<AugmentSpec> specs;
  while (!text.empty()) {
    const auto comma = text.find(',');
    auto token = text.substr(0, comma);
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
    if (!token.empty() && token != "none") {
      specs.push_back(AugmentSpec::of(parse_augment_kind(token)));
    }
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return specs;
}

std::string augment_list_string(const std::vector<AugmentSpec>& specs) {
  std::string out;
  for (const auto& spec : specs) {
    if (!out.empty()) out += ',';
    out += augment_name(spec.kind);
  }
  return out.empty() ? "none" : out;
}

Image grayscale(const Image& img, double probability, RandomSource& rng) {
  require_rgb(img);
  if (!(rng.uniform01() < probability)) return img;
  Image out = img;
  for (std::size_t i = 0; i < out.data.size(); i += 3) {
    // Double accumulation keeps equal channels exact, so the op is idempotent.
    const double sum = static_cast<double>(img.data[i]) + img.data[i + 1] + img.data[i + 2];
    const auto mean = static_cast<float>(sum / 3.0);
    out.data[i] = out.data[i + 1] = out.data[i + 2] = mean;
  }
  return out;
}

Image channel_shuffle(const Image& img, RandomSource& rng, int& permutation_index) {
  require_rgb(img);
  permutation_index = static_cast<int>(rng.uniform_below(kChannelPermutations.size()));
  const auto& perm = kChannelPermutations[static_cast<std::size_t>(permutation_index)];
  Image out = img;
  for (std::size_t i = 0; i < out.data.size(); i += 3) {
    for (std::size_t c = 0; c < 3; ++c) out.data[i + c] = img.data[i + static_cast<std::size_t>(perm[c])];
  }
  return out;
}

Image channel_shuffle(const Image& img, RandomSource& rng) {
  int unused = 0;
  return channel_shuffle(img, rng, unused);
}

Image crop(const Image& img, int out_side, RandomSource& rng) {
  const int side = std::min(img.height, img.width);
  if (out_side < 1 || out_side > side) {
    throw DomainError("crop side " + std::to_string(out_side) + " must lie in [1, " +
                      std::to_string(side) + "]");
  }
  const int row0 = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(img.height - out_side) + 1));
  const int col0 = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(img.width - out_side) + 1));
  return resize_bilinear(crop_region(img, row0, col0, out_side, out_side), img.height, img.width);
}

Image shift_by(const Image& img, int dx, int dy) {
  Image out(img.height, img.width, img.channels);
  for (int r = 0; r < img.height; ++r) {
    const int sr = std::clamp(r - dy, 0, img.height - 1);
    for (int c = 0; c < img.width; ++c) {
      const int sc = std::clamp(c - dx, 0, img.width - 1);
      for (int ch = 0; ch < img.channels; ++ch) out.at(r, c, ch) = img.at(sr, sc, ch);
    }
  }
  return out;
}

Image shift(const Image& img, int max_offset, RandomSource& rng) {
  if (max_offset < 0) throw DomainError("shift max offset must be non-negative");
  const int dx = static_cast<int>(rng.uniform_int(-max_offset, max_offset));
  const int dy = static_cast<int>(rng.uniform_int(-max_offset, max_offset));
  if (dx == 0 && dy == 0) return img;
  return shift_by(img, dx, dy);
}

Image invert(const Image& img) {
  Image out = img;
  for (float& v : out.data) v = 1.0f - v;
  return out;
}

Image color_jitter(const Image& img, const JitterRanges& ranges, RandomSource& rng) {
  require_rgb(img);
  // All four factors are drawn up front so stream consumption is fixed.
  const double brightness = draw(ranges.brightness, rng);
  const double contrast = draw(ranges.contrast, rng);
  const double saturation = draw(ranges.saturation, rng);
  const double hue = draw(ranges.hue, rng);

  Image out = img;
  auto& d = out.data;
  if (brightness != 1.0) {
    for (float& v : d) v = clamp01(v * brightness);
  }
  if (contrast != 1.0) {
    double total = 0.0;
    for (float v : d) total += v;
    const double mean = d.empty() ? 0.0 : total / static_cast<double>(d.size());
    for (float& v : d) v = clamp01((v - mean) * contrast + mean);
  }
  if (saturation != 1.0) {
    for (std::size_t i = 0; i < d.size(); i += 3) {
      const double gray = (static_cast<double>(d[i]) + d[i + 1] + d[i + 2]) / 3.0;
      for (std::size_t c = 0; c < 3; ++c) d[i + c] = clamp01((d[i + c] - gray) * saturation + gray);
    }
  }
  if (hue != 0.0) {
    for (std::size_t i = 0; i < d.size(); i += 3) rotate_hue(d[i], d[i + 1], d[i + 2], hue);
  }
  return out;
}

Image standard_pipeline(const Image& img, RandomSource& rng) {
  return channel_shuffle(grayscale(img, 0.2, rng), rng);
}

Image apply_augment(const Image& img, const AugmentSpec& spec, RandomSource& rng) {
  switch (spec.kind) {
    case AugmentKind::kCrop:
      return crop(img, resolve_crop_side(spec.crop_side, std::min(img.height, img.width)), rng);
    case AugmentKind::kGrayscale:
      return grayscale(img, spec.grayscale_probability, rng);
    case AugmentKind::kChannelShuffle:
      return channel_shuffle(img, rng);
    case AugmentKind::kShift:
      return shift(img, spec.shift_max_offset, rng);
    case AugmentKind::kInversion:
      return invert(img);
    case AugmentKind::kColorJitter:
      return color_jitter(img, spec.jitter, rng);
    case AugmentKind::kPipeline:
      return channel_shuffle(grayscale(img, spec.grayscale_probability, rng), rng);
  }
  return img;
}

Image apply_augments(const Image& img, const std::vector<AugmentSpec>& specs, RandomSource& rng) {
  Image out = img;
  for (const auto& spec : specs) out = apply_augment(out, spec, rng);
  return out;
}

}  // namespace spgym

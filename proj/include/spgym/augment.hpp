#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "spgym/image.hpp"
#include "spgym/random.hpp"

namespace spgym {

enum class AugmentKind {
  kCrop,
  kGrayscale,
  kChannelShuffle,
  kShift,
  kInversion,
  kColorJitter,
  kPipeline,  // grayscale (p = 0.2) followed by channel shuffle
};

std::string_view augment_name(AugmentKind kind);
AugmentKind parse_augment_kind(std::string_view name);

/// The six single augmentations in their canonical order.
inline constexpr std::array<AugmentKind, 6> kSingleAugmentations = {
    AugmentKind::kCrop,      AugmentKind::kGrayscale, AugmentKind::kChannelShuffle,
    AugmentKind::kShift,     AugmentKind::kInversion, AugmentKind::kColorJitter};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct JitterRanges {
  Range brightness{0.8, 1.2};
  Range contrast{0.8, 1.2};
  Range saturation{0.8, 1.2};
  Range hue{-0.05, 0.05};  // fraction of a full hue turn

  static JitterRanges identity() { return {{1, 1}, {1, 1}, {1, 1}, {0, 0}}; }
};

struct AugmentSpec {
  /// Defaults for `kind`: a standalone grayscale always fires, the pipeline's
  /// grayscale step fires with probability 0.2.
  static AugmentSpec of(AugmentKind kind);

  AugmentKind kind = AugmentKind::kPipeline;
  /// Crop window side; 0 picks floor(0.84 * side), the 84-of-100 ratio.
  int crop_side = 0;
  double grayscale_probability = 0.2;
  int shift_max_offset = 4;
  JitterRanges jitter{};

  /// Throws ConfigError when a parameter is out of range for `image_side`.
  void validate(int image_side) const;
};

/// Parses a comma-separated list such as "grayscale,channel_shuffle".
std::vector<AugmentSpec> parse_augment_list(std::string_view text);
std::string augment_list_string(const std::vector<AugmentSpec>& specs);

Image grayscale(const Image& img, double probability, RandomSource& rng);
Image channel_shuffle(const Image& img, RandomSource& rng);
/// Same, with the permutation index (0..5) reported; index 0 is identity.
Image channel_shuffle(const Image& img, RandomSource& rng, int& permutation_index);
Image crop(const Image& img, int out_side, RandomSource& rng);
Image shift(const Image& img, int max_offset, RandomSource& rng);
/// Translation by (dx, dy) with edge replication for vacated pixels.
Image shift_by(const Image& img, int dx, int dy);
Image invert(const Image& img);
Image color_jitter(const Image& img, const JitterRanges& ranges, RandomSource& rng);
Image standard_pipeline(const Image& img, RandomSource& rng);

Image apply_augment(const Image& img, const AugmentSpec& spec, RandomSource& rng);
Image apply_augments(const Image& img, const std::vector<AugmentSpec>& specs, RandomSource& rng);

}  // namespace spgym

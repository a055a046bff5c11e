#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spgym/image.hpp"
#include "spgym/puzzle.hpp"
#include "spgym/random.hpp"

namespace spgym {

enum class Modality { kImage, kOneHot, kState };

std::string_view modality_name(Modality modality);
Modality parse_modality(std::string_view name);

/// What the blank cell shows in an image observation.
enum class BlankFill { kBlack, kSourcePatch, kNoise };

std::string_view blank_fill_name(BlankFill fill);
BlankFill parse_blank_fill(std::string_view name);

inline constexpr int kDefaultRenderSize = 84;
inline constexpr int kCropRenderSize = 100;

struct ObsSpec {
  Modality modality = Modality::kImage;
  int render_size = kDefaultRenderSize;
  BlankFill blank_fill = BlankFill::kBlack;
  /// Seeds the noise texture when blank_fill is kNoise.
  std::uint64_t noise_seed = 0;
};

/// Flat float tensor plus shape. Images are {S, S, 3} channel-last, one-hot
/// observations {N, N} with N = H*W, state vectors {N}.
struct Observation {
  Modality modality = Modality::kImage;
  std::vector<int> shape;
  std::vector<float> data;

  static Observation from_image(Image image);
  Image to_image() const;

  /// Little-endian float32 bytes of `data`.
  std::vector<std::uint8_t> to_le_bytes() const;

  friend bool operator==(const Observation&, const Observation&) = default;
};

struct ImagePool {
  std::vector<Image> images;
  std::vector<std::string> source_ids;
  /// Files that failed to decode and were replaced from the shuffled listing.
  std::vector<std::string> skipped;
  std::uint64_t pool_seed = 0;
  int render_size = kDefaultRenderSize;

  std::size_t size() const { return images.size(); }
};

/// Lists decodable-looking files (.png/.jpg/.jpeg) under `dir`, sorted by name.
std::vector<std::filesystem::path> list_image_files(const std::filesystem::path& dir);

/// Shuffles the sorted listing with `pool_seed` and takes the first `p` files
/// that decode, resizing each to render_size x render_size.
ImagePool load_pool(const std::filesystem::path& dataset_dir, int p, int render_size,
                    std::uint64_t pool_seed);

/// Pool built from in-memory images (resized to render_size if needed).
ImagePool make_pool(std::vector<Image> images, std::vector<std::string> source_ids,
                    int render_size, std::uint64_t pool_seed = 0);

/// Text manifest: a "# spgym-pool v1 seed=<s> render_size=<n> size=<p>" header,
/// then one source id per line.
void write_pool_manifest(const std::filesystem::path& path, const ImagePool& pool);
std::vector<std::string> read_pool_manifest(const std::filesystem::path& path);

std::size_t select_episode_image(const ImagePool& pool, RandomSource& rng);

struct PatchRect {
  int row0 = 0;
  int col0 = 0;
  int height = 0;
  int width = 0;
  friend bool operator==(const PatchRect&, const PatchRect&) = default;
};

/// Cell (r, c) covers rows [ceil(r*S/H), ceil((r+1)*S/H)) and the matching
/// column range, so rectangles tile the image exactly. 100 px over 3 cells
/// gives 34, 33, 33.
std::vector<PatchRect> patch_rects(int image_height, int image_width, GridDims dims);

std::vector<Image> partition_patches(const Image& image, GridDims dims);

/// Cell (r, c) shows the source patch from goal_position(tiles[r*W + c]); the
/// blank's cell is filled per `fill`. When cell and patch sizes differ
/// (non-divisible grids) the patch is resampled nearest-neighbour.
Image render_image_obs(const PuzzleState& state, const Image& image,
                       BlankFill fill = BlankFill::kBlack, std::uint64_t noise_seed = 0);

/// (H*W) x (H*W) permutation matrix with M[c][tiles[c]] = 1.
Observation render_onehot_obs(const PuzzleState& state);

/// Tile ids divided by H*W - 1.
Observation render_state_obs(const PuzzleState& state);

/// Row-wise argmax of a one-hot observation. Throws DomainError if the result
/// is not a permutation.
PuzzleState decode_onehot(const Observation& onehot, GridDims dims);

/// Dispatch on spec.modality; `image` may be null for non-image modalities.
Observation render_observation(const PuzzleState& state, const ObsSpec& spec, const Image* image);

}  // namespace spgym

#include "spgym/observation.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "spgym/errors.hpp"

namespace spgym {

std::string_view modality_name(Modality modality) {
  switch (modality) {
    case Modality::kImage: return "image";
    case Modality::kOneHot: return "onehot";
    case Modality::kState: return "state";
  }
  return "?";
}

Modality parse_modality(std::string_view name) {
  if (name == "image") return Modality::kImage;
  if (name == "onehot" || name == "one_hot") return Modality::kOneHot;
  if (name == "state") return Modality::kState;
  throw ConfigError("unknown modality '" + std::string(name) + "' (expected image, onehot or state)");
}

std::string_view blank_fill_name(BlankFill fill) {
  switch (fill) {
    case BlankFill::kBlack: return "black";
    case BlankFill::kSourcePatch: return "source";
    case BlankFill::kNoise: return "noise";
  }
  return "?";
}

BlankFill parse_blank_fill(std::string_view name) {
  if (name == "black") return BlankFill::kBlack;
  if (name == "source") return BlankFill::kSourcePatch;
  if (name == "noise") return BlankFill::kNoise;
  throw ConfigError("unknown blank fill '" + std::string(name) + "' (expected black, source or noise)");
}

Observation Observation::from_image(Image image) {
  Observation obs;
  obs.modality = Modality::kImage;
  obs.shape = {image.height, image.width, image.channels};
  obs.data = std::move(image.data);
  return obs;
}

Image Observation::to_image() const {
  if (modality != Modality::kImage || shape.size() != 3) {
    throw DomainError("observation is not an image");
  }
  Image image;
  image.height = shape[0];
  image.width = shape[1];
  image.channels = shape[2];
  image.data = data;
  return image;
}

std::vector<std::uint8_t> Observation::to_le_bytes() const {
  std::vector<std::uint8_t> out;
  append_f32_le(out, data);
  return out;
}

std::vector<std::filesystem::path> list_image_files(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw ConfigError("dataset directory does not exist: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && has_image_extension(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const auto& a, const auto& b) { return a.filename().string() < b.filename().string(); });
  return files;
}

ImagePool load_pool(const std::filesystem::path& dataset_dir, int p, int render_size,
                    std::uint64_t pool_seed) {
  if (p < 1) throw ConfigError("pool_size must be at least 1");
  if (render_size < 2) throw ConfigError("render_size must be at least 2");
  auto files = list_image_files(dataset_dir);
  if (files.size() < static_cast<std::size_t>(p)) {
    throw ConfigError("dataset " + dataset_dir.string() + " has " + std::to_string(files.size()) +
                      " image files, fewer than pool_size " + std::to_string(p));
  }
  RandomSource rng(pool_seed);
  for (std::size_t i = files.size() - 1; i > 0; --i) {
    std::swap(files[i], files[rng.uniform_below(i + 1)]);
  }

  ImagePool pool;
  pool.pool_seed = pool_seed;
  pool.render_size = render_size;
  for (const auto& file : files) {
    if (pool.images.size() == static_cast<std::size_t>(p)) break;
    Image decoded;
    try {
      decoded = read_image(file);
    } catch (const ConfigError&) {
      pool.skipped.push_back(file.filename().string());
      continue;
    }
    pool.images.push_back(resize_bilinear(decoded, render_size, render_size));
    pool.source_ids.push_back(file.filename().string());
  }
  if (pool.images.size() < static_cast<std::size_t>(p)) {
    throw ConfigError("only " + std::to_string(pool.images.size()) + " decodable images in " +
                      dataset_dir.string() + ", need " + std::to_string(p));
  }
  return pool;
}

ImagePool make_pool(std::vector<Image> images, std::vector<std::string> source_ids, int render_size,
                    std::uint64_t pool_seed) {
  if (images.empty()) throw ConfigError("image pool must not be empty");
  if (images.size() != source_ids.size()) throw ConfigError("one source id per image required");
  ImagePool pool;
  pool.pool_seed = pool_seed;
  pool.render_size = render_size;
  for (auto& image : images) {
    if (image.channels != 3) throw ConfigError("pool images must be RGB");
    pool.images.push_back(resize_bilinear(image, render_size, render_size));
  }
  pool.source_ids = std::move(source_ids);
  return pool;
}

void write_pool_manifest(const std::filesystem::path& path, const ImagePool& pool) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "# spgym-pool v1 seed=" << pool.pool_seed << " render_size=" << pool.render_size
      << " size=" << pool.size() << "\n";
  for (const auto& id : pool.source_ids) out << id << "\n";
  for (const auto& id : pool.skipped) out << "# skipped " << id << "\n";
}

std::vector<std::string> read_pool_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    ids.push_back(line);
  }
  return ids;
}

std::size_t select_episode_image(const ImagePool& pool, RandomSource& rng) {
  if (pool.images.empty()) throw DomainError("cannot select from an empty pool");
  return static_cast<std::size_t>(rng.uniform_below(pool.images.size()));
}

std::vector<PatchRect> patch_rects(int image_height, int image_width, GridDims dims) {
  if (image_height < dims.height || image_width < dims.width) {
    throw DomainError("image " + std::to_string(image_height) + "x" + std::to_string(image_width) +
                      " is smaller than the " + dims.to_string() + " grid");
  }
  // ceil(k * size / n): leftover pixels go to the leading patches.
  auto edge = [](int k, int size, int n) { return (k * size + n - 1) / n; };
  std::vector<PatchRect> rects;
  rects.reserve(static_cast<std::size_t>(dims.cells()));
  for (int r = 0; r < dims.height; ++r) {
    const int r0 = edge(r, image_height, dims.height);
    const int r1 = edge(r + 1, image_height, dims.height);
    for (int c = 0; c < dims.width; ++c) {
      const int c0 = edge(c, image_width, dims.width);
      const int c1 = edge(c + 1, image_width, dims.width);
      rects.push_back({r0, c0, r1 - r0, c1 - c0});
    }
  }
  return rects;
}

std::vector<Image> partition_patches(const Image& image, GridDims dims) {
  std::vector<Image> patches;
  for (const auto& rect : patch_rects(image.height, image.width, dims)) {
    patches.push_back(crop_region(image, rect.row0, rect.col0, rect.height, rect.width));
  }
  return patches;
}

Image render_image_obs(const PuzzleState& state, const Image& image, BlankFill fill,
                       std::uint64_t noise_seed) {
  const GridDims dims = state.dims();
  const auto rects = patch_rects(image.height, image.width, dims);
  Image out(image.height, image.width, image.channels, 0.0f);
  RandomSource noise(noise_seed);
  for (int cell = 0; cell < dims.cells(); ++cell) {
    const PatchRect& dst = rects[static_cast<std::size_t>(cell)];
    const int tile = state.tile_at(cell);
    if (tile == 0 && fill != BlankFill::kSourcePatch) {
      if (fill == BlankFill::kNoise) {
        for (int r = 0; r < dst.height; ++r) {
          for (int c = 0; c < dst.width; ++c) {
            for (int ch = 0; ch < image.channels; ++ch) out.at(dst.row0 + r, dst.col0 + c, ch) = noise.uniform_float();
          }
        }
      }
      continue;
    }
    const Cell goal = goal_position(tile, dims);
    const PatchRect& src = rects[static_cast<std::size_t>(goal.row * dims.width + goal.col)];
    for (int r = 0; r < dst.height; ++r) {
      const int sr = src.row0 + r * src.height / dst.height;
      for (int c = 0; c < dst.width; ++c) {
        const int sc = src.col0 + c * src.width / dst.width;
        for (int ch = 0; ch < image.channels; ++ch) {
          out.at(dst.row0 + r, dst.col0 + c, ch) = image.at(sr, sc, ch);
        }
      }
    }
  }
  return out;
}

Observation render_onehot_obs(const PuzzleState& state) {
  const int n = state.dims().cells();
  Observation obs;
  obs.modality = Modality::kOneHot;
  obs.shape = {n, n};
  obs.data.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0f);
  for (int c = 0; c < n; ++c) {
    obs.data[static_cast<std::size_t>(c * n + state.tile_at(c))] = 1.0f;
  }
  return obs;
}

Observation render_state_obs(const PuzzleState& state) {
  const int n = state.dims().cells();
  Observation obs;
  obs.modality = Modality::kState;
  obs.shape = {n};
  obs.data.reserve(static_cast<std::size_t>(n));
  for (int c = 0; c < n; ++c) {
    obs.data.push_back(static_cast<float>(state.tile_at(c)) / static_cast<float>(n - 1));
  }
  return obs;
}

PuzzleState decode_onehot(const Observation& onehot, GridDims dims) {
  const int n = dims.cells();
  if (onehot.shape != std::vector<int>{n, n}) throw DomainError("one-hot shape does not match grid");
  std::vector<TileId> tiles(static_cast<std::size_t>(n));
  for (int c = 0; c < n; ++c) {
    const auto row = onehot.data.begin() + static_cast<std::ptrdiff_t>(c * n);
    tiles[static_cast<std::size_t>(c)] = static_cast<TileId>(std::max_element(row, row + n) - row);
  }
  return PuzzleState::from_tiles(dims, std::move(tiles));
}

Observation render_observation(const PuzzleState& state, const ObsSpec& spec, const Image* image) {
  switch (spec.modality) {
    case Modality::kImage:
      if (image == nullptr) throw ConfigError("image modality requires an image pool");
      return Observation::from_image(render_image_obs(state, *image, spec.blank_fill, spec.noise_seed));
    case Modality::kOneHot:
      return render_onehot_obs(state);
    case Modality::kState:
      return render_state_obs(state);
  }
  throw DomainError("unknown modality");
}

}  // namespace spgym

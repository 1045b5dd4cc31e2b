#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gecco/tensor.hpp"

namespace gecco {

// Grayscale dataset in memory. Pixels live in [0,1]; labels index
// class_names.
struct Dataset {
  std::vector<Tensor2D> images;
  std::vector<int> labels;
  std::vector<std::string> class_names;

  std::size_t size() const { return images.size(); }
};

struct Batch {
  Tensor2D x;  // B x (H*W)
  std::vector<int> labels;
};

// IDX container (big-endian magic + dims, then raw unsigned bytes).
// Pixels are scaled by 1/255. Throws DataError on bad magic, truncation,
// zero count or image/label count mismatch.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

void save_idx(const Dataset& data, const std::string& images_path,
              const std::string& labels_path);

// Directory of class subdirectories holding binary PGM (P5, maxval <= 255)
// files. Class index is the lexicographic rank of the subdirectory name.
// When resize_to is empty, all images must share one size.
Dataset load_pgm_dir(const std::string& root_path,
                     std::optional<std::pair<int, int>> resize_to = std::nullopt);

void save_pgm(const Tensor2D& image, const std::string& path);

// Bilinear resample with half-pixel centers. Output values stay inside the
// input's [min, max].
Tensor2D resize_bilinear(const Tensor2D& image, int out_h, int out_w);
Tensor2D resize_nearest(const Tensor2D& image, int out_h, int out_w);

// Splits the dataset into vectorized batches. A seed engages a Fisher-Yates
// shuffle; drop_last discards the ragged tail.
std::vector<Batch> batches(const Dataset& data, int batch_size,
                           std::optional<std::uint64_t> shuffle_seed, bool drop_last);

}  // namespace gecco

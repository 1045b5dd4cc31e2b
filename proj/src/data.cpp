#include "gecco/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "gecco/model.hpp"
#include "gecco/rng.hpp"

namespace fs = std::filesystem;

namespace gecco {

namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

std::uint32_t read_be32(std::istream& in, const std::string& path) {
  unsigned char buf[4];
  if (!in.read(reinterpret_cast<char*>(buf), 4)) {
    throw DataError("IDX file truncated: " + path);
  }
  return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
         (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

void write_be32(std::ostream& out, std::uint32_t v) {
  const unsigned char buf[4] = {static_cast<unsigned char>(v >> 24),
                                static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(buf), 4);
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw DataError("cannot open IDX image file: " + images_path);
  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw DataError("cannot open IDX label file: " + labels_path);

  const std::uint32_t img_magic = read_be32(img, images_path);
  if (img_magic != kIdxImagesMagic) {
    std::ostringstream os;
    os << "bad IDX image magic 0x" << std::hex << img_magic << " in " << images_path;
    throw DataError(os.str());
  }
  const std::uint32_t n = read_be32(img, images_path);
  const std::uint32_t h = read_be32(img, images_path);
  const std::uint32_t w = read_be32(img, images_path);
  if (n == 0) throw DataError("IDX image file declares zero images: " + images_path);
  if (h == 0 || w == 0) throw DataError("IDX image file declares empty images: " + images_path);

  const std::uint32_t lab_magic = read_be32(lab, labels_path);
  if (lab_magic != kIdxLabelsMagic) {
    std::ostringstream os;
    os << "bad IDX label magic 0x" << std::hex << lab_magic << " in " << labels_path;
    throw DataError(os.str());
  }
  const std::uint32_t n_labels = read_be32(lab, labels_path);
  if (n_labels != n) {
    std::ostringstream os;
    os << "IDX count mismatch: " << n << " images vs " << n_labels << " labels";
    throw DataError(os.str());
  }

  Dataset data;
  data.images.reserve(n);
  data.labels.reserve(n);
  std::vector<unsigned char> pix(static_cast<std::size_t>(h) * w);
  int max_label = 0;
  for (std::uint32_t i = 0; i < n; ++i) {
    if (!img.read(reinterpret_cast<char*>(pix.data()), static_cast<std::streamsize>(pix.size()))) {
      throw DataError("IDX image file truncated: " + images_path);
    }
    Tensor2D t(static_cast<int>(h), static_cast<int>(w));
    for (std::size_t p = 0; p < pix.size(); ++p) {
      t.data()[p] = static_cast<real>(pix[p]) / real(255);
    }
    data.images.push_back(std::move(t));
    char lb;
    if (!lab.read(&lb, 1)) throw DataError("IDX label file truncated: " + labels_path);
    const int y = static_cast<unsigned char>(lb);
    max_label = std::max(max_label, y);
    data.labels.push_back(y);
  }
  data.class_names.resize(static_cast<std::size_t>(max_label) + 1);
  for (std::size_t c = 0; c < data.class_names.size(); ++c) {
    data.class_names[c] = std::to_string(c);
  }
  return data;
}

void save_idx(const Dataset& data, const std::string& images_path,
              const std::string& labels_path) {
  if (data.size() == 0) throw DataError("save_idx: empty dataset");
  const int h = data.images.front().rows();
  const int w = data.images.front().cols();
  std::ofstream img(images_path, std::ios::binary);
  if (!img) throw DataError("cannot write IDX image file: " + images_path);
  std::ofstream lab(labels_path, std::ios::binary);
  if (!lab) throw DataError("cannot write IDX label file: " + labels_path);

  write_be32(img, kIdxImagesMagic);
  write_be32(img, static_cast<std::uint32_t>(data.size()));
  write_be32(img, static_cast<std::uint32_t>(h));
  write_be32(img, static_cast<std::uint32_t>(w));
  write_be32(lab, kIdxLabelsMagic);
  write_be32(lab, static_cast<std::uint32_t>(data.size()));

  std::vector<unsigned char> pix(static_cast<std::size_t>(h) * w);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Tensor2D& t = data.images[i];
    if (t.rows() != h || t.cols() != w) throw DataError("save_idx: inconsistent image sizes");
    for (std::size_t p = 0; p < pix.size(); ++p) {
      const real v = std::clamp(t.data()[p], real(0), real(1));
      pix[p] = static_cast<unsigned char>(std::lround(v * real(255)));
    }
    img.write(reinterpret_cast<const char*>(pix.data()), static_cast<std::streamsize>(pix.size()));
    lab.put(static_cast<char>(data.labels[i]));
  }
}

namespace {

// Reads one PGM header token, skipping whitespace and '#' comments.
std::string pgm_token(std::istream& in, const std::string& path) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  if (tok.empty()) throw DataError("PGM header truncated: " + path);
  return tok;
}

Tensor2D load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open PGM file: " + path);
  char m0 = 0, m1 = 0;
  in.get(m0).get(m1);
  if (m0 != 'P' || m1 != '5') {
    throw DataError("not a binary P5 PGM file: " + path);
  }
  const int w = std::stoi(pgm_token(in, path));
  const int h = std::stoi(pgm_token(in, path));
  const int maxval = std::stoi(pgm_token(in, path));
  if (w < 1 || h < 1) throw DataError("PGM declares empty image: " + path);
  if (maxval < 1 || maxval > 255) {
    std::ostringstream os;
    os << "PGM maxval " << maxval << " unsupported (need <= 255): " << path;
    throw DataError(os.str());
  }
  std::vector<unsigned char> pix(static_cast<std::size_t>(w) * h);
  if (!in.read(reinterpret_cast<char*>(pix.data()), static_cast<std::streamsize>(pix.size()))) {
    throw DataError("PGM pixel data truncated: " + path);
  }
  Tensor2D t(h, w);
  for (std::size_t p = 0; p < pix.size(); ++p) {
    t.data()[p] = static_cast<real>(pix[p]) / static_cast<real>(maxval);
  }
  return t;
}

}  // namespace

void save_pgm(const Tensor2D& image, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write PGM file: " + path);
  out << "P5\n" << image.cols() << " " << image.rows() << "\n255\n";
  for (real v : image.data()) {
    out.put(static_cast<char>(std::lround(std::clamp(v, real(0), real(1)) * real(255))));
  }
}

Dataset load_pgm_dir(const std::string& root_path, std::optional<std::pair<int, int>> resize_to) {
  if (!fs::is_directory(root_path)) {
    throw DataError("PGM dataset root is not a directory: " + root_path);
  }
  std::vector<std::string> class_dirs;
  for (const auto& entry : fs::directory_iterator(root_path)) {
    if (entry.is_directory()) class_dirs.push_back(entry.path().filename().string());
  }
  if (class_dirs.empty()) throw DataError("no class subdirectories in " + root_path);
  std::sort(class_dirs.begin(), class_dirs.end());

  Dataset data;
  data.class_names = class_dirs;
  int expect_h = -1, expect_w = -1;
  for (std::size_t c = 0; c < class_dirs.size(); ++c) {
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(fs::path(root_path) / class_dirs[c])) {
      if (entry.is_regular_file()) files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    for (const std::string& f : files) {
      Tensor2D img = load_pgm(f);
      if (resize_to) {
        img = resize_bilinear(img, resize_to->first, resize_to->second);
      } else {
        if (expect_h < 0) {
          expect_h = img.rows();
          expect_w = img.cols();
        } else if (img.rows() != expect_h || img.cols() != expect_w) {
          std::ostringstream os;
          os << "inconsistent PGM dimensions without resize: " << f << " is " << img.shape_str()
             << ", expected " << expect_h << "x" << expect_w;
          throw DataError(os.str());
        }
      }
      data.images.push_back(std::move(img));
      data.labels.push_back(static_cast<int>(c));
    }
  }
  if (data.size() == 0) throw DataError("no PGM files found under " + root_path);
  return data;
}

Tensor2D resize_bilinear(const Tensor2D& image, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) {
    throw ShapeError("resize_bilinear: target size must be positive");
  }
  if (image.rows() == out_h && image.cols() == out_w) return image;
  Tensor2D out(out_h, out_w);
  const double sy = static_cast<double>(image.rows()) / out_h;
  const double sx = static_cast<double>(image.cols()) / out_w;
  for (int i = 0; i < out_h; ++i) {
    // Half-pixel-center convention, clamped at the borders.
    const double fy = std::max(0.0, (i + 0.5) * sy - 0.5);
    const int y0 = std::min(static_cast<int>(fy), image.rows() - 1);
    const int y1 = std::min(y0 + 1, image.rows() - 1);
    const double wy = fy - y0;
    for (int j = 0; j < out_w; ++j) {
      const double fx = std::max(0.0, (j + 0.5) * sx - 0.5);
      const int x0 = std::min(static_cast<int>(fx), image.cols() - 1);
      const int x1 = std::min(x0 + 1, image.cols() - 1);
      const double wx = fx - x0;
      const double top = (1.0 - wx) * image(y0, x0) + wx * image(y0, x1);
      const double bot = (1.0 - wx) * image(y1, x0) + wx * image(y1, x1);
      out(i, j) = static_cast<real>((1.0 - wy) * top + wy * bot);
    }
  }
  ensure_finite(out, "resize_bilinear");
  return out;
}

Tensor2D resize_nearest(const Tensor2D& image, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) {
    throw ShapeError("resize_nearest: target size must be positive");
  }
  Tensor2D out(out_h, out_w);
  const double sy = static_cast<double>(image.rows()) / out_h;
  const double sx = static_cast<double>(image.cols()) / out_w;
  for (int i = 0; i < out_h; ++i) {
    const int y = std::min(static_cast<int>((i + 0.5) * sy), image.rows() - 1);
    for (int j = 0; j < out_w; ++j) {
      const int x = std::min(static_cast<int>((j + 0.5) * sx), image.cols() - 1);
      out(i, j) = image(y, x);
    }
  }
  return out;
}

std::vector<Batch> batches(const Dataset& data, int batch_size,
                           std::optional<std::uint64_t> shuffle_seed, bool drop_last) {
  if (batch_size < 1) throw ConfigError("batches: batch_size must be >= 1");
  const std::size_t n = data.size();
  if (n == 0) throw DataError("batches: empty dataset");
  if (drop_last && static_cast<std::size_t>(batch_size) > n) {
    std::ostringstream os;
    os << "batches: batch size " << batch_size << " exceeds dataset size " << n
       << " with drop_last";
    throw ConfigError(os.str());
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (shuffle_seed) {
    Rng rng(*shuffle_seed);
    shuffle_indices(order, rng);
  }

  std::vector<Batch> out;
  for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(n, start + static_cast<std::size_t>(batch_size));
    if (end - start < static_cast<std::size_t>(batch_size) && drop_last) break;
    std::vector<Tensor2D> imgs;
    Batch b;
    imgs.reserve(end - start);
    b.labels.reserve(end - start);
    for (std::size_t i = start; i < end; ++i) {
      imgs.push_back(data.images[order[i]]);
      b.labels.push_back(data.labels[order[i]]);
    }
    b.x = vectorize(imgs);
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace gecco

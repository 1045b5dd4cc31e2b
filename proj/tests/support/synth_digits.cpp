#include "support/synth_digits.hpp"

#include <algorithm>
#include <array>

#include "gecco/rng.hpp"

namespace gecco::testsupport {

namespace {

// 5x7 seven-segment-style digit glyphs, one row string per scanline.
constexpr std::array<std::array<const char*, 7>, 10> kFont = {{
    {"01110", "10001", "10011", "10101", "11001", "10001", "01110"},
    {"00100", "01100", "00100", "00100", "00100", "00100", "01110"},
    {"01110", "10001", "00001", "00010", "00100", "01000", "11111"},
    {"11111", "00010", "00100", "00010", "00001", "10001", "01110"},
    {"00010", "00110", "01010", "10010", "11111", "00010", "00010"},
    {"11111", "10000", "11110", "00001", "00001", "10001", "01110"},
    {"00110", "01000", "10000", "11110", "10001", "10001", "01110"},
    {"11111", "00001", "00010", "00100", "01000", "01000", "01000"},
    {"01110", "10001", "10001", "01110", "10001", "10001", "01110"},
    {"01110", "10001", "10001", "01111", "00001", "00010", "01100"},
}};

}  // namespace

Dataset make_synthetic_digits(int n, std::uint64_t seed, int h, int w, real noise, int jitter,
                              int scale) {
  Rng rng(seed);
  Dataset data;
  data.images.reserve(static_cast<std::size_t>(n));
  data.labels.reserve(static_cast<std::size_t>(n));
  const int gh = 7 * scale;
  const int gw = 5 * scale;
  for (int i = 0; i < n; ++i) {
    const int digit = static_cast<int>(uniform_index(rng, 10));
    const int cy = (h - gh) / 2;
    const int cx = (w - gw) / 2;
    const int oy = cy + static_cast<int>(uniform_index(rng, 2 * jitter + 1)) - jitter;
    const int ox = cx + static_cast<int>(uniform_index(rng, 2 * jitter + 1)) - jitter;
    const real amp = real(0.55) + real(0.45) * static_cast<real>(uniform_unit(rng));

    Tensor2D img(h, w, real(0));
    for (int r = 0; r < gh; ++r) {
      for (int c = 0; c < gw; ++c) {
        if (kFont[digit][r / scale][c / scale] == '1') {
          const int yy = oy + r;
          const int xx = ox + c;
          if (yy >= 0 && yy < h && xx >= 0 && xx < w) img(yy, xx) = amp;
        }
      }
    }
    for (real& v : img.data()) {
      v = std::clamp(v + noise * normal_real(rng), real(0), real(1));
    }
    data.images.push_back(std::move(img));
    data.labels.push_back(digit);
  }
  data.class_names = {"0", "1", "2", "3", "4", "5", "6", "7", "8", "9"};
  return data;
}

}  // namespace gecco::testsupport

#pragma once

#include <cstdint>

#include "gecco/data.hpp"

namespace gecco::testsupport {

// Deterministic 10-class grayscale digit task: a fixed 5x7 glyph per class,
// upscaled, jittered a couple of pixels around the center, intensity-jittered
// and buried in Gaussian pixel noise, clipped to [0,1]. Desk-scale stand-in
// for handwritten-digit corpora.
Dataset make_synthetic_digits(int n, std::uint64_t seed, int h = 28, int w = 28,
                              real noise = real(0.5), int jitter = 2, int scale = 3);

}  // namespace gecco::testsupport

#pragma once

// In-place 2D FFTs over y-major complex buffers. Plans are created with
// FFTW_ESTIMATE so results do not depend on timing measurements, and planning
// is serialized because the FFTW planner is not thread-safe.

#include <complex>

namespace ionaddr::fft {

enum class Direction { kForward, kInverse };

// Unnormalized transform; the inverse is not scaled by 1 / (nx ny).
void transform_2d(std::complex<double>* data, int nx, int ny, Direction direction);

}  // namespace ionaddr::fft

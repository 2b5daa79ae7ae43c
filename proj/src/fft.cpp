#include "fft.h"

#include <fftw3.h>

#include <cstdint>
#include <map>
#include <mutex>
#include <tuple>

#include "ionaddr/error.h"

namespace ionaddr::fft {

namespace {

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(int nx, int ny, Direction direction) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_tuple(nx, ny, direction);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    // Plan against a scratch buffer: FFTW_ESTIMATE never touches the data,
    // and fftw_malloc gives the same SIMD alignment our buffers have.
    auto* scratch = fftw_alloc_complex(static_cast<std::size_t>(nx) * ny);
    fftw_plan plan = fftw_plan_dft_2d(ny, nx, scratch, scratch,
                                      direction == Direction::kForward ? FFTW_FORWARD : FFTW_BACKWARD,
                                      FFTW_ESTIMATE);
    fftw_free(scratch);
    require(plan != nullptr, ErrorKind::kSampling, "FFTW could not create a plan");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<int, int, Direction>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

}  // namespace

void transform_2d(std::complex<double>* data, int nx, int ny, Direction direction) {
  // The new-array execute interface requires the alignment the plan was made for.
  require(fftw_alignment_of(reinterpret_cast<double*>(data)) == 0, ErrorKind::kSampling,
          "FFT buffer is not SIMD aligned");
  fftw_plan plan = cache().get(nx, ny, direction);
  auto* p = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(plan, p, p);
}

}  // namespace ionaddr::fft

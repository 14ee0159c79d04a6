#pragma once

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>

#include <fftw3.h>

namespace mhdbl::detail {

// Batched tangential transforms over all normal levels of a [mode][z] array.
// Plans are created once per shape with FFTW_ESTIMATE | FFTW_UNALIGNED so that
// execution is deterministic and independent of buffer alignment.
class TangentialFft {
public:
  TangentialFft(int nx, int ny, int nz) {
    const int rank = ny > 0 ? 2 : 1;
    int n[2] = {nx, ny};
    const int count = nx * (ny > 0 ? ny : 1);
    auto* scratch = fftw_alloc_complex(static_cast<std::size_t>(count) * nz);
    std::lock_guard lock(planner_mutex());
    forward_ = fftw_plan_many_dft(rank, n, nz, scratch, nullptr, nz, 1, scratch, nullptr, nz, 1,
                                  FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    backward_ = fftw_plan_many_dft(rank, n, nz, scratch, nullptr, nz, 1, scratch, nullptr, nz, 1,
                                   FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(scratch);
  }
  TangentialFft(const TangentialFft&) = delete;
  TangentialFft& operator=(const TangentialFft&) = delete;
  ~TangentialFft() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  // Unnormalized; caller scales.
  void forward(std::complex<double>* in, std::complex<double>* out) const {
    fftw_execute_dft(forward_, reinterpret_cast<fftw_complex*>(in), reinterpret_cast<fftw_complex*>(out));
  }
  void backward(std::complex<double>* in, std::complex<double>* out) const {
    fftw_execute_dft(backward_, reinterpret_cast<fftw_complex*>(in), reinterpret_cast<fftw_complex*>(out));
  }

  static std::shared_ptr<const TangentialFft> get(int nx, int ny, int nz) {
    static std::mutex cache_mutex;
    static std::map<std::tuple<int, int, int>, std::shared_ptr<const TangentialFft>> cache;
    std::lock_guard lock(cache_mutex);
    auto& slot = cache[{nx, ny, nz}];
    if (!slot) slot = std::make_shared<const TangentialFft>(nx, ny, nz);
    return slot;
  }

private:
  static std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
  }

  fftw_plan forward_{};
  fftw_plan backward_{};
};

}  // namespace mhdbl::detail

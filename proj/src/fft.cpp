#include "pbnlc/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <numbers>
#include <utility>

namespace pbnlc {
namespace {

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [n, p] : plans_) {
      fftw_destroy_plan(p.forward);
      fftw_destroy_plan(p.backward);
    }
  }

  const PlanPair& get(int n) {
    std::lock_guard lock(mutex_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    // ESTIMATE keeps the chosen algorithm (and so the rounding) reproducible.
    auto* buf = fftw_alloc_complex(static_cast<std::size_t>(n));
    PlanPair p;
    p.forward = fftw_plan_dft_1d(n, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    p.backward = fftw_plan_dft_1d(n, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(buf);
    return plans_.emplace(n, p).first->second;
  }

 private:
  std::mutex mutex_;
  std::map<int, PlanPair> plans_;
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

fftw_complex* as_fftw(ArrayXcd& a) { return reinterpret_cast<fftw_complex*>(a.data()); }

}  // namespace

void fft(ArrayXcd& data) {
  if (data.size() == 0) return;
  const auto& p = cache().get(static_cast<int>(data.size()));
  fftw_execute_dft(p.forward, as_fftw(data), as_fftw(data));
}

void ifft(ArrayXcd& data) {
  if (data.size() == 0) return;
  const auto& p = cache().get(static_cast<int>(data.size()));
  fftw_execute_dft(p.backward, as_fftw(data), as_fftw(data));
  data /= static_cast<double>(data.size());
}

ArrayXd angular_frequency_grid(Eigen::Index n, double sample_rate) {
  ArrayXd w(n);
  const double df = sample_rate / static_cast<double>(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index k = (i < (n + 1) / 2) ? i : i - n;
    w[i] = 2.0 * std::numbers::pi * df * static_cast<double>(k);
  }
  return w;
}

}  // namespace pbnlc

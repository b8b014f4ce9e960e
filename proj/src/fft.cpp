#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>
#include <vector>

namespace gaitbci::detail {
namespace {

enum class Dir { Forward, Inverse };

class PlanCache {
public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(std::size_t n, Dir dir) {
    std::lock_guard lock(mu_);
    auto key = std::make_pair(n, dir);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;

    const int len = static_cast<int>(n);
    std::vector<double> real(n);
    std::vector<fftw_complex> cplx(n / 2 + 1);
    // FFTW_UNALIGNED keeps results independent of the buffers used at execute time.
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan plan = dir == Dir::Forward
                         ? fftw_plan_dft_r2c_1d(len, real.data(), cplx.data(), flags)
                         : fftw_plan_dft_c2r_1d(len, cplx.data(), real.data(), flags);
    if (plan == nullptr) throw std::runtime_error("fftw planning failed");
    plans_.emplace(key, plan);
    return plan;
  }

private:
  std::mutex mu_;
  std::map<std::pair<std::size_t, Dir>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

} // namespace

void rfft(std::span<const double> in, std::span<std::complex<double>> out) {
  const std::size_t n = in.size();
  if (out.size() != n / 2 + 1) throw std::invalid_argument("rfft: output size mismatch");
  fftw_plan plan = cache().get(n, Dir::Forward);
  std::vector<double> scratch(in.begin(), in.end());
  fftw_execute_dft_r2c(plan, scratch.data(), reinterpret_cast<fftw_complex*>(out.data()));
}

void irfft(std::span<const std::complex<double>> in, std::span<double> out) {
  const std::size_t n = out.size();
  if (in.size() != n / 2 + 1) throw std::invalid_argument("irfft: input size mismatch");
  fftw_plan plan = cache().get(n, Dir::Inverse);
  // c2r destroys its input.
  std::vector<std::complex<double>> scratch(in.begin(), in.end());
  fftw_execute_dft_c2r(plan, reinterpret_cast<fftw_complex*>(scratch.data()), out.data());
}

} // namespace gaitbci::detail

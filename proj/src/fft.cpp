#include "dpcnn/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>

namespace dpcnn {
namespace {

struct PlanPair {
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
};

std::mutex g_plan_mutex;
std::map<int, PlanPair>& plan_cache() {
  static std::map<int, PlanPair> cache;
  return cache;
}

// FFTW_ESTIMATE keeps plan selection deterministic and setup cheap; the
// transforms here are small and many.
const PlanPair& plans_for(int n) {
  std::lock_guard<std::mutex> lock(g_plan_mutex);
  auto& cache = plan_cache();
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  std::vector<cplx> a(static_cast<size_t>(n) * n), b(a.size());
  PlanPair p;
  p.fwd = fftw_plan_dft_2d(n, n, reinterpret_cast<fftw_complex*>(a.data()),
                           reinterpret_cast<fftw_complex*>(b.data()),
                           FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  p.bwd = fftw_plan_dft_2d(n, n, reinterpret_cast<fftw_complex*>(a.data()),
                           reinterpret_cast<fftw_complex*>(b.data()),
                           FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!p.fwd || !p.bwd) throw std::runtime_error("fftw planning failed");
  return cache.emplace(n, p).first->second;
}

}  // namespace

void fft2(const cplx* in, cplx* out, int n) {
  const PlanPair& p = plans_for(n);
  fftw_execute_dft(p.fwd,
                   reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

void ifft2(const cplx* in, cplx* out, int n) {
  const PlanPair& p = plans_for(n);
  fftw_execute_dft(p.bwd,
                   reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
  const double scale = 1.0 / (static_cast<double>(n) * n);
  const size_t total = static_cast<size_t>(n) * n;
  for (size_t i = 0; i < total; ++i) out[i] *= scale;
}

void fft2(const std::vector<cplx>& in, std::vector<cplx>& out, int n) {
  out.resize(in.size());
  fft2(in.data(), out.data(), n);
}

void ifft2(const std::vector<cplx>& in, std::vector<cplx>& out, int n) {
  out.resize(in.size());
  ifft2(in.data(), out.data(), n);
}

}  // namespace dpcnn

// Thin wrapper over FFTW for 2D complex transforms.
//
// Plans are cached per grid size and shared; fftw_execute_dft on a cached plan
// with caller-owned buffers is thread safe, planning itself is serialized.
#pragma once

#include <complex>
#include <vector>

namespace dpcnn {

using cplx = std::complex<double>;

// In-place-capable out-of-place transforms, unnormalized forward,
// 1/(n*n) applied on the inverse.
void fft2(const cplx* in, cplx* out, int n);
void ifft2(const cplx* in, cplx* out, int n);

void fft2(const std::vector<cplx>& in, std::vector<cplx>& out, int n);
void ifft2(const std::vector<cplx>& in, std::vector<cplx>& out, int n);

}  // namespace dpcnn

#include "fieldkit/waterfat.hpp"

#include <cmath>
#include <stdexcept>

namespace fieldkit {

ComponentImages separate(const MultiEchoImages& y, const SensitivityMaps& s, const SignalBasis& basis,
                         const EchoTimes& t, const Mask& mask, std::span<const double> omega) {
  if (basis.components != 2) throw std::invalid_argument("water-fat separation needs a two-column basis");
  if (!(y.dims() == s.dims()) || !(y.dims() == mask.dims()) || y.coils() != s.coils())
    throw std::invalid_argument("images, sensitivities and mask disagree in shape");
  if (omega.size() != mask.size()) throw std::invalid_argument("field map length does not match the mask");
  const std::size_t nv = y.voxels();
  const int L = y.echoes(), Nc = y.coils();

  ComponentImages out;
  out.water.assign(nv, 0.0);
  out.fat.assign(nv, 0.0);
  out.flagged.assign(nv, 0);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t sk = 0; sk < std::ptrdiff_t(mask.size()); ++sk) {
    const std::size_t j = mask.voxel(std::size_t(sk));
    // Normal equations A^H A x = A^H y with A[(l,c), k] = gamma_lk exp(i w t_l) s_cj.
    cdouble g00 = 0.0, g01 = 0.0, g11 = 0.0, b0 = 0.0, b1 = 0.0;
    for (int l = 0; l < L; ++l) {
      const cdouble ph = std::polar(1.0, omega[sk] * t[l]);
      for (int c = 0; c < Nc; ++c) {
        const cdouble a0 = basis.g(l, 0) * ph * s(c, j);
        const cdouble a1 = basis.g(l, 1) * ph * s(c, j);
        const cdouble yv = y(c, l, j);
        g00 += std::conj(a0) * a0;
        g01 += std::conj(a0) * a1;
        g11 += std::conj(a1) * a1;
        b0 += std::conj(a0) * yv;
        b1 += std::conj(a1) * yv;
      }
    }
    const double a = g00.real(), d = g11.real();
    const double mid = 0.5 * (a + d);
    const double rad = std::sqrt(0.25 * (a - d) * (a - d) + std::norm(g01));
    if (!(mid + rad > 0.0) || !(mid - rad > 1e-10 * (mid + rad))) {
      out.flagged[j] = 1;
      continue;
    }
    const cdouble det = a * d - std::norm(g01);
    out.water[j] = (d * b0 - g01 * b1) / det;
    out.fat[j] = (a * b1 - std::conj(g01) * b0) / det;
  }
  return out;
}

}  // namespace fieldkit

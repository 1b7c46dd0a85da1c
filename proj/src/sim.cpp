#include "fieldkit/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "fieldkit/parallel.hpp"

namespace fieldkit {

namespace {

constexpr double kPi = std::numbers::pi;

// Normalized coordinate in [-1, 1] across an axis of n voxels.
double unit(int i, int n) { return n > 1 ? 2.0 * i / double(n - 1) - 1.0 : 0.0; }

double ellipsoid(double x, double y, double z, double cx, double cy, double cz, double ax, double ay, double az) {
  const double u = (x - cx) / ax, v = (y - cy) / ay, w = (z - cz) / az;
  return u * u + v * v + w * w;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform in (0, 1) from a counter.
double uniform(std::uint64_t seed, std::uint64_t counter) {
  const std::uint64_t bits = splitmix64(splitmix64(seed) ^ counter) >> 11;
  return (double(bits) + 0.5) * 0x1.0p-53;
}

}  // namespace

std::vector<double> Phantom::field_rad() const {
  std::vector<double> w(field_hz.size());
  for (std::size_t j = 0; j < w.size(); ++j) w[j] = 2.0 * kPi * field_hz[j];
  return w;
}

std::vector<cdouble> Phantom::components() const {
  if (has_components()) {
    std::vector<cdouble> x(water);
    x.insert(x.end(), fat.begin(), fat.end());
    return x;
  }
  return std::vector<cdouble>(magnitude.begin(), magnitude.end());
}

Phantom make_brain_phantom(Dims dims, double scale) {
  Phantom ph;
  ph.dims = dims;
  const std::size_t nv = dims.voxels();
  ph.magnitude.assign(nv, 0.0);
  ph.field_hz.assign(nv, 0.0);
  for (int iz = 0; iz < dims.nz; ++iz)
    for (int iy = 0; iy < dims.ny; ++iy)
      for (int ix = 0; ix < dims.nx; ++ix) {
        const double x = unit(ix, dims.nx), y = unit(iy, dims.ny), z = unit(iz, dims.nz);
        const std::size_t j = dims.index(ix, iy, iz);
        double m = 0.0;
        if (ellipsoid(x, y, z, 0, 0, 0, 0.72, 0.88, 0.85) <= 1.0) m = 0.35;   // scalp / skull
        if (ellipsoid(x, y, z, 0, 0, 0, 0.64, 0.80, 0.76) <= 1.0) m = 0.80;   // white matter
        if (ellipsoid(x, y, z, 0, 0, 0, 0.64, 0.80, 0.76) > 0.75 && m > 0.0 &&
            ellipsoid(x, y, z, 0, 0, 0, 0.64, 0.80, 0.76) <= 1.0)
          m = 0.95;  // cortex
        if (ellipsoid(x, y, z, -0.12, 0.05, 0.05, 0.08, 0.30, 0.25) <= 1.0) m = 1.0;  // ventricles
        if (ellipsoid(x, y, z, 0.12, 0.05, 0.05, 0.08, 0.30, 0.25) <= 1.0) m = 1.0;
        ph.magnitude[j] = scale * m;

        // Smooth field: low-order polynomial plus a frontal susceptibility bump.
        const double poly = 20.0 + 35.0 * x - 25.0 * y + 30.0 * z - 40.0 * x * y + 45.0 * y * y - 30.0 * z * z;
        const double bump = 150.0 * std::exp(-ellipsoid(x, y, z, 0.0, 0.75, -0.55, 0.35, 0.28, 0.35));
        const double dip = -90.0 * std::exp(-ellipsoid(x, y, z, -0.55, -0.3, -0.5, 0.3, 0.35, 0.3));
        ph.field_hz[j] = poly - bump + dip;
      }
  return ph;
}

Phantom make_waterfat_phantom(Dims dims, double scale) {
  if (dims.nz != 1) throw std::invalid_argument("water-fat phantom is a single 2D slice");
  Phantom ph;
  ph.dims = dims;
  const std::size_t nv = dims.voxels();
  ph.magnitude.assign(nv, 0.0);
  ph.field_hz.assign(nv, 0.0);
  ph.water.assign(nv, 0.0);
  ph.fat.assign(nv, 0.0);
  for (int iy = 0; iy < dims.ny; ++iy)
    for (int ix = 0; ix < dims.nx; ++ix) {
      const double x = unit(ix, dims.nx), y = unit(iy, dims.ny);
      const std::size_t j = dims.index(ix, iy, 0);
      double wv = 0.0, fv = 0.0;
      const double body = ellipsoid(x, y, 0, 0, 0, 0, 0.88, 0.70, 1.0);
      if (body <= 1.0) {
        if (body > 0.62) {
          fv = 0.9;  // subcutaneous fat
          wv = 0.08;
        } else {
          wv = 0.7;  // muscle / viscera
          fv = 0.03;
        }
      }
      if (ellipsoid(x, y, 0, -0.3, -0.05, 0, 0.28, 0.3, 1.0) <= 1.0) {  // fatty liver
        wv = 0.65;
        fv = 0.2;
      }
      if (ellipsoid(x, y, 0, 0.3, 0.1, 0, 0.18, 0.16, 1.0) <= 1.0) {  // fat pad
        wv = 0.05;
        fv = 0.85;
      }
      if (ellipsoid(x, y, 0, 0.25, -0.3, 0, 0.12, 0.12, 1.0) <= 1.0) {  // blood pool
        wv = 1.0;
        fv = 0.0;
      }
      ph.water[j] = scale * wv;
      ph.fat[j] = scale * fv;
      ph.magnitude[j] = scale * (wv + fv);
      ph.field_hz[j] = 15.0 + 40.0 * x - 30.0 * y + 25.0 * x * y - 35.0 * x * x +
                       45.0 * std::exp(-ellipsoid(x, y, 0, 0.2, 0.4, 0, 0.35, 0.3, 1.0));
    }
  return ph;
}

SensitivityMaps sim_coil_maps(Dims dims, int coils) {
  if (coils < 1) throw std::invalid_argument("at least one coil is required");
  if (coils == 1) return SensitivityMaps::ones(dims);
  const std::size_t nv = dims.voxels();
  std::vector<cdouble> s(std::size_t(coils) * nv);
  const double width = 0.9;
  for (int c = 0; c < coils; ++c) {
    const double ang = 2.0 * kPi * c / coils;
    const double cx = 1.1 * std::cos(ang), cy = 1.1 * std::sin(ang);
    for (int iz = 0; iz < dims.nz; ++iz)
      for (int iy = 0; iy < dims.ny; ++iy)
        for (int ix = 0; ix < dims.nx; ++ix) {
          const double x = unit(ix, dims.nx), y = unit(iy, dims.ny), z = unit(iz, dims.nz);
          const double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy) + 0.5 * z * z;
          const double mag = std::exp(-r2 / (2.0 * width * width));
          const double phase = ang + 0.6 * (x * std::cos(ang) + y * std::sin(ang)) + 0.2 * z;
          s[std::size_t(c) * nv + dims.index(ix, iy, iz)] = std::polar(mag, phase);
        }
  }
  return SensitivityMaps(dims, coils, std::move(s));
}

MultiEchoImages add_noise_snr(const MultiEchoImages& y, double snr_db, std::uint64_t seed) {
  if (!std::isfinite(snr_db)) return y;
  const auto data = y.data();
  const double energy = reduce_sum(data.size(), [&](std::size_t i) { return std::norm(data[i]); });
  const double var = energy / (double(data.size()) * std::pow(10.0, snr_db / 10.0));
  const double sd = std::sqrt(0.5 * var);
  std::vector<cdouble> out(data.begin(), data.end());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(out.size()); ++i) {
    const double u1 = uniform(seed, 2 * std::uint64_t(i));
    const double u2 = uniform(seed, 2 * std::uint64_t(i) + 1);
    const double rad = std::sqrt(-2.0 * std::log(u1));
    out[i] += cdouble(sd * rad * std::cos(2.0 * kPi * u2), sd * rad * std::sin(2.0 * kPi * u2));
  }
  return MultiEchoImages(y.dims(), y.coils(), y.echoes(), std::move(out));
}

std::vector<std::uint8_t> hull_fill_slice(const std::vector<std::uint8_t>& points, int nx, int ny) {
  struct P {
    long x, y;
  };
  std::vector<P> pts;
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix)
      if (points[std::size_t(ix) + std::size_t(nx) * iy]) pts.push_back({ix, iy});
  std::vector<std::uint8_t> out(std::size_t(nx) * ny, 0);
  if (pts.empty()) return out;

  // Andrew's monotone chain; collinear points removed, counterclockwise order.
  std::sort(pts.begin(), pts.end(), [](const P& a, const P& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  auto cross = [](const P& o, const P& a, const P& b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); };
  std::vector<P> hull(2 * pts.size());
  std::size_t h = 0;
  for (const P& p : pts) {
    while (h >= 2 && cross(hull[h - 2], hull[h - 1], p) <= 0) --h;
    hull[h++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = h + 1; i-- > 0;) {
    const P& p = pts[i];
    while (h >= lower && cross(hull[h - 2], hull[h - 1], p) <= 0) --h;
    hull[h++] = p;
  }
  hull.resize(h > 1 ? h - 1 : h);

  long x0 = hull[0].x, x1 = hull[0].x, y0 = hull[0].y, y1 = hull[0].y;
  for (const P& v : hull) {
    x0 = std::min(x0, v.x);
    x1 = std::max(x1, v.x);
    y0 = std::min(y0, v.y);
    y1 = std::max(y1, v.y);
  }
  for (long iy = y0; iy <= y1; ++iy)
    for (long ix = x0; ix <= x1; ++ix) {
      const P q{ix, iy};
      bool inside = true;
      if (hull.size() >= 2)
        for (std::size_t e = 0; e < hull.size() && inside; ++e)
          inside = cross(hull[e], hull[(e + 1) % hull.size()], q) >= 0;
      if (inside) out[std::size_t(ix) + std::size_t(nx) * iy] = 1;
    }
  return out;
}

Mask make_mask(const MultiEchoImages& y, const SensitivityMaps& s, double threshold_frac, int dilation) {
  if (!(y.dims() == s.dims()) || y.coils() != s.coils())
    throw std::invalid_argument("images and sensitivities disagree in shape");
  if (!(threshold_frac >= 0.0) || dilation < 0) throw std::invalid_argument("invalid mask parameters");
  const Dims d = y.dims();
  const std::size_t nv = d.voxels();
  std::vector<double> mag(nv);
  double peak = 0.0;
  for (std::size_t j = 0; j < nv; ++j) {
    cdouble v = 0.0;
    for (int c = 0; c < y.coils(); ++c) v += std::conj(s(c, j)) * y(c, 0, j);
    mag[j] = std::abs(v);
    peak = std::max(peak, mag[j]);
  }
  if (!(peak > 0.0)) throw std::invalid_argument("mask is empty: first-echo image is zero");

  std::vector<std::uint8_t> in(nv, 0);
  const std::size_t slice = std::size_t(d.nx) * d.ny;
  for (int iz = 0; iz < d.nz; ++iz) {
    std::vector<std::uint8_t> pts(slice, 0);
    for (std::size_t i = 0; i < slice; ++i) pts[i] = mag[iz * slice + i] >= threshold_frac * peak;
    const auto filled = hull_fill_slice(pts, d.nx, d.ny);
    std::copy(filled.begin(), filled.end(), in.begin() + iz * slice);
  }

  for (int round = 0; round < dilation; ++round) {
    std::vector<std::uint8_t> next(in);
    for (int iz = 0; iz < d.nz; ++iz)
      for (int iy = 0; iy < d.ny; ++iy)
        for (int ix = 0; ix < d.nx; ++ix) {
          if (!in[d.index(ix, iy, iz)]) continue;
          const int nb[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
          for (const auto& o : nb) {
            const int x = ix + o[0], yy = iy + o[1], z = iz + o[2];
            if (x < 0 || yy < 0 || z < 0 || x >= d.nx || yy >= d.ny || z >= d.nz) continue;
            next[d.index(x, yy, z)] = 1;
          }
        }
    in.swap(next);
  }
  for (std::size_t j = 0; j < nv; ++j)
    if (!(s.ssq(j) > 0.0)) in[j] = 0;
  Mask m(d, std::move(in));
  if (m.empty()) throw std::invalid_argument("mask is empty");
  return m;
}

}  // namespace fieldkit

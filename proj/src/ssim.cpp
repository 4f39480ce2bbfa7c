#include <algorithm>
#include <vector>

#include "behgan/errors.hpp"
#include "behgan/metrics.hpp"

namespace behgan {

namespace {

// Summed-area table with a zero border: S(y, x) = sum of v over [0,y) x [0,x).
std::vector<double> integral(const std::vector<double>& v, int w, int h) {
  std::vector<double> s(static_cast<std::size_t>(w + 1) * (h + 1), 0.0);
  for (int y = 0; y < h; ++y) {
    double row = 0.0;
    for (int x = 0; x < w; ++x) {
      row += v[static_cast<std::size_t>(y) * w + x];
      s[static_cast<std::size_t>(y + 1) * (w + 1) + x + 1] = s[static_cast<std::size_t>(y) * (w + 1) + x + 1] + row;
    }
  }
  return s;
}

double box(const std::vector<double>& s, int w, int x0, int y0, int bw, int bh) {
  const auto at = [&](int y, int x) { return s[static_cast<std::size_t>(y) * (w + 1) + x]; };
  return at(y0 + bh, x0 + bw) - at(y0, x0 + bw) - at(y0 + bh, x0) + at(y0, x0);
}

}  // namespace

double ssim(const GlyphImage& a, const GlyphImage& b) {
  if (a.width != b.width || a.height != b.height || a.pixels.size() != b.pixels.size()) throw DimensionMismatch();
  if (a.empty()) throw DimensionMismatch();
  const int w = a.width, h = a.height;
  const int ww = std::min(kSsimWindow, w), wh = std::min(kSsimWindow, h);
  const double c1 = (0.01 * 255.0) * (0.01 * 255.0);
  const double c2 = (0.03 * 255.0) * (0.03 * 255.0);

  const std::size_t n = a.pixels.size();
  std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = a.pixels[i];
    y[i] = b.pixels[i];
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto sx = integral(x, w, h), sy = integral(y, w, h), sxx = integral(xx, w, h), syy = integral(yy, w, h),
             sxy = integral(xy, w, h);

  const double inv = 1.0 / static_cast<double>(ww * wh);
  double total = 0.0;
  int windows = 0;
  for (int y0 = 0; y0 + wh <= h; ++y0)
    for (int x0 = 0; x0 + ww <= w; ++x0) {
      const double mx = box(sx, w, x0, y0, ww, wh) * inv;
      const double my = box(sy, w, x0, y0, ww, wh) * inv;
      const double vx = box(sxx, w, x0, y0, ww, wh) * inv - mx * mx;
      const double vy = box(syy, w, x0, y0, ww, wh) * inv - my * my;
      const double cxy = box(sxy, w, x0, y0, ww, wh) * inv - mx * my;
      total += ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++windows;
    }
  return total / windows;
}

}  // namespace behgan

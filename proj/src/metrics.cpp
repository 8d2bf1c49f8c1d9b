#include "efenet/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace efenet {
namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;

std::vector<double> luma(const Frame& f) {
  const int h = f.height(), w = f.width();
  std::vector<double> out(static_cast<std::size_t>(h) * w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double v;
      if (f.channels() == 1)
        v = f.at(y, x, 0);
      else
        v = 0.299 * f.at(y, x, 0) + 0.587 * f.at(y, x, 1) + 0.114 * f.at(y, x, 2);
      out[static_cast<std::size_t>(y) * w + x] = v;
    }
  return out;
}

std::vector<double> gaussian_window() {
  std::vector<double> g(kSsimWindow);
  double sum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - kSsimWindow / 2;
    g[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    sum += g[i];
  }
  for (double& v : g) v /= sum;
  return g;
}

// Separable "valid" filtering: output is (h - 10) x (w - 10).
std::vector<double> filter_valid(const std::vector<double>& img, int h, int w, const std::vector<double>& g) {
  const int k = kSsimWindow;
  const int ow = w - k + 1, oh = h - k + 1;
  std::vector<double> tmp(static_cast<std::size_t>(h) * ow);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < k; ++i) s += g[i] * img[static_cast<std::size_t>(y) * w + x + i];
      tmp[static_cast<std::size_t>(y) * ow + x] = s;
    }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < k; ++i) s += g[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  return out;
}

}  // namespace

double psnr(const Frame& a, const Frame& b, double peak) {
  if (a.shape() != b.shape()) throw std::invalid_argument("psnr: shape mismatch");
  const Tensor& ta = a.tensor();
  const Tensor& tb = b.tensor();
  double se = 0.0;
  for (std::size_t i = 0; i < ta.size(); ++i) {
    const double d = static_cast<double>(ta[i]) - static_cast<double>(tb[i]);
    se += d * d;
  }
  if (se == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = se / static_cast<double>(ta.size());
  return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const Frame& a, const Frame& b) {
  if (a.shape() != b.shape()) throw std::invalid_argument("ssim: shape mismatch");
  if (a.height() < kSsimWindow || a.width() < kSsimWindow)
    throw std::invalid_argument("ssim: frames must be at least 11x11");
  constexpr double c1 = (0.01 * 1.0) * (0.01 * 1.0);
  constexpr double c2 = (0.03 * 1.0) * (0.03 * 1.0);
  const int h = a.height(), w = a.width();
  const std::vector<double> x = luma(a), y = luma(b);
  std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto g = gaussian_window();
  const auto mx = filter_valid(x, h, w, g), my = filter_valid(y, h, w, g);
  const auto sxx = filter_valid(xx, h, w, g), syy = filter_valid(yy, h, w, g), sxy = filter_valid(xy, h, w, g);
  double sum = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double vx = sxx[i] - mx[i] * mx[i];
    const double vy = syy[i] - my[i] * my[i];
    const double cov = sxy[i] - mx[i] * my[i];
    sum += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
           ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
  }
  return sum / static_cast<double>(mx.size());
}

double endpoint_error(const FlowField& flow, const FlowField& gt, int interior_margin) {
  if (flow.height() != gt.height() || flow.width() != gt.width())
    throw std::invalid_argument("endpoint_error: dimension mismatch");
  const int m = std::max(interior_margin, 0);
  const int h = flow.height(), w = flow.width();
  if (2 * m >= h || 2 * m >= w) throw std::invalid_argument("endpoint_error: margin leaves no interior");
  double sum = 0.0;
  for (int y = m; y < h - m; ++y)
    for (int x = m; x < w - m; ++x) {
      const double dx = static_cast<double>(flow.dx(y, x)) - gt.dx(y, x);
      const double dy = static_cast<double>(flow.dy(y, x)) - gt.dy(y, x);
      sum += std::sqrt(dx * dx + dy * dy);
    }
  return sum / (static_cast<double>(h - 2 * m) * (w - 2 * m));
}

Frame crop_interior(const Frame& f, int margin) {
  if (margin <= 0) return f;
  const int h = f.height() - 2 * margin, w = f.width() - 2 * margin;
  if (h < 1 || w < 1) throw std::invalid_argument("crop_interior: margin leaves no interior");
  Frame out(h, w, f.channels());
  for (int c = 0; c < f.channels(); ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at(y, x, c) = f.at(y + margin, x + margin, c);
  return out;
}

double MetricReport::mean_psnr() const {
  if (rows.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : rows) s += r.psnr_db;
  return s / static_cast<double>(rows.size());
}

double MetricReport::mean_ssim() const {
  if (rows.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : rows) s += r.ssim;
  return s / static_cast<double>(rows.size());
}

std::optional<double> MetricReport::mean_epe() const {
  double s = 0.0;
  int n = 0;
  for (const auto& r : rows)
    if (r.epe_px) {
      s += *r.epe_px;
      ++n;
    }
  if (n == 0) return std::nullopt;
  return s / n;
}

std::string format_metric(std::optional<double> v) {
  if (!v) return "";
  if (std::isinf(*v)) return *v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", *v);
  return buf;
}

void MetricReport::write_csv(std::ostream& out) const {
  out << "clip_id,psnr_db,ssim,epe_px\n";
  for (const auto& r : rows)
    out << r.clip_id << ',' << format_metric(r.psnr_db) << ',' << format_metric(r.ssim) << ','
        << format_metric(r.epe_px) << '\n';
}

}  // namespace efenet

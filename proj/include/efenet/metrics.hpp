#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "efenet/frame.hpp"

namespace efenet {

/// 10 log10(peak^2 / MSE) over all pixels and channels; +infinity when the
/// inputs are identical.
double psnr(const Frame& a, const Frame& b, double peak = 1.0);

/// Gaussian-window SSIM (11x11, sigma 1.5, K1 = 0.01, K2 = 0.03, L = 1),
/// averaged over window positions fully inside the image. RGB inputs are
/// converted to BT.601 luma first.
double ssim(const Frame& a, const Frame& b);

/// Mean endpoint error over pixels at least `interior_margin` away from the border.
double endpoint_error(const FlowField& flow, const FlowField& gt, int interior_margin = 4);

/// Keeps only pixels at least `margin` away from the border.
Frame crop_interior(const Frame& f, int margin);

struct MetricRow {
  std::string clip_id;
  double psnr_db = 0.0;
  double ssim = 0.0;
  std::optional<double> epe_px;
};

struct MetricReport {
  std::vector<MetricRow> rows;

  std::size_t count() const { return rows.size(); }
  double mean_psnr() const;
  double mean_ssim() const;
  /// Mean over rows that carry an EPE; nullopt when none do.
  std::optional<double> mean_epe() const;
  /// Header "clip_id,psnr_db,ssim,epe_px" then one line per clip.
  void write_csv(std::ostream& out) const;
};

/// Formats a metric value for CSV output ("inf" for infinity, blank for nullopt).
std::string format_metric(std::optional<double> v);

}  // namespace efenet

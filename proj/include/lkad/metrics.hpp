#pragma once

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "lkad/tensor.hpp"

namespace lkad {

/// The seven-scalar depth evaluation protocol plus bookkeeping.
struct MetricsReport {
  real abs_rel = 0, sq_rel = 0, rmse = 0, rmse_log = 0;
  real d1 = 0, d2 = 0, d3 = 0;
  long n_pixels = 0;
  bool scaled = false;
  real cap_min = 1e-3, cap_max = 80.0;
};

namespace detail {
inline real median_of(std::vector<real> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}
}  // namespace detail

/// gt == 0 or outside the cap marks a pixel invalid. With median scaling,
/// pred is rescaled by median(gt)/median(pred) over the valid set first;
/// pred is then clamped into the cap before the error terms.
inline MetricsReport compute_metrics(const Tensor& pred, const Tensor& gt,
                                     bool use_median_scaling = true,
                                     real cap_min = 1e-3, real cap_max = 80.0) {
  if (pred.shape() != gt.shape())
    throw std::invalid_argument("compute_metrics: shape mismatch");
  std::vector<real> p, g;
  for (long i = 0; i < gt.numel(); ++i) {
    const real gv = gt.data()[i];
    if (gv < 0) throw std::domain_error("compute_metrics: negative gt depth");
    if (gv < cap_min || gv > cap_max) continue;  // gv==0 means no measurement
    p.push_back(pred.data()[i]);
    g.push_back(gv);
  }
  if (p.empty()) throw std::domain_error("compute_metrics: no valid pixels");
  if (use_median_scaling) {
    const real scale = detail::median_of(g) / detail::median_of(p);
    for (real& v : p) v *= scale;
  }
  MetricsReport r;
  r.scaled = use_median_scaling;
  r.cap_min = cap_min;
  r.cap_max = cap_max;
  r.n_pixels = static_cast<long>(p.size());
  real abs_rel = 0, sq_rel = 0, sq = 0, sq_log = 0, d1 = 0, d2 = 0, d3 = 0;
  const real t1 = 1.25, t2 = 1.25 * 1.25, t3 = 1.25 * 1.25 * 1.25;
  for (size_t i = 0; i < p.size(); ++i) {
    const real pv = std::min(cap_max, std::max(cap_min, p[i]));
    const real gv = g[i];
    const real d = pv - gv;
    abs_rel += std::abs(d) / gv;
    sq_rel += d * d / gv;
    sq += d * d;
    const real dl = std::log(pv) - std::log(gv);
    sq_log += dl * dl;
    const real ratio = std::max(pv / gv, gv / pv);
    d1 += ratio < t1;
    d2 += ratio < t2;
    d3 += ratio < t3;
  }
  const real n = static_cast<real>(p.size());
  r.abs_rel = abs_rel / n;
  r.sq_rel = sq_rel / n;
  r.rmse = std::sqrt(sq / n);
  r.rmse_log = std::sqrt(sq_log / n);
  r.d1 = d1 / n;
  r.d2 = d2 / n;
  r.d3 = d3 / n;
  return r;
}

/// Pixel-weighted merge of per-frame reports. Means combine linearly; the
/// RMS terms combine through their mean squares.
inline MetricsReport merge_reports(const std::vector<MetricsReport>& reports) {
  if (reports.empty()) throw std::domain_error("merge_reports: empty list");
  MetricsReport out = reports.front();
  real n = 0, abs_rel = 0, sq_rel = 0, msq = 0, msq_log = 0, d1 = 0, d2 = 0,
       d3 = 0;
  for (const auto& r : reports) {
    const real w = static_cast<real>(r.n_pixels);
    n += w;
    abs_rel += w * r.abs_rel;
    sq_rel += w * r.sq_rel;
    msq += w * r.rmse * r.rmse;
    msq_log += w * r.rmse_log * r.rmse_log;
    d1 += w * r.d1;
    d2 += w * r.d2;
    d3 += w * r.d3;
  }
  out.abs_rel = abs_rel / n;
  out.sq_rel = sq_rel / n;
  out.rmse = std::sqrt(msq / n);
  out.rmse_log = std::sqrt(msq_log / n);
  out.d1 = d1 / n;
  out.d2 = d2 / n;
  out.d3 = d3 / n;
  out.n_pixels = static_cast<long>(n);
  return out;
}

inline std::string metrics_csv_header() {
  return "abs_rel,sq_rel,rmse,rmse_log,d1,d2,d3,n_pixels,scaled,cap_min,cap_max";
}

inline std::string metrics_csv_row(const MetricsReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%ld,%d,%.17g,%.17g",
                r.abs_rel, r.sq_rel, r.rmse, r.rmse_log, r.d1, r.d2, r.d3,
                r.n_pixels, r.scaled ? 1 : 0, r.cap_min, r.cap_max);
  return buf;
}

inline MetricsReport metrics_csv_parse(const std::string& row) {
  MetricsReport r;
  int scaled = 0;
  if (std::sscanf(row.c_str(),
                  "%lg,%lg,%lg,%lg,%lg,%lg,%lg,%ld,%d,%lg,%lg", &r.abs_rel,
                  &r.sq_rel, &r.rmse, &r.rmse_log, &r.d1, &r.d2, &r.d3,
                  &r.n_pixels, &scaled, &r.cap_min, &r.cap_max) != 11)
    throw std::runtime_error("metrics_csv_parse: bad row");
  r.scaled = scaled != 0;
  return r;
}

/// The published full-scale KITTI reference row. Not reproducible at desk
/// scale; printed alongside local results for context only.
inline MetricsReport published_reference_row() {
  MetricsReport r;
  r.abs_rel = 0.095;
  r.sq_rel = 0.620;
  r.rmse = 4.148;
  r.rmse_log = 0.169;
  r.d1 = 0.907;
  r.d2 = 0.969;
  r.d3 = 0.985;
  return r;
}

/// Two-row table: the given report plus the constant published reference.
inline std::string compare_to_paper(const MetricsReport& report) {
  auto fmt = [](const char* label, const MetricsReport& r, const char* tag) {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "%-10s %8.3f %8.3f %8.3f %8.3f %8.3f %8.3f %8.3f  %s\n",
                  label, r.abs_rel, r.sq_rel, r.rmse, r.rmse_log, r.d1, r.d2,
                  r.d3, tag);
    return std::string(buf);
  };
  std::string out =
      "method       abs_rel   sq_rel     rmse rmse_log       d1       d2 "
      "      d3\n";
  out += fmt("this run", report, "");
  out += fmt("published", published_reference_row(),
             "(reference only; full-scale KITTI, not reproducible here)");
  return out;
}

}  // namespace lkad

#pragma once

#include "nyqsurf/camera.hpp"
#include "nyqsurf/surfel.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace nyqsurf {

inline constexpr int kDefaultHistogramBins = 64;

// Overall sampling rate of a surfel: the best rate over all cameras that see
// its center, or 0 when no camera does.
inline double multi_view_rate(const Surfel& sf, std::span<const Camera> cams,
                              RateMode mode = RateMode::Area) {
  if (cams.empty()) throw std::invalid_argument("multi_view_rate: no cameras supplied");
  double best = 0.0;
  for (const Camera& cam : cams) {
    if (!visible(sf.center, cam)) continue;
    best = std::max(best, sampling_rate(cam, cam.to_camera(sf.center).z(), mode));
  }
  return best;
}

// nu_surfel / (nu_hat / 2) using the dominant tangent frequency; empty when
// the surfel is unsampled (nu_hat == 0).
inline std::optional<double> nyquist_ratio(const Surfel& sf, double nu_hat) {
  if (!(nu_hat > 0.0)) return std::nullopt;
  return spatial_frequency(sf).dominant() / (0.5 * nu_hat);
}

inline bool nyquist_satisfied(double ratio) { return ratio < 1.0; }

struct SurfelRecord {
  std::size_t index = 0;
  double nu_hat = 0.0;
  double nu = 0.0;
  double ratio = 0.0;  // meaningless when !sampled
  bool sampled = false;
  bool satisfied = false;
};

// Log-spaced histogram of the Nyquist ratio. edges.size() == counts.size() + 1.
struct RatioHistogram {
  std::vector<double> edges;
  std::vector<std::size_t> counts;

  std::size_t total() const {
    std::size_t n = 0;
    for (auto c : counts) n += c;
    return n;
  }
};

struct ReportSummary {
  std::size_t surfel_count = 0;
  std::size_t sampled_count = 0;
  std::size_t satisfied_count = 0;
  double fraction_satisfied = 0.0;  // over sampled surfels
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  double mean_ratio = 0.0;
};

struct FrequencyReport {
  std::vector<SurfelRecord> records;  // ordered by surfel index
  std::vector<std::size_t> unsampled;
  RatioHistogram histogram;
  ReportSummary summary;
};

inline RatioHistogram log_histogram(std::span<const double> values, int bins) {
  if (bins < 1) throw std::invalid_argument("log_histogram: bins must be >= 1");
  RatioHistogram h;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  if (values.empty()) {
    h.edges.assign(static_cast<std::size_t>(bins) + 1, 0.0);
    return h;
  }
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  h.edges.resize(static_cast<std::size_t>(bins) + 1);
  const double log_span = std::log(hi / lo);
  for (int i = 0; i <= bins; ++i)
    h.edges[static_cast<std::size_t>(i)] = lo * std::exp(log_span * i / bins);
  h.edges.back() = hi;
  for (double r : values) {
    int b = 0;
    if (log_span > 0.0) b = static_cast<int>(std::floor(bins * std::log(r / lo) / log_span));
    b = std::clamp(b, 0, bins - 1);
    ++h.counts[static_cast<std::size_t>(b)];
  }
  return h;
}

inline FrequencyReport frequency_report(const SurfelField& field, std::span<const Camera> cams,
                                        int bins = kDefaultHistogramBins,
                                        RateMode mode = RateMode::Area) {
  if (bins < 1) throw std::invalid_argument("frequency_report: bins must be >= 1");
  FrequencyReport rep;
  const std::size_t n = field.size();
  rep.records.resize(n);
  if (n > 0 && cams.empty()) throw std::invalid_argument("frequency_report: no cameras supplied");

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    const Surfel& sf = field.surfels[static_cast<std::size_t>(i)];
    SurfelRecord rec;
    rec.index = static_cast<std::size_t>(i);
    rec.nu_hat = multi_view_rate(sf, cams, mode);
    rec.nu = spatial_frequency(sf).dominant();
    if (auto r = nyquist_ratio(sf, rec.nu_hat)) {
      rec.sampled = true;
      rec.ratio = *r;
      rec.satisfied = nyquist_satisfied(*r);
    }
    rep.records[static_cast<std::size_t>(i)] = rec;
  }

  std::vector<double> ratios;
  ratios.reserve(n);
  double sum = 0.0;
  for (const auto& rec : rep.records) {
    if (!rec.sampled) {
      rep.unsampled.push_back(rec.index);
      continue;
    }
    ratios.push_back(rec.ratio);
    sum += rec.ratio;
    if (rec.satisfied) ++rep.summary.satisfied_count;
  }
  rep.summary.surfel_count = n;
  rep.summary.sampled_count = ratios.size();
  if (!ratios.empty()) {
    rep.summary.fraction_satisfied =
        static_cast<double>(rep.summary.satisfied_count) / static_cast<double>(ratios.size());
    rep.summary.min_ratio = *std::min_element(ratios.begin(), ratios.end());
    rep.summary.max_ratio = *std::max_element(ratios.begin(), ratios.end());
    rep.summary.mean_ratio = sum / static_cast<double>(ratios.size());
  }
  rep.histogram = log_histogram(ratios, bins);
  return rep;
}

// Annotates the field with per-surfel nu_hat and Nyquist ratio (NaN when unsampled).
inline void annotate(SurfelField& field, std::span<const Camera> cams,
                     RateMode mode = RateMode::Area) {
  std::vector<double> rates(field.size());
  std::vector<double> ratios(field.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < field.size(); ++i) {
    rates[i] = multi_view_rate(field.surfels[i], cams, mode);
    if (auto r = nyquist_ratio(field.surfels[i], rates[i])) ratios[i] = *r;
  }
  field.set_sampling_rate(std::move(rates));
  field.set_nyquist_ratio(std::move(ratios));
}

// Scale giving a surfel a half-pixel world footprint at depth d.
inline double pixel_aligned_scale(const Camera& cam, double depth) {
  return depth / (2.0 * std::max(cam.fx, cam.fy));
}

}  // namespace nyqsurf

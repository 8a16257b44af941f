#pragma once

#include "nyqsurf/nyquist.hpp"
#include "nyqsurf/surfel.hpp"

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nyqsurf {

// PaperMode scales multiplicatively, s' = s*sqrt(1 + s_f^2/nu^2).
// ConvolutionMode adds the filter variance, s' = sqrt(s^2 + s_f^2/nu^2), which
// is what convolving the surfel Gaussian with the low-pass filter produces.
enum class AdaptationMode { Paper, Convolution };

struct AdaptationConfig {
  double s = 1.0;
  AdaptationMode mode = AdaptationMode::Paper;
};

inline AdaptationMode parse_adaptation_mode(const std::string& name) {
  if (name == "paper") return AdaptationMode::Paper;
  if (name == "convolution") return AdaptationMode::Convolution;
  throw std::invalid_argument("unknown adaptation mode '" + name + "' (expected paper|convolution)");
}

inline const char* to_string(AdaptationMode mode) {
  return mode == AdaptationMode::Paper ? "paper" : "convolution";
}

struct AdaptedSurfel {
  Surfel surfel;  // adapted scales
  double original_s_u = 0.0;
  double original_s_v = 0.0;
  double nu_hat = 0.0;
};

// Standard deviation s/nu_hat of the tangent-domain filter
// exp(-nu^2 u^2 / (2 s^2) - nu^2 v^2 / (2 s^2)).
inline double low_pass_sigma(double nu_hat, double s) {
  if (!(nu_hat > 0.0)) throw std::invalid_argument("unsampled surfel cannot be adapted");
  if (!(s > 0.0)) throw std::invalid_argument("low_pass_sigma: s must be positive");
  return s / nu_hat;
}

inline double low_pass_filter(double u, double v, double nu_hat, double s) {
  const double k = nu_hat * nu_hat / (2.0 * s * s);
  return std::exp(-k * u * u - k * v * v);
}

inline double adapted_scale(double scale, double filter_sigma, AdaptationMode mode) {
  if (mode == AdaptationMode::Paper)
    return scale * std::sqrt(1.0 + filter_sigma * filter_sigma);
  return std::sqrt(scale * scale + filter_sigma * filter_sigma);
}

inline AdaptedSurfel adapt(const Surfel& sf, double nu_hat, const AdaptationConfig& cfg) {
  const double sigma = low_pass_sigma(nu_hat, cfg.s);
  AdaptedSurfel out;
  out.surfel = sf;
  out.surfel.s_u = adapted_scale(sf.s_u, sigma, cfg.mode);
  out.surfel.s_v = adapted_scale(sf.s_v, sigma, cfg.mode);
  out.original_s_u = sf.s_u;
  out.original_s_v = sf.s_v;
  out.nu_hat = nu_hat;
  return out;
}

struct BoundCheck {
  bool satisfied = false;
  double nu_u = 0.0;
  double nu_v = 0.0;
  double nyquist = 0.0;  // nu_hat / 2
  double margin = 0.0;   // max(nu_u, nu_v) / nyquist; < 1 when satisfied
};

inline BoundCheck verify_bound(const AdaptedSurfel& asf, double nu_hat) {
  BoundCheck out;
  out.nu_u = 1.0 / (std::numbers::pi * asf.surfel.s_u);
  out.nu_v = 1.0 / (std::numbers::pi * asf.surfel.s_v);
  out.nyquist = 0.5 * nu_hat;
  out.margin = std::max(out.nu_u, out.nu_v) / out.nyquist;
  out.satisfied = out.nu_u < out.nyquist && out.nu_v < out.nyquist;
  return out;
}

inline BoundCheck verify_bound(const AdaptedSurfel& asf, double nu_hat, const AdaptationConfig&) {
  return verify_bound(asf, nu_hat);
}

struct FieldAdaptation {
  SurfelField field;                    // adapted scales, annotated with nu_hat
  std::vector<std::size_t> passthrough; // unsampled surfels left unadapted
};

// Adapts every surfel against its multi-view rate. Unsampled surfels keep
// their scales and are listed in `passthrough`.
inline FieldAdaptation adapt_field(const SurfelField& field, std::span<const Camera> cams,
                                   const AdaptationConfig& cfg, RateMode mode = RateMode::Area) {
  if (!field.empty() && cams.empty()) throw std::invalid_argument("adapt_field: no cameras supplied");
  if (!(cfg.s > 0.0)) throw std::invalid_argument("adapt_field: s must be positive");
  FieldAdaptation out;
  out.field.surfels = field.surfels;
  std::vector<double> rates(field.size(), 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(field.size()); ++i) {
    const auto k = static_cast<std::size_t>(i);
    rates[k] = multi_view_rate(field.surfels[k], cams, mode);
    if (rates[k] > 0.0) out.field.surfels[k] = adapt(field.surfels[k], rates[k], cfg).surfel;
  }
  for (std::size_t k = 0; k < rates.size(); ++k)
    if (!(rates[k] > 0.0)) out.passthrough.push_back(k);
  out.field.set_sampling_rate(std::move(rates));
  return out;
}

}  // namespace nyqsurf

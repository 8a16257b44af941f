#pragma once

#include "nyqsurf/losses.hpp"
#include "nyqsurf/surfel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nyqsurf {

using LossFn = std::function<double(std::span<const double>)>;

// Central differences with one step size for every coordinate.
inline std::vector<double> fd_gradient(const LossFn& loss, std::span<const double> params, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("fd_gradient: step must be positive");
  std::vector<double> p(params.begin(), params.end());
  std::vector<double> grad(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double x = p[i];
    p[i] = x + h;
    const double fp = loss(p);
    p[i] = x - h;
    const double fm = loss(p);
    p[i] = x;
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

// Central differences with h_i = max(relative * |p_i|, floor).
inline std::vector<double> fd_gradient_relative(const LossFn& loss, std::span<const double> params,
                                                double relative = 1e-4, double floor = 1e-6) {
  std::vector<double> p(params.begin(), params.end());
  std::vector<double> grad(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double x = p[i];
    const double h = std::max(relative * std::abs(x), floor);
    p[i] = x + h;
    const double fp = loss(p);
    p[i] = x - h;
    const double fm = loss(p);
    p[i] = x;
    grad[i] = (fp - fm) / ((x + h) - (x - h));
  }
  return grad;
}

// Unconstrained surfel parameters for fitting, 11 per surfel:
// center (3), rotation angles about world x and y applied to the initial
// tangent frame (2), log scales (2), logit opacity (1), color (3, clamped on decode).
class SurfelParameterization {
 public:
  static constexpr std::size_t kPerSurfel = 11;
  static constexpr double kOpacityClamp = 1e-4;

  explicit SurfelParameterization(const SurfelField& initial) {
    base_.reserve(initial.size());
    for (const Surfel& sf : initial.surfels) base_.push_back({sf.t_u, sf.t_v});
  }

  std::size_t surfel_count() const { return base_.size(); }

  std::vector<double> encode(const SurfelField& field) const {
    if (field.size() != base_.size())
      throw std::invalid_argument("SurfelParameterization: field size changed");
    std::vector<double> p;
    p.reserve(field.size() * kPerSurfel);
    for (const Surfel& sf : field.surfels) {
      const double op = std::clamp(sf.opacity, kOpacityClamp, 1.0 - kOpacityClamp);
      p.insert(p.end(), {sf.center.x(), sf.center.y(), sf.center.z(), 0.0, 0.0, std::log(sf.s_u),
                         std::log(sf.s_v), std::log(op / (1.0 - op)), sf.color.x(), sf.color.y(),
                         sf.color.z()});
    }
    return p;
  }

  // Angles in encode() are zero, so encode() on a field not equal to the
  // initial one only round-trips its centers, scales, opacity and color.
  SurfelField decode(std::span<const double> p) const {
    if (p.size() != base_.size() * kPerSurfel)
      throw std::invalid_argument("SurfelParameterization: parameter vector has wrong size");
    SurfelField field;
    field.surfels.resize(base_.size());
    for (std::size_t k = 0; k < base_.size(); ++k) {
      const double* q = p.data() + k * kPerSurfel;
      Surfel& sf = field.surfels[k];
      sf.center = {q[0], q[1], q[2]};
      const Mat3 rot = rotation(q[3], q[4]);
      sf.t_u = rot * base_[k].t_u;
      sf.t_v = rot * base_[k].t_v;
      sf.s_u = std::exp(q[5]);
      sf.s_v = std::exp(q[6]);
      sf.opacity = 1.0 / (1.0 + std::exp(-q[7]));
      sf.color = Rgb(q[8], q[9], q[10]).cwiseMax(0.0).cwiseMin(1.0);
    }
    return field;
  }

  static Mat3 rotation(double about_x, double about_y) {
    return (Eigen::AngleAxisd(about_x, Vec3::UnitX()) * Eigen::AngleAxisd(about_y, Vec3::UnitY()))
        .toRotationMatrix();
  }

 private:
  struct Frame {
    Vec3 t_u;
    Vec3 t_v;
  };
  std::vector<Frame> base_;
};

struct FitConfig {
  int iterations = 500;
  double step = 0.05;  // initial step length in parameter space
  LossWeights weights;
  Rgb background = Rgb::Zero();
  bool backtracking = true;
  int max_halvings = 20;
  double fd_relative = 1e-4;
  double fd_floor = 1e-6;
  double divergence_factor = 10.0;
};

struct FitResult {
  SurfelField field;
  std::vector<double> trace;  // loss before the first step, then after each iteration
  double initial_loss = 0.0;
  double final_loss = 0.0;
  int iterations_run = 0;
};

class FitDivergence : public std::runtime_error {
 public:
  FitDivergence(const std::string& what, std::vector<double> trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const std::vector<double>& trace() const { return trace_; }

 private:
  std::vector<double> trace_;
};

// Gradient descent along the normalized finite-difference gradient. With
// backtracking the step is halved until the loss does not increase (at most
// max_halvings times) and grown after each accepted step; the run stops early
// when no halving is accepted. Without backtracking every step is taken and a
// loss above divergence_factor * initial aborts with FitDivergence.
inline FitResult fit(const SurfelField& initial, std::span<const Camera> cams, const FitTargets& targets,
                     const FitConfig& cfg) {
  validate(cfg.weights);
  validate(targets, cams);
  if (cfg.iterations < 0) throw std::invalid_argument("fit: iterations must be >= 0");
  if (!(cfg.step > 0.0)) throw std::invalid_argument("fit: step must be positive");

  const SurfelParameterization param(initial);
  std::vector<double> p = param.encode(initial);
  const LossFn loss = [&](std::span<const double> q) {
    return evaluate_loss(param.decode(q), cams, targets, cfg.weights, cfg.background).total;
  };

  FitResult res;
  double current = loss(p);
  res.initial_loss = current;
  res.trace.push_back(current);
  double step = cfg.step;

  for (int it = 0; it < cfg.iterations; ++it) {
    const std::vector<double> grad = fd_gradient_relative(loss, p, cfg.fd_relative, cfg.fd_floor);
    double gnorm = 0.0;
    for (double g : grad) gnorm += g * g;
    gnorm = std::sqrt(gnorm);
    if (!std::isfinite(gnorm))
      throw FitDivergence("fit: non-finite gradient at iteration " + std::to_string(it), res.trace);
    if (gnorm == 0.0) break;

    std::vector<double> trial(p.size());
    const auto take = [&](double s) {
      for (std::size_t i = 0; i < p.size(); ++i) trial[i] = p[i] - s * grad[i] / gnorm;
      return loss(trial);
    };

    if (!cfg.backtracking) {
      current = take(step);
      p = trial;
      res.trace.push_back(current);
      res.iterations_run = it + 1;
      if (!std::isfinite(current) || current > cfg.divergence_factor * res.initial_loss)
        throw FitDivergence("fit: loss diverged at iteration " + std::to_string(it), res.trace);
      continue;
    }

    bool accepted = false;
    for (int halving = 0; halving <= cfg.max_halvings; ++halving) {
      const double candidate = take(step);
      if (std::isfinite(candidate) && candidate <= current) {
        p = trial;
        current = candidate;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    res.trace.push_back(current);
    res.iterations_run = it + 1;
    step *= 1.5;
  }

  res.field = param.decode(p);
  res.final_loss = current;
  return res;
}

// Mean unsigned angle (degrees) between surfel normals and a reference normal.
inline double mean_normal_error_deg(const SurfelField& field, const Vec3& reference) {
  if (field.empty()) return 0.0;
  const Vec3 ref = reference.normalized();
  double sum = 0.0;
  for (const Surfel& sf : field.surfels) {
    const double c = std::clamp(std::abs(sf.normal().normalized().dot(ref)), 0.0, 1.0);
    sum += std::acos(c);
  }
  return sum / static_cast<double>(field.size()) * 180.0 / std::numbers::pi;
}

}  // namespace nyqsurf

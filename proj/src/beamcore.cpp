#include "helmray/beamcore.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "helmray/closure.hpp"

namespace helmray {

Profile Profile::gaussian() { return supergaussian(2.0); }

Profile Profile::supergaussian(double order) {
  if (!(order > 0.0)) throw ValidationError("supergaussian order must be positive");
  Profile p;
  p.kind_ = order == 2.0 ? Kind::gaussian : Kind::supergaussian;
  p.order_ = order;
  return p;
}

Profile Profile::table(std::vector<std::pair<double, double>> samples) {
  if (samples.size() < 2) throw ValidationError("profile table needs at least two samples");
  std::sort(samples.begin(), samples.end());
  for (std::size_t i = 1; i < samples.size(); ++i)
    if (samples[i].first == samples[i - 1].first)
      throw ValidationError("profile table has duplicate abscissae");
  for (const auto& [s, r] : samples)
    if (r < 0.0 || !std::isfinite(r)) throw ValidationError("profile is negative at s = " + std::to_string(s));
  Profile p;
  p.kind_ = Kind::table;
  p.samples_ = std::move(samples);
  return p;
}

Profile Profile::uniform(double half_width) {
  return table({{-half_width, 1.0}, {half_width, 1.0}});
}

bool Profile::is_even() const {
  if (kind_ != Kind::table) return true;
  const std::size_t n = samples_.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (samples_[i].first != -samples_[n - 1 - i].first) return false;
    if (samples_[i].second != samples_[n - 1 - i].second) return false;
  }
  return true;
}

double Profile::operator()(double s) const {
  switch (kind_) {
    case Kind::gaussian: return std::exp(-s * s);
    case Kind::supergaussian: return std::exp(-std::pow(std::abs(s), order_));
    case Kind::table: {
      if (s < samples_.front().first || s > samples_.back().first) return 0.0;
      auto hi = std::lower_bound(samples_.begin(), samples_.end(), s,
                                 [](const auto& p, double v) { return p.first < v; });
      if (hi == samples_.begin()) return hi->second;
      auto lo = std::prev(hi);
      const double t = (s - lo->first) / (hi->first - lo->first);
      return lo->second + t * (hi->second - lo->second);
    }
  }
  return 0.0;
}

double alpha_from_epsilon(double epsilon) {
  const double r = epsilon / (2.0 * std::numbers::pi);
  return r * r;
}

double rayleigh_range(double epsilon) { return std::numbers::pi / epsilon; }

void LaunchConfig::validate() const {
  if (n_rays < min_rays)
    throw ValidationError("n_rays must be at least " + std::to_string(min_rays) + " (got " +
                          std::to_string(n_rays) + ")");
  if (!(epsilon > 0.0) || !(epsilon < 1.0)) {
    std::ostringstream os;
    os << "epsilon = lambda0/w0 must satisfy 0 < epsilon < 1 (got " << epsilon << ")";
    throw ValidationError(os.str());
  }
  if (!(extent > 0.0)) throw ValidationError("extent must be positive");
  if (!(direction.norm() > 0.0)) throw ValidationError("launch direction must be non-zero");
}

double LaunchConfig::alpha() const { return alpha_from_epsilon(epsilon); }

WaveFront build_launch(const LaunchConfig& cfg, const MediumSpec& medium, bool wave_potential_on) {
  cfg.validate();
  const Vec2 axis = cfg.direction.normalized();
  const Vec2 across(axis(1), -axis(0));  // maps +z to +x
  const int n = cfg.n_rays;
  const double denom = static_cast<double>(n - 1);

  WaveFront front;
  front.alpha = cfg.alpha();
  front.rays.resize(static_cast<std::size_t>(n));
  front.amp.resize(n);
  front.sigma.resize(n);
  double peak = 0.0;
  for (int i = 0; i < n; ++i) {
    // exact mirror symmetry: s(n-1-i) == -s(i)
    const double s = cfg.extent * static_cast<double>(2 * i - (n - 1)) / denom;
    auto& ray = front.rays[static_cast<std::size_t>(i)];
    ray.xi = cfg.origin + s * across;
    ray.kappa = axis;
    const double r = cfg.profile(s);
    if (r < 0.0 || !std::isfinite(r))
      throw ValidationError("profile is negative at s = " + std::to_string(s));
    front.amp(i) = r;
    front.sigma(i) = s;
    peak = std::max(peak, r);
  }
  if (!(peak > 0.0)) throw ValidationError("profile vanishes on the launch segment");
  front.amp /= peak;
  front.tube_flux = Eigen::ArrayXd::Zero(n);
  if (wave_potential_on) mark_dead_rays(front);
  return dispersion_init(std::move(front), medium, wave_potential_on);
}

WaveFront dispersion_init(WaveFront front, const MediumSpec& medium, bool wave_potential_on) {
  constexpr int max_passes = 50;
  const auto m = static_cast<Eigen::Index>(front.size());
  const Eigen::ArrayXd widths = cell_widths(front.sigma);
  for (Eigen::Index i = 0; i < m; ++i)
    if (!(front.rays[static_cast<std::size_t>(i)].kappa.norm() > 0.0))
      throw ValidationError("ray " + std::to_string(i) + " has no direction");

  // W depends weakly on |kappa| through the tube fluxes, so the dispersion
  // relation is iterated to a fixed point.
  Eigen::ArrayXd w = Eigen::ArrayXd::Zero(m);
  for (int pass = 0; pass < max_passes; ++pass) {
    double change = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      auto& ray = front.rays[static_cast<std::size_t>(i)];
      const double k_sq = medium.eff_index_sq(ray.xi) - 2.0 * w(i);
      if (!(k_sq > 0.0))
        throw NumericalError("evanescent launch at ray " + std::to_string(i) +
                             ": n^2 - 2W = " + std::to_string(k_sq), i);
      const double norm = ray.kappa.norm();
      change = std::max(change, std::abs(std::sqrt(k_sq) - norm));
      ray.kappa *= std::sqrt(k_sq) / norm;
      front.tube_flux(i) = ray.alive ? front.amp(i) * front.amp(i) * std::sqrt(k_sq) * widths(i) : 0.0;
    }
    if (!wave_potential_on || (pass > 0 && change <= 1e-15)) break;
    w = tube_wave_potential(front).w_tilde;
  }
  return front;
}

// ---------------------------------------------------------------------------

DimensionlessProblem optical_matter_map(const OpticalParams& p) {
  if (!(p.wavelength > 0.0) || !(p.waist > 0.0))
    throw ValidationError("wavelength and waist must be positive");
  if (p.medium.mode() != MediumSpec::Mode::optical)
    throw ValidationError("optical parameters need an optical medium");
  DimensionlessProblem d;
  d.mode = MediumSpec::Mode::optical;
  d.k0 = 2.0 * std::numbers::pi / p.wavelength;
  d.wavelength = p.wavelength;
  d.epsilon = p.wavelength / p.waist;
  d.alpha = 1.0 / ((d.k0 * p.waist) * (d.k0 * p.waist));
  d.length_scale = p.waist;
  d.medium = p.medium;
  return d;
}

DimensionlessProblem optical_matter_map(const MatterParams& p) {
  if (!(p.energy > 0.0)) throw ValidationError("energy E must be positive (got " + std::to_string(p.energy) + ")");
  if (!(p.mass > 0.0) || !(p.hbar > 0.0) || !(p.waist > 0.0))
    throw ValidationError("mass, hbar and waist must be positive");
  const double p0 = std::sqrt(2.0 * p.mass * p.energy);
  DimensionlessProblem d;
  d.mode = MediumSpec::Mode::matter;
  d.k0 = p0 / p.hbar;
  d.wavelength = 2.0 * std::numbers::pi * p.hbar / p0;
  d.epsilon = d.wavelength / p.waist;
  const double r = p.hbar / (p0 * p.waist);
  d.alpha = r * r;
  d.length_scale = p.waist;
  if (!p.potential) {
    d.medium = MediumSpec::uniform_matter(0.0);
  } else {
    const double w0 = p.waist;
    const double e = p.energy;
    MediumSpec::VectorField grad;
    if (p.grad_potential)
      grad = [g = p.grad_potential, w0, e](const Vec2& xi) -> Vec2 { return g(w0 * xi) * (w0 / e); };
    d.medium = MediumSpec::matter(
        [v = p.potential, w0, e](const Vec2& xi) { return v(w0 * xi) / e; }, std::move(grad));
  }
  return d;
}

MatterParams to_matter(const DimensionlessProblem& problem, double mass, double hbar, double waist) {
  if (!(problem.alpha > 0.0)) throw ValidationError("alpha must be positive");
  MatterParams p;
  p.mass = mass;
  p.hbar = hbar;
  p.waist = waist;
  p.energy = hbar * hbar / (2.0 * mass * problem.alpha * waist * waist);
  p.potential = [m = problem.medium, e = p.energy, waist](const Vec2& r) {
    return e * (1.0 - m.eff_index_sq(r / waist));
  };
  return p;
}

bool equivalent(const DimensionlessProblem& a, const DimensionlessProblem& b,
                std::span<const Vec2> probes, double rtol) {
  auto close = [rtol](double x, double y) {
    return std::abs(x - y) <= rtol * std::max({std::abs(x), std::abs(y), 1e-300});
  };
  if (!close(a.alpha, b.alpha)) return false;
  for (const auto& xi : probes)
    if (!close(a.medium.eff_index_sq(xi), b.medium.eff_index_sq(xi))) return false;
  return true;
}

}  // namespace helmray

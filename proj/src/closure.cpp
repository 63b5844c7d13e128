#include "helmray/closure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace helmray {

Eigen::ArrayXd tangent_orientation(const Points<double>& xi, const Points<double>& kappa) {
  const Eigen::Index m = xi.cols();
  Eigen::ArrayXd sign(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index lo = i == 0 ? 0 : i - 1;
    const Eigen::Index hi = i == m - 1 ? m - 1 : i + 1;
    const Vec2 chord = xi.col(hi) - xi.col(lo);
    const Vec2 perp(kappa(1, i), -kappa(0, i));
    const double s = chord.dot(perp);
    sign(i) = s > 0.0 ? 1.0 : (s < 0.0 ? -1.0 : 0.0);
  }
  return sign;
}

Eigen::ArrayXd arc_coordinate(const Eigen::ArrayXd& spacing) {
  Eigen::ArrayXd s(spacing.size() + 1);
  s(0) = 0.0;
  for (Eigen::Index j = 0; j < spacing.size(); ++j) s(j + 1) = s(j) + spacing(j);
  return s - 0.5 * s(spacing.size());
}

std::vector<Eigen::Index> alive_indices(const WaveFront& front) {
  std::vector<Eigen::Index> idx;
  idx.reserve(front.size());
  for (std::size_t i = 0; i < front.size(); ++i)
    if (front.rays[i].alive) idx.push_back(static_cast<Eigen::Index>(i));
  return idx;
}

Eigen::ArrayXd cell_widths(const Eigen::ArrayXd& sigma) {
  const Eigen::Index m = sigma.size();
  Eigen::ArrayXd w(m);
  w(0) = sigma(1) - sigma(0);
  w(m - 1) = sigma(m - 1) - sigma(m - 2);
  for (Eigen::Index i = 1; i + 1 < m; ++i) w(i) = 0.5 * (sigma(i + 1) - sigma(i - 1));
  return w;
}

std::size_t mark_dead_rays(WaveFront& front) {
  double peak = 0.0;
  for (std::size_t i = 0; i < front.size(); ++i)
    if (front.rays[i].alive) peak = std::max(peak, front.amp(static_cast<Eigen::Index>(i)));
  std::size_t alive = 0;
  for (std::size_t i = 0; i < front.size(); ++i) {
    auto& ray = front.rays[i];
    if (ray.alive && !(front.amp(static_cast<Eigen::Index>(i)) >= dead_ray_cutoff * peak)) {
      ray.alive = false;
      front.amp(static_cast<Eigen::Index>(i)) = 0.0;
    }
    alive += ray.alive ? 1 : 0;
  }
  return alive;
}

namespace {

void gather(const WaveFront& front, const std::vector<Eigen::Index>& idx, Points<double>& xi,
            Points<double>& kappa) {
  const auto m = static_cast<Eigen::Index>(idx.size());
  xi.resize(2, m);
  kappa.resize(2, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    xi.col(j) = front.rays[static_cast<std::size_t>(idx[j])].xi;
    kappa.col(j) = front.rays[static_cast<std::size_t>(idx[j])].kappa;
  }
}

void require_stencil_support(std::size_t alive) {
  if (alive < static_cast<std::size_t>(min_alive_rays))
    throw NumericalError("fewer than " + std::to_string(min_alive_rays) +
                         " alive rays left on the front");
}

}  // namespace

WaveFront transport_amplitude(const WaveFront& front, FoldPolicy policy) {
  const auto idx = alive_indices(front);
  require_stencil_support(idx.size());
  Points<double> xi, kappa;
  gather(front, idx, xi, kappa);
  const Eigen::ArrayXd orient = tangent_orientation(xi, kappa);
  auto geo = front_geometry<double>(xi, kappa, orient.cwiseEqual(0.0).select(1.0, orient));
  const bool degenerate = (orient == 0.0).any();
  if (geo.fold >= 0 || degenerate) {
    if (policy == FoldPolicy::halt) {
      const Eigen::Index j = geo.fold >= 0 ? geo.fold : 0;
      throw CausticEncountered(idx[static_cast<std::size_t>(j)],
                               front.rays[static_cast<std::size_t>(idx[0])].tau);
    }
    geo.spacing = geo.spacing.abs().max(std::numeric_limits<double>::min());
    geo.width = cell_widths(arc_coordinate(geo.spacing));
  }
  Eigen::ArrayXd flux(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) flux(static_cast<Eigen::Index>(j)) = front.tube_flux(idx[j]);
  const Eigen::ArrayXd ell = transported_log_amplitude<double>(flux, kappa, geo.width);

  WaveFront out = front;
  out.amp.setZero();
  const Eigen::ArrayXd sigma = arc_coordinate(geo.spacing);
  for (std::size_t j = 0; j < idx.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    out.amp(idx[j]) = std::exp(ell(jj));
    out.sigma(idx[j]) = sigma(jj);
  }
  return out;
}

ClosureDiagnostics wave_potential(const WaveFront& front) {
  const auto idx = alive_indices(front);
  require_stencil_support(idx.size());
  const auto m = static_cast<Eigen::Index>(idx.size());
  Eigen::ArrayXd ell(m), spacing(m - 1);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double a = front.amp(idx[static_cast<std::size_t>(j)]);
    if (!(a > 0.0)) require_stencil_support(0);
    ell(j) = std::log(a);
    if (j > 0) spacing(j - 1) = front.sigma(idx[static_cast<std::size_t>(j)]) -
                                front.sigma(idx[static_cast<std::size_t>(j - 1)]);
  }
  if ((spacing <= 0.0).any()) {
    Eigen::Index j = 0;
    while (spacing(j) > 0.0) ++j;
    throw CausticEncountered(idx[static_cast<std::size_t>(j)],
                             front.rays[static_cast<std::size_t>(idx[0])].tau);
  }
  const ThreePointStencil<double> stencil(spacing);
  const Eigen::ArrayXd w = log_wave_potential<double>(ell, stencil, front.alpha);

  ClosureDiagnostics diag;
  diag.w_tilde = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(front.size()));
  diag.grad_w = diag.w_tilde;
  diag.long_w = diag.w_tilde;
  for (Eigen::Index j = 0; j < m; ++j) diag.w_tilde(idx[static_cast<std::size_t>(j)]) = w(j);
  return diag;
}

ClosureDiagnostics wave_potential_gradient(const WaveFront& front, ClosureDiagnostics diag) {
  const auto idx = alive_indices(front);
  require_stencil_support(idx.size());
  const auto m = static_cast<Eigen::Index>(idx.size());
  Eigen::ArrayXd w(m), spacing(m - 1);
  for (Eigen::Index j = 0; j < m; ++j) {
    w(j) = diag.w_tilde(idx[static_cast<std::size_t>(j)]);
    if (j > 0) spacing(j - 1) = front.sigma(idx[static_cast<std::size_t>(j)]) -
                                front.sigma(idx[static_cast<std::size_t>(j - 1)]);
  }
  const ThreePointStencil<double> stencil(spacing);
  const Eigen::ArrayXd dw = stencil.apply_first(w);
  diag.grad_w = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(front.size()));
  for (Eigen::Index j = 0; j < m; ++j) diag.grad_w(idx[static_cast<std::size_t>(j)]) = dw(j);
  return diag;
}

ClosureDiagnostics tube_wave_potential(const WaveFront& front) {
  const auto idx = alive_indices(front);
  require_stencil_support(idx.size());
  const auto m = static_cast<Eigen::Index>(idx.size());
  const double tau = front.rays[static_cast<std::size_t>(idx[0])].tau;
  Points<double> xi, kappa;
  gather(front, idx, xi, kappa);
  const Eigen::ArrayXd orient = tangent_orientation(xi, kappa);
  for (Eigen::Index j = 0; j < m; ++j)
    if (orient(j) == 0.0) throw CausticEncountered(idx[static_cast<std::size_t>(j)], tau);
  const auto geo = front_geometry<double>(xi, kappa, orient);
  if (geo.fold >= 0) throw CausticEncountered(idx[static_cast<std::size_t>(geo.fold)], tau);
  Eigen::ArrayXd flux(m);
  for (Eigen::Index j = 0; j < m; ++j) flux(j) = front.tube_flux(idx[static_cast<std::size_t>(j)]);
  const auto tubes = tube_closure<double>(flux, kappa, geo.spacing, front.alpha);

  ClosureDiagnostics diag;
  diag.w_tilde = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(front.size()));
  diag.grad_w = diag.w_tilde;
  diag.long_w = diag.w_tilde;
  for (Eigen::Index j = 0; j < m; ++j) {
    diag.w_tilde(idx[static_cast<std::size_t>(j)]) = tubes.w(j);
    diag.grad_w(idx[static_cast<std::size_t>(j)]) = tubes.w_sigma(j);
  }
  return diag;
}

}  // namespace helmray

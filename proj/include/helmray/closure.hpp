#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "helmray/types.hpp"

namespace helmray {

/// Rays with R below this fraction of the front maximum leave the stencils.
inline constexpr double dead_ray_cutoff = 1e-12;
inline constexpr Eigen::Index min_alive_rays = 5;

template <class Scalar>
using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
template <class Scalar>
using Points = Eigen::Matrix<Scalar, 2, Eigen::Dynamic>;

/// Three-point Lagrange derivative weights on the non-uniform grid defined by
/// consecutive spacings. Row i reads nodes start(i) .. start(i)+2; interior rows
/// are centred, the two end rows are one-sided. Only the two outer weights are
/// stored: the middle one is minus their sum.
template <class Scalar>
struct ThreePointStencil {
  Eigen::Array<Eigen::Index, Eigen::Dynamic, 1> start;
  Eigen::Array<Scalar, 2, Eigen::Dynamic> first;
  Eigen::Array<Scalar, 2, Eigen::Dynamic> second;

  explicit ThreePointStencil(const ArrayX<Scalar>& spacing) {
    const Eigen::Index m = spacing.size() + 1;
    start.resize(m);
    first.resize(2, m);
    second.resize(2, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      Scalar a, b, c;  // node offsets from the evaluation point
      if (i == 0) {
        start(i) = 0;
        a = Scalar(0.0);
        b = spacing(0);
        c = spacing(0) + spacing(1);
      } else if (i == m - 1) {
        start(i) = m - 3;
        a = -(spacing(m - 3) + spacing(m - 2));
        b = -spacing(m - 2);
        c = Scalar(0.0);
      } else {
        start(i) = i - 1;
        a = -spacing(i - 1);
        b = Scalar(0.0);
        c = spacing(i);
      }
      const Scalar da = (a - b) * (a - c);
      const Scalar dc = (c - a) * (c - b);
      first(0, i) = -(b + c) / da;
      first(1, i) = -(a + b) / dc;
      second(0, i) = Scalar(2.0) / da;
      second(1, i) = Scalar(2.0) / dc;
    }
  }

  [[nodiscard]] Eigen::Index size() const { return start.size(); }

  [[nodiscard]] ArrayX<Scalar> apply_first(const ArrayX<Scalar>& f) const {
    return apply(first, f);
  }
  [[nodiscard]] ArrayX<Scalar> apply_second(const ArrayX<Scalar>& f) const {
    return apply(second, f);
  }

 private:
  [[nodiscard]] ArrayX<Scalar> apply(const Eigen::Array<Scalar, 2, Eigen::Dynamic>& w,
                                     const ArrayX<Scalar>& f) const {
    ArrayX<Scalar> out(size());
    for (Eigen::Index i = 0; i < size(); ++i) {
      const Eigen::Index s = start(i);
      // Differences against the middle node make constants vanish exactly
      // and give mirrored inputs mirrored bits.
      out(i) = w(0, i) * (f(s) - f(s + 1)) + w(1, i) * (f(s + 2) - f(s + 1));
    }
    return out;
  }
};

/// Sign (+1/-1) per ray that orients the perpendicular of kappa along
/// increasing ray index. Even in kappa. Zero marks a degenerate chord.
[[nodiscard]] Eigen::ArrayXd tangent_orientation(const Points<double>& xi,
                                                 const Points<double>& kappa);

/// Transverse geometry of an ordered front.
template <class Scalar>
struct FrontGeometry {
  ArrayX<Scalar> spacing;   // segment lengths projected on the mean local tangent
  ArrayX<Scalar> width;     // per-ray cell width
  Points<Scalar> tangent;   // unit vectors perpendicular to kappa
  Eigen::Index fold = -1;   // first segment with spacing <= 0, or -1
};

template <class Scalar>
[[nodiscard]] FrontGeometry<Scalar> front_geometry(const Points<Scalar>& xi,
                                                   const Points<Scalar>& kappa,
                                                   const Eigen::ArrayXd& orientation) {
  using std::sqrt;
  const Eigen::Index m = xi.cols();
  FrontGeometry<Scalar> g;
  g.tangent.resize(2, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Scalar norm = sqrt(kappa(0, i) * kappa(0, i) + kappa(1, i) * kappa(1, i));
    g.tangent(0, i) = Scalar(orientation(i)) * kappa(1, i) / norm;
    g.tangent(1, i) = -Scalar(orientation(i)) * kappa(0, i) / norm;
  }
  g.spacing.resize(m - 1);
  for (Eigen::Index j = 0; j + 1 < m; ++j) {
    const Scalar tx = g.tangent(0, j) + g.tangent(0, j + 1);
    const Scalar tz = g.tangent(1, j) + g.tangent(1, j + 1);
    const Scalar tn = sqrt(tx * tx + tz * tz);
    g.spacing(j) = ((xi(0, j + 1) - xi(0, j)) * tx + (xi(1, j + 1) - xi(1, j)) * tz) / tn;
    if (g.fold < 0 && !(g.spacing(j) > Scalar(0.0))) g.fold = j;
  }
  g.width.resize(m);
  g.width(0) = g.spacing(0);
  g.width(m - 1) = g.spacing(m - 2);
  for (Eigen::Index i = 1; i + 1 < m; ++i)
    g.width(i) = Scalar(0.5) * (g.spacing(i - 1) + g.spacing(i));
  return g;
}

/// log R from tube flux conservation: R^2 |kappa| w = flux.
template <class Scalar>
[[nodiscard]] ArrayX<Scalar> transported_log_amplitude(const Eigen::ArrayXd& flux,
                                                       const Points<Scalar>& kappa,
                                                       const ArrayX<Scalar>& width) {
  using std::log;
  using std::sqrt;
  ArrayX<Scalar> ell(width.size());
  for (Eigen::Index i = 0; i < width.size(); ++i) {
    const Scalar k = sqrt(kappa(0, i) * kappa(0, i) + kappa(1, i) * kappa(1, i));
    ell(i) = Scalar(0.5) * (Scalar(std::log(flux(i))) - log(k) - log(width(i)));
  }
  return ell;
}

/// W = -(alpha/2) [ (ln R)'' + ((ln R)')^2 ] along the front.
template <class Scalar>
[[nodiscard]] ArrayX<Scalar> log_wave_potential(const ArrayX<Scalar>& log_amp,
                                                const ThreePointStencil<Scalar>& stencil,
                                                double alpha, ArrayX<Scalar>* log_slope = nullptr) {
  ArrayX<Scalar> d1 = stencil.apply_first(log_amp);
  ArrayX<Scalar> d2 = stencil.apply_second(log_amp);
  ArrayX<Scalar> w = Scalar(-0.5 * alpha) * (d2 + d1 * d1);
  if (log_slope != nullptr) *log_slope = std::move(d1);
  return w;
}

/// Wave potential evaluated on ray tubes (the cells between neighbouring
/// rays) and carried back to the rays.
template <class Scalar>
struct TubeClosure {
  ArrayX<Scalar> w;        // per ray, interpolated from the tubes
  ArrayX<Scalar> w_sigma;  // per ray, difference of the two adjacent tubes
  ArrayX<Scalar> w_tube;
  ArrayX<Scalar> log_amp_tube;
};

/// Tube i joins rays i and i+1 and carries the mean of their fluxes. ln R on
/// a tube follows from R^2 |kappa| s = flux with s the projected spacing and
/// ln|kappa| averaged over the two rays.
template <class Scalar>
[[nodiscard]] TubeClosure<Scalar> tube_closure(const Eigen::ArrayXd& flux,
                                               const Points<Scalar>& kappa,
                                               const ArrayX<Scalar>& spacing, double alpha) {
  using std::log;
  const Eigen::Index m = kappa.cols();
  const Eigen::Index t = m - 1;
  ArrayX<Scalar> log_k(m);
  for (Eigen::Index i = 0; i < m; ++i)
    log_k(i) = Scalar(0.5) * log(kappa(0, i) * kappa(0, i) + kappa(1, i) * kappa(1, i));
  TubeClosure<Scalar> out;
  out.log_amp_tube.resize(t);
  for (Eigen::Index j = 0; j < t; ++j)
    out.log_amp_tube(j) = Scalar(0.5) * (Scalar(std::log(0.5 * (flux(j) + flux(j + 1)))) -
                                         Scalar(0.5) * (log_k(j) + log_k(j + 1)) - log(spacing(j)));
  ArrayX<Scalar> centre_gap(t - 1);
  for (Eigen::Index j = 0; j + 1 < t; ++j) centre_gap(j) = Scalar(0.5) * (spacing(j) + spacing(j + 1));
  const ThreePointStencil<Scalar> stencil(centre_gap);
  const ArrayX<Scalar> d1 = stencil.apply_first(out.log_amp_tube);
  const ArrayX<Scalar> d2 = stencil.apply_second(out.log_amp_tube);
  out.w_tube = Scalar(-0.5 * alpha) * (d2 + d1 * d1);

  out.w.resize(m);
  out.w_sigma.resize(m);
  for (Eigen::Index i = 1; i + 1 < m; ++i) {
    const Scalar gap = centre_gap(i - 1);
    out.w(i) = (Scalar(0.5) * spacing(i) * out.w_tube(i - 1) +
                Scalar(0.5) * spacing(i - 1) * out.w_tube(i)) / gap;
    out.w_sigma(i) = (out.w_tube(i) - out.w_tube(i - 1)) / gap;
  }
  out.w_sigma(0) = out.w_sigma(1);
  out.w_sigma(m - 1) = out.w_sigma(m - 2);
  out.w(0) = out.w_tube(0) - Scalar(0.5) * spacing(0) * out.w_sigma(0);
  out.w(m - 1) = out.w_tube(t - 1) + Scalar(0.5) * spacing(m - 2) * out.w_sigma(m - 1);
  return out;
}

/// Which of the two caustic responses the transport step takes.
enum class FoldPolicy {
  halt,    // throw CausticEncountered
  absorb,  // use |spacing| (geometrical-optics runs cross foci freely)
};

/// Recomputes sigma and amp of the alive rays from positions, kappa and the
/// conserved tube fluxes. Dead rays keep amp = 0.
[[nodiscard]] WaveFront transport_amplitude(const WaveFront& front,
                                            FoldPolicy policy = FoldPolicy::halt);

/// Wave potential at every alive ray from the front's amp and sigma.
/// Throws NumericalError when fewer than min_alive_rays remain.
[[nodiscard]] ClosureDiagnostics wave_potential(const WaveFront& front);

/// Fills grad_w = dW/dsigma by central differences on the sigma grid.
[[nodiscard]] ClosureDiagnostics wave_potential_gradient(const WaveFront& front,
                                                         ClosureDiagnostics diag);

/// Wave potential and its transverse derivative at every alive ray from the
/// tube closure of the current positions, directions and fluxes. This is the
/// field that drives the integrator.
[[nodiscard]] ClosureDiagnostics tube_wave_potential(const WaveFront& front);

/// Marks rays with amp below dead_ray_cutoff * max(amp) as dead.
/// Returns the number of alive rays.
std::size_t mark_dead_rays(WaveFront& front);

/// Indices of alive rays in ray order.
[[nodiscard]] std::vector<Eigen::Index> alive_indices(const WaveFront& front);

/// Per-ray cell widths from a sigma sequence, using the launch convention.
[[nodiscard]] Eigen::ArrayXd cell_widths(const Eigen::ArrayXd& sigma);

/// Running sum of the spacings, shifted so that the front's middle sits at 0.
[[nodiscard]] Eigen::ArrayXd arc_coordinate(const Eigen::ArrayXd& spacing);

}  // namespace helmray

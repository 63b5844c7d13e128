#include "helmray/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

#include <Eigen/SparseCore>
#include <unsupported/Eigen/AutoDiff>

namespace helmray {

namespace {

/// Derivative slot 0 carries the flow derivative; the others carry the
/// sensitivity to |kappa| of rays grouped by index modulo sensitivity_colours.
/// W at a ray depends on at most five consecutive rays, so five colours keep
/// every dependency separate.
constexpr int sensitivity_colours = 5;
using Dual = Eigen::AutoDiffScalar<Eigen::Matrix<double, 1 + sensitivity_colours, 1>>;

/// Band elimination without pivoting on a matrix stored by diagonals. The
/// diagonal dominates while rays are resolved, so a vanishing pivot is an
/// error rather than a reason to pivot.
Eigen::ArrayXd band_solve(Eigen::ArrayXXd mat, Eigen::ArrayXd rhs) {
  constexpr Eigen::Index band = sensitivity_colours - 1;
  const Eigen::Index m = rhs.size();
  for (Eigen::Index k = 0; k < m; ++k) {
    const double pivot = mat(k, band);
    if (!(std::abs(pivot) > 1e-8)) throw NumericalError("closure kick system is singular");
    for (Eigen::Index i = k + 1; i <= std::min(m - 1, k + band); ++i) {
      const double f = mat(i, k - i + band) / pivot;
      if (f == 0.0) continue;
      for (Eigen::Index j = k; j <= std::min(m - 1, k + band); ++j) mat(i, j - i + band) -= f * mat(k, j - k + band);
      rhs(i) -= f * rhs(k);
    }
  }
  Eigen::ArrayXd x(m);
  for (Eigen::Index k = m - 1; k >= 0; --k) {
    double acc = rhs(k);
    for (Eigen::Index j = k + 1; j <= std::min(m - 1, k + band); ++j) acc -= mat(k, j - k + band) * x(j);
    x(k) = acc / mat(k, band);
  }
  return x;
}

/// Solves (diag(d) + S) u = rhs, where S is the banded sensitivity of W_i to
/// a kick u_j along kappa_j, nonzero only for |i - j| < sensitivity_colours.
/// The system is eliminated once from each end and the two answers averaged,
/// which makes the result exactly covariant under reversing the ray order.
Eigen::ArrayXd solve_kick_system(const std::vector<Eigen::Triplet<double>>& sensitivity,
                                 const Eigen::ArrayXd& d, const Eigen::ArrayXd& rhs) {
  constexpr Eigen::Index band = sensitivity_colours - 1;
  const Eigen::Index m = d.size();
  // Row i of the band holds columns i - band .. i + band.
  Eigen::ArrayXXd mat = Eigen::ArrayXXd::Zero(m, 2 * band + 1);
  mat.col(band) = d;
  for (const auto& t : sensitivity) mat(t.row(), t.col() - t.row() + band) += t.value();
  // Reversing rows and columns maps band offset o to -o.
  const Eigen::ArrayXXd flipped = mat.colwise().reverse().rowwise().reverse();
  const Eigen::ArrayXd forward = band_solve(mat, rhs);
  const Eigen::ArrayXd backward = band_solve(flipped, rhs.reverse());
  return 0.5 * (forward + backward.reverse());
}

}  // namespace

void RunConfig::validate() const {
  if (!(d_tau > 0.0)) throw ValidationError("d_tau must be positive");
  if (output_every < 1) throw ValidationError("output cadence must be at least 1");
  if (max_steps < 0) throw ValidationError("max_steps must be non-negative");
}

double step_rate(Stepping stepping, const Vec2& kappa) {
  switch (stepping) {
    case Stepping::equal_time: return 1.0;
    case Stepping::equal_phase: return 1.0 / kappa.squaredNorm();
    case Stepping::equal_z: return 1.0 / std::abs(kappa.y());
  }
  return 1.0;
}

ForceEvaluation evaluate_forces(const WaveFront& front, const MediumSpec& medium,
                                bool wave_potential_on, Stepping stepping) {
  const auto n = static_cast<Eigen::Index>(front.size());
  ForceEvaluation out;
  out.force.resize(2, n);
  for (Eigen::Index i = 0; i < n; ++i)
    out.force.col(i) = 0.5 * medium.grad_eff_index_sq(front.rays[static_cast<std::size_t>(i)].xi);
  out.diag.w_tilde = Eigen::ArrayXd::Zero(n);
  out.diag.grad_w = out.diag.w_tilde;
  out.diag.long_w = out.diag.w_tilde;

  if (!wave_potential_on) {
    const WaveFront t = transport_amplitude(front, FoldPolicy::absorb);
    out.amp = t.amp;
    out.sigma = t.sigma;
    return out;
  }

  const auto idx = alive_indices(front);
  if (idx.size() < static_cast<std::size_t>(min_alive_rays))
    throw NumericalError("fewer than " + std::to_string(min_alive_rays) + " alive rays left on the front");
  const auto m = static_cast<Eigen::Index>(idx.size());
  const double tau = front.rays[static_cast<std::size_t>(idx[0])].tau;

  Points<double> xi(2, m), kappa(2, m);
  Eigen::ArrayXd flux(m), knorm(m), rate(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const auto& ray = front.rays[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])];
    xi.col(j) = ray.xi;
    kappa.col(j) = ray.kappa;
    knorm(j) = ray.kappa.norm();
    rate(j) = step_rate(stepping, ray.kappa);
    flux(j) = front.tube_flux(idx[static_cast<std::size_t>(j)]);
  }
  const Eigen::ArrayXd orient = tangent_orientation(xi, kappa);
  for (Eigen::Index j = 0; j < m; ++j)
    if (orient(j) == 0.0) throw CausticEncountered(idx[static_cast<std::size_t>(j)], tau);

  const auto geo = front_geometry<double>(xi, kappa, orient);
  if (geo.fold >= 0) throw CausticEncountered(idx[static_cast<std::size_t>(geo.fold)], tau);
  const auto tubes = tube_closure<double>(flux, kappa, geo.spacing, front.alpha);

  // The front fixes dW/dsigma across the rays. The part of -grad W along
  // each ray is left open and chosen so that (kappa^2 - n^2)/2 + W is
  // conserved by the flow: completing the force by mu_i along kappa_i and
  // writing u_i = rate_i mu_i,
  //   |kappa_i| u_i + dW_i/dtau = 0,
  // and dW_i/dtau = a_i + sum_j S_ij u_j is linear in the kicks.
  Points<double> known(2, m), khat(2, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    khat.col(j) = kappa.col(j) / knorm(j);
    known.col(j) = out.force.col(idx[static_cast<std::size_t>(j)]) - tubes.w_sigma(j) * geo.tangent.col(j);
  }

  Points<Dual> xi_d(2, m), kappa_d(2, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const int colour = 1 + static_cast<int>(j % sensitivity_colours);
    for (int c = 0; c < 2; ++c) {
      xi_d(c, j) = Dual(xi(c, j), Dual::DerType::Zero());
      xi_d(c, j).derivatives()(0) = rate(j) * kappa(c, j);
      kappa_d(c, j) = Dual(kappa(c, j), Dual::DerType::Zero());
      kappa_d(c, j).derivatives()(0) = rate(j) * known(c, j);
      kappa_d(c, j).derivatives()(colour) = khat(c, j);
    }
  }
  const auto geo_d = front_geometry<Dual>(xi_d, kappa_d, orient);
  const auto tubes_d = tube_closure<Dual>(flux, kappa_d, geo_d.spacing, front.alpha);
  std::vector<Eigen::Triplet<double>> sensitivity;
  sensitivity.reserve(static_cast<std::size_t>(sensitivity_colours * m));
  Eigen::ArrayXd rhs(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& der = tubes_d.w(i).derivatives();
    rhs(i) = -der(0);
    const Eigen::Index lo = std::clamp<Eigen::Index>(i - sensitivity_colours / 2, 0, m - sensitivity_colours);
    for (Eigen::Index j = lo; j < lo + sensitivity_colours; ++j) {
      const double v = der(1 + j % sensitivity_colours);
      if (v != 0.0) sensitivity.emplace_back(i, j, v);
    }
  }
  const Eigen::ArrayXd kick = solve_kick_system(sensitivity, knorm, rhs);
  const Eigen::ArrayXd ell = transported_log_amplitude<double>(flux, kappa, geo.width);

  out.amp = Eigen::ArrayXd::Zero(n);
  out.sigma = Eigen::ArrayXd::Constant(n, std::nan(""));
  const Eigen::ArrayXd sigma = arc_coordinate(geo.spacing);
  for (Eigen::Index j = 0; j < m; ++j) {
    const Eigen::Index i = idx[static_cast<std::size_t>(j)];
    const double long_force = kick(j) / rate(j);
    out.force.col(i) = known.col(j) + long_force * khat.col(j);
    out.diag.w_tilde(i) = tubes.w(j);
    out.diag.grad_w(i) = tubes.w_sigma(j);
    out.diag.long_w(i) = -long_force;
    out.sigma(i) = sigma(j);
    out.amp(i) = std::exp(ell(j));
  }
  return out;
}

Stepper::Stepper(WaveFront front, const MediumSpec& medium, RunConfig cfg)
    : front_(std::move(front)), medium_(medium), cfg_(cfg) {
  cfg_.validate();
  refresh_front_closure();
}

void Stepper::refresh_front_closure() {
  forces_ = evaluate_forces(front_, medium_, cfg_.wave_potential_on, cfg_.stepping);
  previous_force_ = forces_.force;
  front_.amp = forces_.amp;
  front_.sigma = forces_.sigma;
}

void Stepper::step() {
  constexpr int max_iterations = 100;
  const auto n = static_cast<Eigen::Index>(front_.size());
  const double h = cfg_.d_tau;
  const auto rate = [this](const Vec2& kappa) { return step_rate(cfg_.stepping, kappa); };
  WaveFront next = front_;

  // Opening half kick and drift. The drift uses the rate at the half kick so
  // that the step map is symmetric under kappa -> -kappa.
  Points<double> kappa_half(2, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    auto& ray = next.rays[static_cast<std::size_t>(i)];
    kappa_half.col(i) = ray.kappa + 0.5 * h * rate(ray.kappa) * forces_.force.col(i);
    const double dt = h * rate(kappa_half.col(i));
    ray.xi += dt * kappa_half.col(i);
    ray.phase += kappa_half.col(i).squaredNorm() * dt;
    ray.tau += dt;
  }

  // Closing half kick, kappa = kappa_half + h/2 q(kappa) F(xi, kappa), by fixed point.
  Points<double> k(2, n);
  // Start from the force extrapolated linearly over the previous step.
  const Points<double> guess = 2.0 * forces_.force - previous_force_;
  for (Eigen::Index i = 0; i < n; ++i)
    k.col(i) = kappa_half.col(i) + 0.5 * h * rate(front_.rays[static_cast<std::size_t>(i)].kappa) * guess.col(i);
  ForceEvaluation f;
  double last_delta = std::numeric_limits<double>::infinity();
  iterations_ = 0;
  while (true) {
    for (Eigen::Index i = 0; i < n; ++i) next.rays[static_cast<std::size_t>(i)].kappa = k.col(i);
    f = evaluate_forces(next, medium_, cfg_.wave_potential_on, cfg_.stepping);
    ++iterations_;
    double delta = 0.0, scale = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vec2 updated = kappa_half.col(i) + 0.5 * h * rate(k.col(i)) * f.force.col(i);
      delta = std::max(delta, (updated - k.col(i)).cwiseAbs().maxCoeff());
      scale = std::max(scale, updated.cwiseAbs().maxCoeff());
      k.col(i) = updated;
    }
    correction_ = scale > 0.0 ? delta / scale : delta;
    if (delta <= 4.0 * std::numeric_limits<double>::epsilon() * scale) break;
    // Stalled at round-off.
    if (iterations_ > 3 && delta >= last_delta) break;
    if (iterations_ >= max_iterations) {
      if (delta > 1e-9 * scale)
        throw NumericalError("closing half kick did not converge at step " + std::to_string(steps_ + 1));
      break;
    }
    last_delta = delta;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    auto& ray = next.rays[static_cast<std::size_t>(i)];
    ray.kappa = k.col(i);
    if (!ray.xi.allFinite() || !ray.kappa.allFinite())
      throw NumericalError("non-finite state at ray " + std::to_string(i) + ", step " +
                           std::to_string(steps_ + 1), static_cast<long>(i));
  }
  next.amp = f.amp;
  next.sigma = f.sigma;

  front_ = std::move(next);
  previous_force_ = std::move(forces_.force);
  forces_ = std::move(f);
  ++steps_;
  if (cfg_.wave_potential_on) {
    const std::size_t before = front_.alive_count();
    if (mark_dead_rays(front_) != before) refresh_front_closure();
  }
}

WaveFront step_front(const WaveFront& front, const MediumSpec& medium, const RunConfig& cfg) {
  Stepper stepper(front, medium, cfg);
  stepper.step();
  return stepper.front();
}

Eigen::ArrayXd hamiltonian_residual(const WaveFront& front, const MediumSpec& medium,
                                    bool wave_potential_on) {
  const auto n = static_cast<Eigen::Index>(front.size());
  Eigen::ArrayXd w = Eigen::ArrayXd::Zero(n);
  if (wave_potential_on) w = tube_wave_potential(front).w_tilde;
  Eigen::ArrayXd d(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& ray = front.rays[static_cast<std::size_t>(i)];
    d(i) = 0.5 * (ray.kappa.squaredNorm() - medium.eff_index_sq(ray.xi)) + w(i);
  }
  return d;
}

double front_width(const WaveFront& front) {
  double total = 0.0;
  Vec2 centroid = Vec2::Zero();
  for (std::size_t i = 0; i < front.size(); ++i) {
    if (!front.rays[i].alive) continue;
    const double f = front.tube_flux(static_cast<Eigen::Index>(i));
    total += f;
    centroid += f * front.rays[i].xi;
  }
  if (!(total > 0.0)) return 0.0;
  centroid /= total;
  double spread = 0.0;
  for (std::size_t i = 0; i < front.size(); ++i) {
    if (!front.rays[i].alive) continue;
    spread += front.tube_flux(static_cast<Eigen::Index>(i)) * (front.rays[i].xi - centroid).squaredNorm();
  }
  return std::sqrt(spread / total);
}

namespace {

Vec2 flux_centroid(const WaveFront& front) {
  double total = 0.0;
  Vec2 c = Vec2::Zero();
  for (std::size_t i = 0; i < front.size(); ++i) {
    if (!front.rays[i].alive) continue;
    const double f = front.tube_flux(static_cast<Eigen::Index>(i));
    total += f;
    c += f * front.rays[i].xi;
  }
  return total > 0.0 ? Vec2(c / total) : c;
}

double max_residual(const WaveFront& front, const ClosureDiagnostics& diag, const MediumSpec& medium) {
  double worst = 0.0;
  for (std::size_t i = 0; i < front.size(); ++i) {
    const auto& ray = front.rays[i];
    if (!ray.alive) continue;
    const double d = 0.5 * (ray.kappa.squaredNorm() - medium.eff_index_sq(ray.xi)) +
                     diag.w_tilde(static_cast<Eigen::Index>(i));
    worst = std::max(worst, std::abs(d));
  }
  return worst;
}

bool reached_target(const WaveFront& front, const RunConfig& cfg, long steps) {
  if (steps >= cfg.max_steps) return true;
  double tau_min = std::numeric_limits<double>::infinity();
  double z_min = std::numeric_limits<double>::infinity();
  for (const auto& ray : front.rays) {
    if (!ray.alive) continue;
    tau_min = std::min(tau_min, ray.tau);
    z_min = std::min(z_min, ray.xi(1));
  }
  if (tau_min >= cfg.max_tau - 1e-9 * cfg.d_tau) return true;
  return z_min >= cfg.max_z;
}

}  // namespace

TrajectoryRecord run(const WaveFront& launch, const MediumSpec& medium, const RunConfig& cfg) {
  cfg.validate();
  TrajectoryRecord rec;
  WaveFront start = launch;
  if (cfg.reverse)
    for (auto& ray : start.rays) ray.kappa = -ray.kappa;

  auto emit = [&](const Stepper& s) {
    rec.fronts.push_back(s.front());
    rec.diagnostics.push_back(s.forces().diag);
    rec.steps.push_back(s.steps_taken());
    rec.residuals.push_back(max_residual(s.front(), s.forces().diag, medium));
    rec.power.push_back(s.front().total_power());
  };
  auto track_width = [&](const WaveFront& f) {
    const double w = front_width(f);
    if (rec.fronts.empty() || w < rec.min_width) {
      rec.min_width = w;
      rec.min_width_tau = f.rays.front().tau;
      rec.min_width_centroid = flux_centroid(f);
    }
  };

  std::optional<Stepper> stepper;
  try {
    stepper.emplace(start, medium, cfg);
  } catch (const CausticEncountered& e) {
    rec.termination = Termination::caustic;
    rec.message = e.what();
    return rec;
  } catch (const NumericalError& e) {
    rec.termination = Termination::error;
    rec.message = e.what();
    return rec;
  }
  track_width(stepper->front());
  emit(*stepper);

  try {
    while (!reached_target(stepper->front(), cfg, stepper->steps_taken())) {
      stepper->step();
      track_width(stepper->front());
      if (stepper->steps_taken() % cfg.output_every == 0) emit(*stepper);
    }
  } catch (const CausticEncountered& e) {
    rec.termination = Termination::caustic;
    rec.message = e.what();
  } catch (const NumericalError& e) {
    rec.termination = Termination::error;
    rec.message = e.what();
  }
  if (rec.steps.back() != stepper->steps_taken()) emit(*stepper);
  return rec;
}

}  // namespace helmray

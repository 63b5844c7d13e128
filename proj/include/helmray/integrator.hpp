#pragma once

#include <limits>

#include "helmray/closure.hpp"
#include "helmray/medium.hpp"
#include "helmray/types.hpp"

namespace helmray {

enum class Stepping {
  equal_time,   // one global d_tau; fronts are equal-tau ensembles
  equal_phase,  // per-ray d_tau = d_phase / kappa^2; fronts are equal-phase
  equal_z,      // per-ray d_tau = d_z / |kappa_z|; fronts are planes of constant z
};

struct RunConfig {
  double d_tau = 1e-2;
  double max_tau = std::numeric_limits<double>::infinity();
  /// Stop once every alive ray has z >= max_z.
  double max_z = std::numeric_limits<double>::infinity();
  long max_steps = std::numeric_limits<long>::max();
  bool wave_potential_on = true;
  int output_every = 1;
  bool reverse = false;  // negate every kappa before the first step
  Stepping stepping = Stepping::equal_time;

  void validate() const;
};

/// Force on every ray of a front together with the closure that produced it.
struct ForceEvaluation {
  Points<double> force;     // d kappa / d tau per ray
  ClosureDiagnostics diag;
  Eigen::ArrayXd amp;       // transported amplitude (dead rays 0)
  Eigen::ArrayXd sigma;     // transverse coordinate (dead rays NaN)
};

/// Evaluates d kappa / d tau = grad(n^2/2) - grad W for the current state.
/// The transverse part of grad W is dW/dsigma along the tangent perpendicular
/// to kappa; the part along kappa is the rate of change of W following each
/// ray, which keeps (kappa^2 - n^2)/2 + W constant in the semi-discrete system.
/// The longitudinal part assumes every ray advances at its step_rate.
[[nodiscard]] ForceEvaluation evaluate_forces(const WaveFront& front, const MediumSpec& medium,
                                              bool wave_potential_on,
                                              Stepping stepping = Stepping::equal_time);

/// d tau per unit step parameter for a ray with wave vector kappa.
[[nodiscard]] double step_rate(Stepping stepping, const Vec2& kappa);

/// Holds a front and its current force so that consecutive steps reuse it.
class Stepper {
 public:
  Stepper(WaveFront front, const MediumSpec& medium, RunConfig cfg);

  /// One kick-drift-kick step. The closing half kick is solved to a fixed
  /// point so that the step is reversible under kappa -> -kappa.
  void step();

  [[nodiscard]] const WaveFront& front() const { return front_; }
  [[nodiscard]] const ForceEvaluation& forces() const { return forces_; }
  [[nodiscard]] long steps_taken() const { return steps_; }
  /// Fixed-point iterations used by the last step.
  [[nodiscard]] int last_iterations() const { return iterations_; }
  /// Relative size of the final fixed-point correction of the last step.
  [[nodiscard]] double last_correction() const { return correction_; }

 private:
  void refresh_front_closure();

  WaveFront front_;
  const MediumSpec& medium_;
  RunConfig cfg_;
  ForceEvaluation forces_;
  Points<double> previous_force_;
  long steps_ = 0;
  int iterations_ = 0;
  double correction_ = 0.0;
};

/// One step from a freshly closed front.
[[nodiscard]] WaveFront step_front(const WaveFront& front, const MediumSpec& medium,
                                   const RunConfig& cfg);

/// (kappa^2 - n^2)/2 + W per ray, W from the tube closure.
[[nodiscard]] Eigen::ArrayXd hamiltonian_residual(const WaveFront& front,
                                                  const MediumSpec& medium,
                                                  bool wave_potential_on = true);

/// Flux-weighted RMS distance of the alive rays from their centroid.
[[nodiscard]] double front_width(const WaveFront& front);

/// Integrates until a termination condition holds, emitting every
/// output_every-th front plus the last one. Caustics and numerical aborts end
/// the record with the matching termination reason instead of throwing.
[[nodiscard]] TrajectoryRecord run(const WaveFront& launch, const MediumSpec& medium,
                                   const RunConfig& cfg);

}  // namespace helmray

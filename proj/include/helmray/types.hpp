#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace helmray {

/// Plane vectors are stored as (x, z): transverse first, longitudinal second.
using Vec2 = Eigen::Vector2d;

/// One ray (optical mode) or particle (matter mode), in units of the launch
/// half-width w0 and the vacuum wave number k0 (or launch momentum p0).
struct RayState {
  Vec2 xi = Vec2::Zero();     // position / w0
  Vec2 kappa = Vec2::Zero();  // k / k0  or  p / p0
  double tau = 0.0;           // t c / w0  or  t p0 / (m w0)
  double phase = 0.0;         // accumulated phase in units of k0 w0 radians
  bool alive = true;
};

/// An ordered ensemble of rays sharing one launch. Ray order is fixed at
/// launch and is the order used by every stencil along the front.
struct WaveFront {
  std::vector<RayState> rays;
  Eigen::ArrayXd amp;        // amplitude R, launch peak = 1
  Eigen::ArrayXd sigma;      // arc coordinate along the front, zero at its middle
  Eigen::ArrayXd tube_flux;  // R^2 |kappa| w per ray, fixed at launch
  double alpha = 0.0;        // 1 / (k0 w0)^2

  [[nodiscard]] std::size_t size() const { return rays.size(); }
  [[nodiscard]] std::size_t alive_count() const;
  /// Sum of tube fluxes in ray order.
  [[nodiscard]] double total_power() const;
};

/// Per-ray closure quantities; entries for dead rays are zero.
struct ClosureDiagnostics {
  Eigen::ArrayXd w_tilde;  // dimensionless wave potential
  Eigen::ArrayXd grad_w;   // dW/dsigma along the front
  Eigen::ArrayXd long_w;   // dW along kappa implied by conservation of D
};

enum class Termination { reached_target, caustic, error };

[[nodiscard]] std::string to_string(Termination t);

struct TrajectoryRecord {
  std::vector<WaveFront> fronts;
  std::vector<ClosureDiagnostics> diagnostics;
  std::vector<long> steps;         // step index of each emitted front
  std::vector<double> residuals;   // max |D| over alive rays, per front
  std::vector<double> power;       // total tube flux, per front
  double min_width = 0.0;          // smallest front_width over every step
  double min_width_tau = 0.0;
  Vec2 min_width_centroid = Vec2::Zero();
  Termination termination = Termination::reached_target;
  std::string message;             // abort diagnostic, empty on success
};

/// Bad user input or violated precondition.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical abort: non-finite state, evanescent launch, aliasing, too few rays.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, long ray = -1)
      : std::runtime_error(what), ray_(ray) {}
  [[nodiscard]] long ray() const { return ray_; }

 private:
  long ray_;
};

/// Neighbouring rays crossed: the front folded and single-valued amplitude
/// transport is no longer defined.
class CausticEncountered : public NumericalError {
 public:
  CausticEncountered(long ray, double tau);
  [[nodiscard]] double tau() const { return tau_; }

 private:
  double tau_;
};

}  // namespace helmray

#pragma once

#include <complex>
#include <string>
#include <vector>

#include "helmray/beamcore.hpp"
#include "helmray/integrator.hpp"
#include "helmray/medium.hpp"
#include "helmray/types.hpp"

namespace helmray {

/// Half-width x(z) of the waist-launched rays of a paraxial Gaussian beam:
/// sqrt(1 + (z/zR)^2) with zR = pi/epsilon, all lengths in w0.
[[nodiscard]] double paraxial_envelope(double z, double epsilon);

/// Closed-form paraxial Gaussian beam launched at its waist, exp(-x^2) at z = 0.
[[nodiscard]] Eigen::ArrayXcd gaussian_beam_field(const Eigen::ArrayXd& x, double z,
                                                  double epsilon);

/// Complex envelope on a periodic transverse grid, stored at selected planes.
struct FieldGrid {
  Eigen::ArrayXd x;        // transverse nodes in w0
  std::vector<double> z;   // stored planes in w0
  Eigen::ArrayXXcd u;      // one row per stored plane
  double dx = 0.0;
  double dz = 0.0;         // nominal march step
  double alpha = 0.0;

  /// Row of the stored plane at z; throws ValidationError when absent.
  [[nodiscard]] Eigen::Index plane_index(double z_plane) const;
  [[nodiscard]] Eigen::ArrayXd intensity(Eigen::Index plane) const;
  /// Sum |u|^2 dx on one plane.
  [[nodiscard]] double power(Eigen::Index plane) const;
};

struct BpmParams {
  Eigen::Index n_points = 4096;
  double half_width = 64.0;
  double dz = 0.05;
  /// Planes to store, increasing, at or beyond the launch plane.
  std::vector<double> planes;

  /// Nodes -half_width + j dx, j < n_points.
  [[nodiscard]] Eigen::ArrayXd nodes() const;
};

/// Fraction of the spectrum beyond 0.9 of the Nyquist wave number that
/// aborts the march.
inline constexpr double bpm_alias_limit = 1e-6;

/// Marches the paraxial envelope equation
///   dA/dz = (i / 2K) d2A/dx2 + (i K / 2) (n^2 - 1) A,   K = 1/sqrt(alpha)
/// with Strang splitting: half phase screen, exact spectral free step, half
/// screen. Each stored plane is reached by a whole number of equal substeps
/// no longer than dz. Throws NumericalError on aliasing.
[[nodiscard]] FieldGrid bpm_solve(const Eigen::ArrayXcd& initial, double z0, double alpha,
                                  const MediumSpec& medium, const BpmParams& params);

/// Field launched from the LaunchConfig profile on the z = origin plane.
/// Only launches along +z can be marched.
[[nodiscard]] FieldGrid bpm_solve(const LaunchConfig& launch, const MediumSpec& medium,
                                  const BpmParams& params);

/// Rays of a record where they cross a plane of constant z, found by cubic
/// Hermite interpolation in tau between emitted fronts.
struct PlaneCrossing {
  double z = 0.0;
  std::vector<Eigen::Index> ray;  // crossing rays in ray order
  Eigen::ArrayXd x;
  Eigen::ArrayXd kappa_z;
  Eigen::ArrayXd amp;        // transported amplitude interpolated in tau
  Eigen::ArrayXd intensity;  // tube flux / (kappa_z * cell width in x)

  /// Trapezoid integral of intensity * kappa_z over x.
  [[nodiscard]] double power() const;
};

/// Throws ValidationError when no alive ray reaches the plane and
/// NumericalError when the crossings are not ordered in x.
[[nodiscard]] PlaneCrossing plane_crossing(const TrajectoryRecord& record, double z_plane);

/// Trapezoid integral of R^2 |kappa| over the arc coordinate of a front.
[[nodiscard]] double front_power(const WaveFront& front);

struct IntensityReport {
  double l2 = 0.0;           // ||a - b|| / ||b|| after peak normalisation
  double peak_offset = 0.0;  // x of peak a minus x of peak b
  double width_ratio = 0.0;  // second-moment width a / b
};

/// Compares profile a (samples at xa, linearly resampled, zero outside its
/// support) with profile b on the nodes xb. Throws ValidationError when the
/// supports do not overlap.
[[nodiscard]] IntensityReport compare_profiles(const Eigen::ArrayXd& xa, const Eigen::ArrayXd& ia,
                                               const Eigen::ArrayXd& xb, const Eigen::ArrayXd& ib);

[[nodiscard]] IntensityReport intensity_compare(const TrajectoryRecord& record,
                                                const FieldGrid& field, double z_plane);

/// Linear interpolation of (xs, ys) at x, zero outside [xs.front, xs.back].
[[nodiscard]] Eigen::ArrayXd resample(const Eigen::ArrayXd& xs, const Eigen::ArrayXd& ys,
                                      const Eigen::ArrayXd& x);

struct Scenario {
  std::string name;
  LaunchConfig launch;
  MediumSpec medium = MediumSpec::vacuum();
  RunConfig run;
  /// Planes where the ray intensity is compared with the field oracle;
  /// empty when the split-step march does not apply.
  std::vector<double> compare_planes;
  std::string expected;  // qualitative outcome tag
};

[[nodiscard]] const std::vector<std::string>& scenario_names();

/// Throws ValidationError listing the registry for an unknown name.
[[nodiscard]] Scenario make_scenario(const std::string& name);

}  // namespace helmray

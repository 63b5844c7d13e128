#pragma once

#include <span>
#include <utility>
#include <vector>

#include "helmray/medium.hpp"
#include "helmray/types.hpp"

namespace helmray {

/// Transverse amplitude shape on the launch segment, in units of w0.
class Profile {
 public:
  enum class Kind { gaussian, supergaussian, table };

  /// exp(-s^2)
  static Profile gaussian();
  /// exp(-|s|^order)
  static Profile supergaussian(double order);
  /// Piecewise-linear through (s, R) samples, zero outside their range.
  static Profile table(std::vector<std::pair<double, double>> samples);
  /// Constant amplitude 1 over [-half_width, half_width].
  static Profile uniform(double half_width);

  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] double order() const { return order_; }
  [[nodiscard]] const std::vector<std::pair<double, double>>& samples() const { return samples_; }
  [[nodiscard]] bool is_even() const;

  [[nodiscard]] double operator()(double s) const;

 private:
  Kind kind_ = Kind::gaussian;
  double order_ = 2.0;
  std::vector<std::pair<double, double>> samples_;
};

struct LaunchConfig {
  Profile profile = Profile::gaussian();
  int n_rays = 201;
  double extent = 4.0;          // rays seeded on [-extent, extent]
  double epsilon = 0.2;         // lambda0 / w0
  Vec2 origin = Vec2::Zero();   // centre of the launch segment
  Vec2 direction{0.0, 1.0};     // propagation axis, normal to the segment

  static constexpr int min_rays = 5;

  /// Throws ValidationError naming the violated constraint.
  void validate() const;
  /// 1 / (k0 w0)^2 = (epsilon / 2 pi)^2
  [[nodiscard]] double alpha() const;
};

[[nodiscard]] double alpha_from_epsilon(double epsilon);
[[nodiscard]] double rayleigh_range(double epsilon);

/// Seeds rays on the launch segment, samples and peak-normalises the
/// amplitude, points kappa along the launch axis and closes the front with
/// dispersion_init. With the wave potential off the launch obeys the plain
/// eikonal |kappa| = n.
[[nodiscard]] WaveFront build_launch(const LaunchConfig& cfg, const MediumSpec& medium,
                                     bool wave_potential_on = true);

/// Rescales every |kappa| so that (kappa^2 - n^2)/2 + W = 0 and refreshes the
/// tube fluxes. Directions are kept. Throws NumericalError with the ray index
/// when n^2 - 2W <= 0.
[[nodiscard]] WaveFront dispersion_init(WaveFront front, const MediumSpec& medium,
                                        bool wave_potential_on = true);

// Optical / matter correspondence ------------------------------------------

struct OpticalParams {
  double wavelength = 0.0;  // lambda0
  double waist = 0.0;       // w0
  MediumSpec medium = MediumSpec::vacuum();  // n^2 in units of w0
};

struct MatterParams {
  double mass = 0.0;
  double energy = 0.0;
  double hbar = 1.0;
  double waist = 0.0;
  /// V(r) at physical position r; empty means free space.
  MediumSpec::ScalarField potential;
  MediumSpec::VectorField grad_potential;
};

/// The shared dimensionless problem: lengths in w0, wave vectors in k0 = p0/hbar.
struct DimensionlessProblem {
  MediumSpec::Mode mode = MediumSpec::Mode::optical;
  double alpha = 0.0;
  double epsilon = 0.0;     // wavelength / w0
  double k0 = 0.0;          // 2 pi / lambda0, or p0 / hbar
  double wavelength = 0.0;  // lambda0, or de Broglie 2 pi hbar / p0
  double length_scale = 0.0;
  MediumSpec medium = MediumSpec::vacuum();
};

[[nodiscard]] DimensionlessProblem optical_matter_map(const OpticalParams& p);
[[nodiscard]] DimensionlessProblem optical_matter_map(const MatterParams& p);

/// Inverse map for a matter problem with the given mass, hbar and waist.
[[nodiscard]] MatterParams to_matter(const DimensionlessProblem& problem, double mass,
                                     double hbar, double waist);

/// Equal alpha and equal n^2 at every probe point, both to rtol.
[[nodiscard]] bool equivalent(const DimensionlessProblem& a, const DimensionlessProblem& b,
                              std::span<const Vec2> probes, double rtol = 1e-14);

}  // namespace helmray

#pragma once

#include <functional>

#include "helmray/types.hpp"

namespace helmray {

/// Refractive index field (optical) or potential over energy (matter), seen
/// through one effective index: n^2 in optical mode, (E - V)/E in matter mode.
class MediumSpec {
 public:
  enum class Mode { optical, matter };
  using ScalarField = std::function<double(const Vec2&)>;
  using VectorField = std::function<Vec2(const Vec2&)>;

  /// n^2 = 1 everywhere, zero gradient, no function calls.
  static MediumSpec vacuum();
  /// n^2(xi) with optional analytic gradient; central differences otherwise.
  static MediumSpec optical(ScalarField n_sq, VectorField grad_n_sq = {});
  /// V(xi)/E with optional analytic gradient of V/E.
  static MediumSpec matter(ScalarField v_over_e, VectorField grad_v_over_e = {});
  static MediumSpec uniform_optical(double n_sq);
  static MediumSpec uniform_matter(double v_over_e);

  [[nodiscard]] Mode mode() const { return mode_; }
  [[nodiscard]] bool is_vacuum() const { return !field_; }

  [[nodiscard]] double eff_index_sq(const Vec2& xi) const;
  [[nodiscard]] Vec2 grad_eff_index_sq(const Vec2& xi) const;

  /// Step used for the finite-difference gradient when none is supplied.
  static constexpr double fd_step = 1e-5;

 private:
  MediumSpec(Mode mode, ScalarField field, VectorField grad, bool uniform);

  Mode mode_ = Mode::optical;
  ScalarField field_;
  VectorField grad_;
  bool uniform_ = false;
};

}  // namespace helmray

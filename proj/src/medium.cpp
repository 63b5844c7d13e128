#include "helmray/medium.hpp"

#include <utility>

namespace helmray {

MediumSpec::MediumSpec(Mode mode, ScalarField field, VectorField grad, bool uniform)
    : mode_(mode), field_(std::move(field)), grad_(std::move(grad)), uniform_(uniform) {}

MediumSpec MediumSpec::vacuum() { return MediumSpec(Mode::optical, {}, {}, true); }

MediumSpec MediumSpec::optical(ScalarField n_sq, VectorField grad_n_sq) {
  return MediumSpec(Mode::optical, std::move(n_sq), std::move(grad_n_sq), false);
}

MediumSpec MediumSpec::matter(ScalarField v_over_e, VectorField grad_v_over_e) {
  ScalarField eff = [v = std::move(v_over_e)](const Vec2& xi) { return 1.0 - v(xi); };
  VectorField grad;
  if (grad_v_over_e) {
    grad = [g = std::move(grad_v_over_e)](const Vec2& xi) -> Vec2 { return -g(xi); };
  }
  return MediumSpec(Mode::matter, std::move(eff), std::move(grad), false);
}

MediumSpec MediumSpec::uniform_optical(double n_sq) {
  return MediumSpec(Mode::optical, [n_sq](const Vec2&) { return n_sq; },
                    [](const Vec2&) -> Vec2 { return Vec2::Zero(); }, true);
}

MediumSpec MediumSpec::uniform_matter(double v_over_e) {
  return MediumSpec(Mode::matter, [v_over_e](const Vec2&) { return 1.0 - v_over_e; },
                    [](const Vec2&) -> Vec2 { return Vec2::Zero(); }, true);
}

double MediumSpec::eff_index_sq(const Vec2& xi) const {
  if (!field_) return 1.0;
  return field_(xi);
}

Vec2 MediumSpec::grad_eff_index_sq(const Vec2& xi) const {
  if (!field_ || uniform_) return Vec2::Zero();
  if (grad_) return grad_(xi);
  Vec2 g;
  for (int d = 0; d < 2; ++d) {
    Vec2 step = Vec2::Zero();
    step(d) = fd_step;
    g(d) = (field_(xi + step) - field_(xi - step)) / (2.0 * fd_step);
  }
  return g;
}

}  // namespace helmray

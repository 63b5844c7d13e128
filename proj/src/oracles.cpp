#include "helmray/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <unsupported/Eigen/FFT>

namespace helmray {

double paraxial_envelope(double z, double epsilon) {
  const double zr = rayleigh_range(epsilon);
  return std::sqrt(1.0 + (z / zr) * (z / zr));
}

Eigen::ArrayXcd gaussian_beam_field(const Eigen::ArrayXd& x, double z, double epsilon) {
  using cd = std::complex<double>;
  const double k = 1.0 / std::sqrt(alpha_from_epsilon(epsilon));
  const double zr = rayleigh_range(epsilon);
  const cd q0(0.0, -zr);
  const cd q = cd(z, 0.0) + q0;
  const cd pre = std::sqrt(q0 / q);
  return x.unaryExpr([&](double xv) { return pre * std::exp(cd(0.0, k) * xv * xv / (2.0 * q)); });
}

// FieldGrid ----------------------------------------------------------------

Eigen::Index FieldGrid::plane_index(double z_plane) const {
  for (std::size_t p = 0; p < z.size(); ++p)
    if (std::abs(z[p] - z_plane) <= 1e-9 * std::max(1.0, std::abs(z_plane)))
      return static_cast<Eigen::Index>(p);
  throw ValidationError("field grid holds no plane at z = " + std::to_string(z_plane));
}

Eigen::ArrayXd FieldGrid::intensity(Eigen::Index plane) const {
  return u.row(plane).abs2().transpose();
}

double FieldGrid::power(Eigen::Index plane) const { return u.row(plane).abs2().sum() * dx; }

Eigen::ArrayXd BpmParams::nodes() const {
  const double dx = 2.0 * half_width / static_cast<double>(n_points);
  return Eigen::ArrayXd::LinSpaced(n_points, 0.0, static_cast<double>(n_points - 1)) * dx - half_width;
}

namespace {

void validate(const BpmParams& p, double z0) {
  if (p.n_points < 16 || p.n_points % 2 != 0)
    throw ValidationError("bpm n_points must be even and at least 16");
  if (!(p.half_width > 0.0) || !(p.dz > 0.0))
    throw ValidationError("bpm half_width and dz must be positive");
  if (2.0 * p.half_width / static_cast<double>(p.n_points) > 0.125)
    throw ValidationError("bpm grid must resolve w0 with at least 8 points");
  double last = z0;
  for (double z : p.planes) {
    if (!(z >= last)) throw ValidationError("bpm planes must increase from the launch plane");
    last = z;
  }
}

// Second-moment half-width at 1/e^2 of intensity, i.e. twice the RMS radius.
double intensity_width(const Eigen::ArrayXd& x, const Eigen::ArrayXd& i) {
  const double total = i.sum();
  const double mean = (x * i).sum() / total;
  return 2.0 * std::sqrt(((x - mean).square() * i).sum() / total);
}

}  // namespace

FieldGrid bpm_solve(const Eigen::ArrayXcd& initial, double z0, double alpha,
                    const MediumSpec& medium, const BpmParams& params) {
  using cd = std::complex<double>;
  validate(params, z0);
  const Eigen::Index n = params.n_points;
  if (initial.size() != n) throw ValidationError("initial field does not match the bpm grid");

  FieldGrid grid;
  grid.x = params.nodes();
  grid.dx = 2.0 * params.half_width / static_cast<double>(n);
  grid.dz = params.dz;
  grid.alpha = alpha;
  grid.z = params.planes;
  grid.u.resize(static_cast<Eigen::Index>(params.planes.size()), n);

  const double k0 = 1.0 / std::sqrt(alpha);
  const double dk = std::numbers::pi / params.half_width;
  Eigen::ArrayXd kx(n);
  for (Eigen::Index j = 0; j < n; ++j)
    kx(j) = dk * static_cast<double>(j < n / 2 ? j : j - n);
  const double k_edge = 0.9 * dk * static_cast<double>(n / 2);
  const Eigen::Array<bool, Eigen::Dynamic, 1> edge_band = kx.abs() > k_edge;

  auto half_screen = [&](Eigen::VectorXcd& a, double z, double h) {
    if (medium.is_vacuum()) return;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double phase = 0.25 * k0 * (medium.eff_index_sq(Vec2(grid.x(j), z)) - 1.0) * h;
      a(j) *= std::polar(1.0, phase);
    }
  };

  Eigen::FFT<double> fft;
  Eigen::VectorXcd a = initial.matrix();
  Eigen::VectorXcd spec(n);
  double z = z0;
  for (std::size_t p = 0; p < params.planes.size(); ++p) {
    const double span = params.planes[p] - z;
    const long sub = span > 0.0 ? static_cast<long>(std::ceil(span / params.dz - 1e-12)) : 0;
    const double h = sub > 0 ? span / static_cast<double>(sub) : 0.0;
    const Eigen::ArrayXcd propagator = (cd(0.0, -0.5 * h / k0) * kx.square()).exp();
    for (long s = 0; s < sub; ++s) {
      half_screen(a, z, h);
      fft.fwd(spec, a);
      const double total = spec.squaredNorm();
      const double high = edge_band.select(spec.array().abs2(), 0.0).sum();
      if (total > 0.0 && high > bpm_alias_limit * total) {
        std::ostringstream msg;
        msg << "split-step field aliased at z = " << z << " (band-edge energy fraction "
            << high / total << "); enlarge n_points or reduce half_width";
        throw NumericalError(msg.str());
      }
      spec.array() *= propagator;
      fft.inv(a, spec);
      z = (s + 1 == sub) ? params.planes[p] : z + h;
      half_screen(a, z, h);
    }
    grid.u.row(static_cast<Eigen::Index>(p)) = a.transpose().array();
  }
  return grid;
}

FieldGrid bpm_solve(const LaunchConfig& launch, const MediumSpec& medium,
                    const BpmParams& params) {
  launch.validate();
  if (launch.direction.x() != 0.0 || !(launch.direction.y() > 0.0))
    throw ValidationError("split-step march needs a launch along +z");
  const Eigen::ArrayXd x = params.nodes();
  const Eigen::ArrayXcd initial =
      x.unaryExpr([&](double xv) { return std::complex<double>(launch.profile(xv - launch.origin.x())); });
  FieldGrid grid = bpm_solve(initial, launch.origin.y(), launch.alpha(), medium, params);
  if (!grid.z.empty()) {
    const Eigen::Index last = static_cast<Eigen::Index>(grid.z.size()) - 1;
    const double w = intensity_width(grid.x, grid.intensity(last));
    if (params.half_width < 4.0 * w)
      throw NumericalError("split-step grid narrower than 4 beam widths at the final plane; "
                           "enlarge half_width");
  }
  return grid;
}

// Ray intensity on a plane -------------------------------------------------

double PlaneCrossing::power() const {
  const Eigen::ArrayXd f = intensity * kappa_z;
  double p = 0.0;
  for (Eigen::Index i = 0; i + 1 < x.size(); ++i) p += 0.5 * (f(i) + f(i + 1)) * (x(i + 1) - x(i));
  return p;
}

namespace {

struct Hermite {
  Vec2 p0, p1, m0, m1;
  [[nodiscard]] Vec2 operator()(double s) const {
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * p0 + (s3 - 2 * s2 + s) * m0 + (-2 * s3 + 3 * s2) * p1 +
           (s3 - s2) * m1;
  }
};

}  // namespace

PlaneCrossing plane_crossing(const TrajectoryRecord& record, double z_plane) {
  PlaneCrossing out;
  out.z = z_plane;
  if (record.fronts.empty()) throw ValidationError("empty trajectory record");
  const std::size_t n = record.fronts.front().size();
  std::vector<double> xs, kz, amp;
  std::vector<double> flux;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k + 1 < record.fronts.size(); ++k) {
      const auto& r0 = record.fronts[k].rays[i];
      const auto& r1 = record.fronts[k + 1].rays[i];
      if (!r0.alive || !r1.alive) break;
      if (!(r0.xi.y() <= z_plane && z_plane <= r1.xi.y())) continue;
      const double span = r1.tau - r0.tau;
      const Hermite path{r0.xi, r1.xi, span * r0.kappa, span * r1.kappa};
      double lo = 0.0, hi = 1.0;
      for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        (path(mid).y() < z_plane ? lo : hi) = mid;
      }
      const double s = 0.5 * (lo + hi);
      const auto ii = static_cast<Eigen::Index>(i);
      out.ray.push_back(ii);
      xs.push_back(path(s).x());
      kz.push_back((1.0 - s) * r0.kappa.y() + s * r1.kappa.y());
      amp.push_back((1.0 - s) * record.fronts[k].amp(ii) + s * record.fronts[k + 1].amp(ii));
      flux.push_back(record.fronts[k].tube_flux(ii));
      break;
    }
  }
  if (out.ray.size() < 3)
    throw ValidationError("trajectory record does not reach z = " + std::to_string(z_plane));
  const auto m = static_cast<Eigen::Index>(out.ray.size());
  out.x = Eigen::Map<Eigen::ArrayXd>(xs.data(), m);
  out.kappa_z = Eigen::Map<Eigen::ArrayXd>(kz.data(), m);
  out.amp = Eigen::Map<Eigen::ArrayXd>(amp.data(), m);
  const Eigen::ArrayXd width = cell_widths(out.x);
  if (!(width > 0.0).all())
    throw NumericalError("ray crossings of z = " + std::to_string(z_plane) + " are not ordered in x");
  out.intensity = Eigen::Map<Eigen::ArrayXd>(flux.data(), m) / (out.kappa_z * width);
  return out;
}

double front_power(const WaveFront& front) {
  const auto idx = alive_indices(front);
  double p = 0.0;
  for (std::size_t j = 0; j + 1 < idx.size(); ++j) {
    const auto a = idx[j], b = idx[j + 1];
    const double fa = front.amp(a) * front.amp(a) * front.rays[static_cast<std::size_t>(a)].kappa.norm();
    const double fb = front.amp(b) * front.amp(b) * front.rays[static_cast<std::size_t>(b)].kappa.norm();
    p += 0.5 * (fa + fb) * (front.sigma(b) - front.sigma(a));
  }
  return p;
}

// Comparison ---------------------------------------------------------------

Eigen::ArrayXd resample(const Eigen::ArrayXd& xs, const Eigen::ArrayXd& ys, const Eigen::ArrayXd& x) {
  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(x.size());
  const Eigen::Index m = xs.size();
  Eigen::Index j = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xv = x(i);
    if (xv < xs(0) || xv > xs(m - 1)) continue;
    while (j + 2 < m && xs(j + 1) < xv) ++j;
    while (j > 0 && xs(j) > xv) --j;
    const double t = (xv - xs(j)) / (xs(j + 1) - xs(j));
    out(i) = (1.0 - t) * ys(j) + t * ys(j + 1);
  }
  return out;
}

namespace {

// Peak position refined by the parabola through the maximum and its neighbours.
double peak_position(const Eigen::ArrayXd& x, const Eigen::ArrayXd& f) {
  Eigen::Index k = 0;
  f.maxCoeff(&k);
  if (k == 0 || k == f.size() - 1) return x(k);
  const double fl = f(k - 1), fc = f(k), fr = f(k + 1);
  const double curv = fl - 2.0 * fc + fr;
  if (curv >= 0.0) return x(k);
  const double shift = 0.5 * (fl - fr) / curv;
  return x(k) + shift * 0.5 * (x(k + 1) - x(k - 1));
}

}  // namespace

IntensityReport compare_profiles(const Eigen::ArrayXd& xa, const Eigen::ArrayXd& ia,
                                 const Eigen::ArrayXd& xb, const Eigen::ArrayXd& ib) {
  if (xa.size() < 2 || xa.size() != ia.size() || xb.size() != ib.size())
    throw ValidationError("intensity profiles need matching abscissae");
  Eigen::ArrayXd a = resample(xa, ia, xb);
  Eigen::ArrayXd b = ib;
  const double pa = a.maxCoeff(), pb = b.maxCoeff();
  if (!(pa > 0.0) || !(pb > 0.0)) throw ValidationError("intensity profile is identically zero");
  a /= pa;
  b /= pb;
  constexpr double floor = 1e-3;
  if (!((a > floor) && (b > floor)).any())
    throw ValidationError("intensity profiles have non-overlapping supports");

  IntensityReport r;
  r.l2 = std::sqrt((a - b).square().sum() / b.square().sum());
  r.peak_offset = peak_position(xb, a) - peak_position(xb, b);
  r.width_ratio = intensity_width(xb, a) / intensity_width(xb, b);
  return r;
}

IntensityReport intensity_compare(const TrajectoryRecord& record, const FieldGrid& field,
                                  double z_plane) {
  const PlaneCrossing c = plane_crossing(record, z_plane);
  return compare_profiles(c.x, c.intensity, field.x, field.intensity(field.plane_index(z_plane)));
}

// Scenarios ----------------------------------------------------------------

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"gaussian_slit", "supergaussian_slit",
                                              "electrostatic_mirror", "free_plane_wave"};
  return names;
}

namespace {

Scenario slit(std::string name, Profile profile, double extent) {
  Scenario s;
  s.name = std::move(name);
  s.launch.profile = std::move(profile);
  s.launch.extent = extent;
  const double zr = rayleigh_range(s.launch.epsilon);
  s.run.max_z = 3.0 * zr;
  s.run.stepping = Stepping::equal_z;
  s.run.output_every = 10;
  s.compare_planes = {zr, 2.0 * zr, 3.0 * zr};
  s.expected = "diffraction";
  return s;
}

// V/E rises from 0 to 2 across a paraboloidal layer g = z + x^2/(4 f) - z0
// of thickness ~ width. The turning surface V = E is a concave reflector
// facing -z whose paraxial focus lies near z0 - f.
MediumSpec mirror_medium(double focal, double vertex, double width) {
  auto g = [=](const Vec2& xi) { return xi.y() + xi.x() * xi.x() / (4.0 * focal) - vertex; };
  auto v = [=](const Vec2& xi) {
    const double gp = std::max(0.0, g(xi)) / width;
    return 2.0 * (1.0 - std::exp(-gp * gp));
  };
  auto grad = [=](const Vec2& xi) -> Vec2 {
    const double gv = g(xi);
    if (gv <= 0.0) return Vec2::Zero();
    const double u = gv / width;
    const double dv = 4.0 * u * std::exp(-u * u) / width;
    return dv * Vec2(xi.x() / (2.0 * focal), 1.0);
  };
  return MediumSpec::matter(v, grad);
}

}  // namespace

Scenario make_scenario(const std::string& name) {
  if (name == "gaussian_slit") return slit(name, Profile::gaussian(), 3.125);
  if (name == "supergaussian_slit") {
    // Beyond |s| ~ 1.2 the tails of exp(-s^4) carry 0.13% of the power but
    // a wave potential growing like s^6 that tears the front edge apart.
    // The edge rays still lose their order in x past two Rayleigh ranges.
    Scenario s = slit(name, Profile::supergaussian(4.0), 1.2);
    s.launch.n_rays = 61;
    s.run.max_z = 2.0 * rayleigh_range(s.launch.epsilon);
    s.compare_planes.pop_back();
    return s;
  }
  if (name == "free_plane_wave") {
    Scenario s;
    s.name = name;
    s.launch.profile = Profile::uniform(4.0);
    s.launch.n_rays = 65;
    s.launch.extent = 4.0;
    s.run.max_z = 3.0 * rayleigh_range(s.launch.epsilon);
    s.run.stepping = Stepping::equal_z;
    s.run.output_every = 10;
    s.expected = "straight_rays";
    return s;
  }
  if (name == "electrostatic_mirror") {
    Scenario s;
    s.name = name;
    // Off-axis launch: the paraboloid meets the beam at about 45 degrees, so
    // no ray stops dead at its turning point. The thin layer keeps the
    // turning-line pinch of the ray tubes short.
    s.launch.n_rays = 21;
    s.launch.extent = 2.0;
    s.launch.origin = Vec2(10.0, -2.0);
    s.medium = mirror_medium(5.0, 7.0, 0.2);
    s.run.d_tau = 2.5e-3;
    s.run.max_tau = 17.0;
    s.run.output_every = 20;
    s.expected = "focus_replaced_by_waist";
    return s;
  }
  std::string list;
  for (const auto& n : scenario_names()) list += (list.empty() ? "" : ", ") + n;
  throw ValidationError("unknown scenario '" + name + "'; registered: {" + list + "}");
}

}  // namespace helmray

#include "helmray/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "helmray/oracles.hpp"

namespace helmray::cli {

namespace {

struct KeySpec {
  const char* section;
  const char* key;
  const char* fallback;  // default as shown in the reference
  const char* doc;
};

// The single source for both validation of keys and the --help text.
constexpr KeySpec key_table[] = {
    {"", "scenario", "(none)",
     "preset: gaussian_slit, supergaussian_slit, electrostatic_mirror, free_plane_wave"},
    {"launch", "profile", "gaussian", "inline setup only: gaussian, supergaussian or uniform"},
    {"launch", "order", "4", "exponent of the supergaussian exp(-|s|^order)"},
    {"launch", "half_width", "extent", "half-width of the uniform profile, in w0"},
    {"launch", "epsilon", "0.2", "lambda0 / w0, must satisfy 0 < epsilon < 1"},
    {"launch", "n_rays", "201", "rays on the launch segment"},
    {"launch", "extent", "3.125", "rays are seeded on [-extent, extent], in w0"},
    {"launch", "origin_x", "0", "centre of the launch segment, in w0"},
    {"launch", "origin_z", "0", "centre of the launch segment, in w0"},
    {"medium", "kind", "vacuum", "inline setup only: vacuum, uniform_optical or uniform_matter"},
    {"medium", "value", "1 or 0", "n^2 for uniform_optical, V/E for uniform_matter"},
    {"run", "d_tau", "0.01", "step in the stepping parameter"},
    {"run", "stepping", "equal_z", "equal_time, equal_phase or equal_z fronts"},
    {"run", "length_zr", "3", "stop once every ray has advanced this many Rayleigh ranges in z"},
    {"run", "max_tau", "inf", "stop once every ray has reached this tau"},
    {"run", "max_steps", "unlimited", "hard cap on the number of steps"},
    {"run", "wave_potential", "on", "couple the rays through the wave potential"},
    {"run", "reverse", "off", "negate every kappa before the first step"},
    {"run", "output_every", "10", "emit every n-th front (the last front is always emitted)"},
    {"output", "dir", "helmray_out", "output directory"},
    {"output", "trajectories", "on", "write trajectories.csv"},
    {"output", "fronts", "on", "write fronts.csv"},
    {"output", "intensity", "on", "write intensity.csv (split-step oracle comparison)"},
    {"output", "envelope", "on", "write envelope.csv (paraxial envelope)"},
    {"output", "svg", "off", "write figure.svg"},
};

struct Entry {
  std::string value;
  int line = 0;
};

[[noreturn]] void fail_at(int line, const std::string& what) {
  throw ValidationError("line " + std::to_string(line) + ": " + what);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

const KeySpec* find_key(const std::string& key) {
  for (const auto& k : key_table)
    if (key == k.key) return &k;
  return nullptr;
}

double to_double(const Entry& e, const std::string& key) {
  double v = 0.0;
  const char* first = e.value.data();
  const char* last = first + e.value.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) fail_at(e.line, key + " expects a number, got '" + e.value + "'");
  return v;
}

long to_long(const Entry& e, const std::string& key) {
  long v = 0;
  const char* first = e.value.data();
  const char* last = first + e.value.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) fail_at(e.line, key + " expects an integer, got '" + e.value + "'");
  return v;
}

bool to_bool(const Entry& e, const std::string& key) {
  std::string v = e.value;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "on" || v == "true" || v == "yes" || v == "1") return true;
  if (v == "off" || v == "false" || v == "no" || v == "0") return false;
  fail_at(e.line, key + " expects on/off, got '" + e.value + "'");
}

std::string registry_list() {
  std::string list;
  for (const auto& n : scenario_names()) list += (list.empty() ? "" : ", ") + n;
  return "{" + list + "}";
}

}  // namespace

std::string config_reference() {
  std::ostringstream os;
  std::string section = "-";
  for (const auto& k : key_table) {
    if (section != k.section) {
      section = k.section;
      os << (section.empty() ? "(top level)" : "[" + section + "]") << "\n";
    }
    char line[160];
    std::snprintf(line, sizeof line, "  %-15s default %-12s %s\n", k.key, k.fallback, k.doc);
    os << line;
  }
  os << "Keys may also appear before any section header. A scenario presets the launch,\n"
        "medium and run; launch and run keys then override it. Without a scenario the\n"
        "[medium] section selects an inline setup.\n";
  return os.str();
}

CliConfig parse_config(const std::string& text) {
  std::map<std::string, Entry> entries;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view sv(raw);
    if (const auto c = sv.find_first_of("#;"); c != std::string_view::npos) sv = sv.substr(0, c);
    const std::string line = trim(sv);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail_at(line_no, "unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      const bool known = std::any_of(std::begin(key_table), std::end(key_table),
                                     [&](const KeySpec& k) { return section == k.section; });
      if (!known || section.empty()) fail_at(line_no, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail_at(line_no, "expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    const KeySpec* spec = find_key(key);
    if (spec == nullptr)
      fail_at(line_no, "unknown key '" + key + "'" + (section.empty() ? "" : " in [" + section + "]"));
    if (!section.empty() && section != spec->section)
      fail_at(line_no, "key '" + key + "' belongs to [" + spec->section + "], not [" + section + "]");
    if (value.empty()) fail_at(line_no, "key '" + key + "' has no value");
    if (entries.count(key) != 0)
      fail_at(line_no, "key '" + key + "' repeats line " + std::to_string(entries[key].line));
    entries[key] = Entry{value, line_no};
  }

  auto get = [&](const char* key) -> const Entry* {
    const auto it = entries.find(key);
    return it == entries.end() ? nullptr : &it->second;
  };

  CliConfig cfg;
  const bool has_medium = get("kind") || get("value");
  const bool has_profile = get("profile") || get("order") || get("half_width");
  if (const Entry* s = get("scenario")) {
    if (has_medium || has_profile)
      fail_at(s->line, "give either a scenario or an inline [medium]/profile setup, not both");
    try {
      Scenario sc = make_scenario(s->value);
      cfg.scenario = sc.name;
      cfg.launch = sc.launch;
      cfg.medium = sc.medium;
      cfg.run = sc.run;
      cfg.compare_planes = sc.compare_planes;
    } catch (const ValidationError& e) {
      fail_at(s->line, e.what());
    }
  } else if (has_medium) {
    cfg.launch.extent = 3.125;
    cfg.run.stepping = Stepping::equal_z;
    cfg.run.output_every = 10;
    const std::string kind = get("kind") ? get("kind")->value : "vacuum";
    const int kline = get("kind") ? get("kind")->line : get("value")->line;
    if (kind == "vacuum") {
      if (const Entry* v = get("value")) fail_at(v->line, "a vacuum medium takes no value");
    } else if (kind == "uniform_optical") {
      cfg.medium = MediumSpec::uniform_optical(get("value") ? to_double(*get("value"), "value") : 1.0);
    } else if (kind == "uniform_matter") {
      cfg.medium = MediumSpec::uniform_matter(get("value") ? to_double(*get("value"), "value") : 0.0);
    } else {
      fail_at(kline, "unknown medium kind '" + kind + "'");
    }
    if (const Entry* p = get("profile")) {
      if (p->value == "gaussian") {
        cfg.launch.profile = Profile::gaussian();
      } else if (p->value == "supergaussian") {
        cfg.launch.profile = Profile::supergaussian(get("order") ? to_double(*get("order"), "order") : 4.0);
      } else if (p->value == "uniform") {
        const double extent = get("extent") ? to_double(*get("extent"), "extent") : cfg.launch.extent;
        cfg.launch.profile =
            Profile::uniform(get("half_width") ? to_double(*get("half_width"), "half_width") : extent);
      } else {
        fail_at(p->line, "unknown profile '" + p->value + "'");
      }
    }
  } else {
    throw ValidationError("missing scenario: set 'scenario = <name>' with <name> in " +
                          registry_list() + ", or describe an inline [medium]");
  }

  // Run length is carried in Rayleigh ranges so that it follows epsilon.
  const double zr_preset = rayleigh_range(cfg.launch.epsilon);
  double length_zr = std::isfinite(cfg.run.max_z) ? (cfg.run.max_z - cfg.launch.origin.y()) / zr_preset
                     : cfg.scenario.empty()       ? 3.0
                                                  : std::numeric_limits<double>::infinity();
  std::vector<double> planes_zr;
  for (double z : cfg.compare_planes) planes_zr.push_back((z - cfg.launch.origin.y()) / zr_preset);
  if (cfg.scenario.empty()) planes_zr = {1.0, 2.0, 3.0};

  if (const Entry* e = get("epsilon")) {
    cfg.launch.epsilon = to_double(*e, "epsilon");
    if (!(cfg.launch.epsilon > 0.0 && cfg.launch.epsilon < 1.0))
      fail_at(e->line, "epsilon = " + e->value +
                           " is outside the paraxial wave regime ε ≡ λ₀/w₀ < 1");
  }
  if (const Entry* e = get("n_rays")) cfg.launch.n_rays = static_cast<int>(to_long(*e, "n_rays"));
  if (const Entry* e = get("extent")) cfg.launch.extent = to_double(*e, "extent");
  if (const Entry* e = get("origin_x")) cfg.launch.origin.x() = to_double(*e, "origin_x");
  if (const Entry* e = get("origin_z")) cfg.launch.origin.y() = to_double(*e, "origin_z");
  if (const Entry* e = get("d_tau")) cfg.run.d_tau = to_double(*e, "d_tau");
  if (const Entry* e = get("length_zr")) length_zr = to_double(*e, "length_zr");
  if (const Entry* e = get("max_tau")) cfg.run.max_tau = to_double(*e, "max_tau");
  if (const Entry* e = get("max_steps")) cfg.run.max_steps = to_long(*e, "max_steps");
  if (const Entry* e = get("wave_potential")) cfg.run.wave_potential_on = to_bool(*e, "wave_potential");
  if (const Entry* e = get("reverse")) cfg.run.reverse = to_bool(*e, "reverse");
  if (const Entry* e = get("output_every")) cfg.run.output_every = static_cast<int>(to_long(*e, "output_every"));
  if (const Entry* e = get("stepping")) {
    if (e->value == "equal_time") cfg.run.stepping = Stepping::equal_time;
    else if (e->value == "equal_phase") cfg.run.stepping = Stepping::equal_phase;
    else if (e->value == "equal_z") cfg.run.stepping = Stepping::equal_z;
    else fail_at(e->line, "unknown stepping '" + e->value + "'");
  }
  if (const Entry* e = get("dir")) cfg.output_dir = e->value;
  if (const Entry* e = get("trajectories")) cfg.emit.trajectories = to_bool(*e, "trajectories");
  if (const Entry* e = get("fronts")) cfg.emit.fronts = to_bool(*e, "fronts");
  if (const Entry* e = get("intensity")) cfg.emit.intensity = to_bool(*e, "intensity");
  if (const Entry* e = get("envelope")) cfg.emit.envelope = to_bool(*e, "envelope");
  if (const Entry* e = get("svg")) cfg.emit.svg = to_bool(*e, "svg");

  const double zr = rayleigh_range(cfg.launch.epsilon);
  const double z0 = cfg.launch.origin.y();
  if (!(length_zr > 0.0)) throw ValidationError("length_zr must be positive");
  cfg.run.max_z = std::isfinite(length_zr) ? z0 + length_zr * zr : std::numeric_limits<double>::infinity();
  cfg.compare_planes.clear();
  for (double p : planes_zr)
    if (p <= length_zr) cfg.compare_planes.push_back(z0 + p * zr);

  if (!std::isfinite(cfg.run.max_z) && !std::isfinite(cfg.run.max_tau) &&
      cfg.run.max_steps == std::numeric_limits<long>::max())
    throw ValidationError("the run has no end: set length_zr, max_tau or max_steps");
  cfg.launch.validate();
  cfg.run.validate();
  return cfg;
}

// Execution ----------------------------------------------------------------

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void write_trajectories(const std::filesystem::path& path, const TrajectoryRecord& rec) {
  std::ofstream out(path);
  out << "ray_id,step,tau [w0],x [w0],z [w0],kx [k0],kz [k0],R [launch peak],W [1]\n";
  const std::size_t n = rec.fronts.front().size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    for (std::size_t k = 0; k < rec.fronts.size(); ++k) {
      const auto& ray = rec.fronts[k].rays[i];
      if (!ray.alive) continue;
      out << i << ',' << rec.steps[k] << ',' << num(ray.tau) << ',' << num(ray.xi.x()) << ','
          << num(ray.xi.y()) << ',' << num(ray.kappa.x()) << ',' << num(ray.kappa.y()) << ','
          << num(rec.fronts[k].amp(ii)) << ',' << num(rec.diagnostics[k].w_tilde(ii)) << '\n';
    }
  }
}

void write_fronts(const std::filesystem::path& path, const TrajectoryRecord& rec) {
  std::ofstream out(path);
  out << "step,ray_id,sigma [w0],R [launch peak]\n";
  for (std::size_t k = 0; k < rec.fronts.size(); ++k) {
    const auto& f = rec.fronts[k];
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (!f.rays[i].alive) continue;
      const auto ii = static_cast<Eigen::Index>(i);
      out << rec.steps[k] << ',' << i << ',' << num(f.sigma(ii)) << ',' << num(f.amp(ii)) << '\n';
    }
  }
}

struct PlaneResult {
  double z;
  std::optional<IntensityReport> report;
  std::string note;
};

void write_envelope(const std::filesystem::path& path, const CliConfig& cfg, double z_end) {
  std::ofstream out(path);
  out << "z [w0],x_paraxial [w0]\n";
  const double z0 = cfg.launch.origin.y();
  constexpr int samples = 200;
  for (int k = 0; k <= samples; ++k) {
    const double z = z0 + (z_end - z0) * k / samples;
    out << num(z) << ',' << num(cfg.launch.origin.x() + paraxial_envelope(z - z0, cfg.launch.epsilon))
        << '\n';
  }
}

void write_svg(const std::filesystem::path& path, const CliConfig& cfg, const TrajectoryRecord& rec) {
  double zmin = 1e300, zmax = -1e300, xmin = 1e300, xmax = -1e300;
  for (const auto& f : rec.fronts)
    for (const auto& r : f.rays) {
      if (!r.alive) continue;
      zmin = std::min(zmin, r.xi.y());
      zmax = std::max(zmax, r.xi.y());
      xmin = std::min(xmin, r.xi.x());
      xmax = std::max(xmax, r.xi.x());
    }
  const double width = 800.0, height = 400.0, pad = 20.0;
  const double sz = (width - 2 * pad) / std::max(zmax - zmin, 1e-12);
  const double sx = (height - 2 * pad) / std::max(xmax - xmin, 1e-12);
  auto px = [&](const Vec2& p) {
    return num(pad + (p.y() - zmin) * sz) + "," + num(height - pad - (p.x() - xmin) * sx);
  };
  std::ofstream out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
      << "<title>" << (cfg.scenario.empty() ? "inline" : cfg.scenario)
      << ": rays in the (z, x) plane, z to the right</title>\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  const std::size_t n = rec.fronts.front().size();
  for (std::size_t i = 0; i < n; ++i) {
    out << "<polyline fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"0.6\" points=\"";
    for (const auto& f : rec.fronts)
      if (f.rays[i].alive) out << px(f.rays[i].xi) << ' ';
    out << "\"/>\n";
  }
  if (cfg.emit.envelope && std::isfinite(cfg.run.max_z)) {
    for (double sign : {-1.0, 1.0}) {
      out << "<polyline fill=\"none\" stroke=\"#c0392b\" stroke-dasharray=\"4 3\" points=\"";
      for (int k = 0; k <= 100; ++k) {
        const double dz = (zmax - cfg.launch.origin.y()) * k / 100.0;
        const Vec2 p(cfg.launch.origin.x() + sign * paraxial_envelope(dz, cfg.launch.epsilon),
                     cfg.launch.origin.y() + dz);
        out << px(p) << ' ';
      }
      out << "\"/>\n";
    }
  }
  out << "</svg>\n";
}

}  // namespace

int execute(const CliConfig& cfg, std::ostream& log) {
  namespace fs = std::filesystem;
  try {
    cfg.launch.validate();
    cfg.run.validate();
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec || !fs::is_directory(cfg.output_dir))
      throw ValidationError("cannot create output directory " + cfg.output_dir.string());
    const fs::path probe = cfg.output_dir / ".helmray_write_probe";
    if (!std::ofstream(probe)) throw ValidationError("output directory " + cfg.output_dir.string() + " is not writable");
    fs::remove(probe, ec);
  } catch (const ValidationError& e) {
    log << "validation error: " << e.what() << '\n';
    return exit_validation;
  }

  std::ostringstream summary;
  summary << "scenario: " << (cfg.scenario.empty() ? "inline" : cfg.scenario) << '\n'
          << "epsilon: " << num(cfg.launch.epsilon) << '\n'
          << "alpha: " << num(cfg.launch.alpha()) << '\n'
          << "n_rays: " << cfg.launch.n_rays << '\n'
          << "d_tau: " << num(cfg.run.d_tau) << '\n'
          << "wave_potential: " << (cfg.run.wave_potential_on ? "on" : "off") << '\n';
  int status = exit_ok;
  auto finish = [&](int code) {
    std::ofstream(cfg.output_dir / "summary.txt") << summary.str();
    return code;
  };

  TrajectoryRecord rec;
  try {
    const WaveFront launch = build_launch(cfg.launch, cfg.medium, cfg.run.wave_potential_on);
    rec = run(launch, cfg.medium, cfg.run);
  } catch (const ValidationError& e) {
    log << "validation error: " << e.what() << '\n';
    return exit_validation;
  } catch (const NumericalError& e) {
    summary << "termination: error\nmessage: " << e.what() << '\n';
    log << "numerical abort: " << e.what() << '\n';
    return finish(exit_numerical);
  }

  double max_res = 0.0, drift = 0.0;
  for (double r : rec.residuals) max_res = std::max(max_res, r);
  for (double p : rec.power) drift = std::max(drift, std::abs(p - rec.power.front()) / rec.power.front());
  summary << "termination: " << to_string(rec.termination) << '\n';
  if (!rec.message.empty()) summary << "message: " << rec.message << '\n';
  summary << "steps: " << rec.steps.back() << '\n'
          << "fronts_emitted: " << rec.fronts.size() << '\n'
          << "max_residual: " << num(max_res) << '\n'
          << "power_drift: " << num(drift) << '\n'
          << "min_width: " << num(rec.min_width) << '\n'
          << "min_width_tau: " << num(rec.min_width_tau) << '\n'
          << "min_width_centroid: " << num(rec.min_width_centroid.x()) << ' '
          << num(rec.min_width_centroid.y()) << '\n';
  if (rec.termination != Termination::reached_target) {
    status = exit_numerical;
    log << "run ended early: " << rec.message << '\n';
  }

  if (cfg.emit.trajectories) write_trajectories(cfg.output_dir / "trajectories.csv", rec);
  if (cfg.emit.fronts) write_fronts(cfg.output_dir / "fronts.csv", rec);
  if (cfg.emit.svg) write_svg(cfg.output_dir / "figure.svg", cfg, rec);

  double z_end = cfg.launch.origin.y();
  for (const auto& r : rec.fronts.back().rays)
    if (r.alive) z_end = std::max(z_end, r.xi.y());
  if (cfg.emit.envelope) write_envelope(cfg.output_dir / "envelope.csv", cfg, z_end);

  if (cfg.emit.intensity) {
    if (cfg.compare_planes.empty()) {
      summary << "intensity: no forward comparison planes for this setup\n";
    } else {
      try {
        BpmParams bp;
        bp.planes = cfg.compare_planes;
        const FieldGrid field = bpm_solve(cfg.launch, cfg.medium, bp);
        std::ofstream out(cfg.output_dir / "intensity.csv");
        out << "plane [w0],x [w0],I_ray [peak],I_oracle [peak]\n";
        for (double z : cfg.compare_planes) {
          try {
            const PlaneCrossing c = plane_crossing(rec, z);
            const IntensityReport r = compare_profiles(c.x, c.intensity, field.x,
                                                       field.intensity(field.plane_index(z)));
            const Eigen::ArrayXd oracle = field.intensity(field.plane_index(z));
            const Eigen::ArrayXd ray = resample(c.x, c.intensity, field.x);
            const double pr = ray.maxCoeff(), po = oracle.maxCoeff();
            for (Eigen::Index j = 0; j < field.x.size(); ++j)
              if (field.x(j) >= c.x(0) && field.x(j) <= c.x(c.x.size() - 1))
                out << num(z) << ',' << num(field.x(j)) << ',' << num(ray(j) / pr) << ','
                    << num(oracle(j) / po) << '\n';
            summary << "intensity_z " << num(z) << ": l2 " << num(r.l2) << " peak_offset "
                    << num(r.peak_offset) << " width_ratio " << num(r.width_ratio) << '\n';
          } catch (const std::exception& e) {
            summary << "intensity_z " << num(z) << ": skipped (" << e.what() << ")\n";
          }
        }
      } catch (const NumericalError& e) {
        summary << "intensity: oracle aborted (" << e.what() << ")\n";
        status = exit_numerical;
      }
    }
  }
  return finish(status);
}

}  // namespace helmray::cli

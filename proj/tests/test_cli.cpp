#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "helmray/cli.hpp"
#include "helmray/oracles.hpp"

using namespace helmray;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("helmray_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

}  // namespace

TEST_CASE("a bare scenario line takes every default") {
  const cli::CliConfig cfg = cli::parse_config("scenario = gaussian_slit\n");
  const Scenario s = make_scenario("gaussian_slit");
  CHECK(cfg.scenario == "gaussian_slit");
  CHECK(cfg.launch.epsilon == 0.2);
  CHECK(cfg.launch.n_rays == 201);
  CHECK(cfg.run.d_tau == 1e-2);
  CHECK(cfg.run.max_z == doctest::Approx(3.0 * rayleigh_range(0.2)).epsilon(1e-15));
  CHECK(cfg.run.stepping == s.run.stepping);
  REQUIRE(cfg.compare_planes.size() == 3);
  CHECK(cfg.compare_planes[1] == doctest::Approx(2.0 * rayleigh_range(0.2)));
  CHECK(cfg.output_dir == "helmray_out");
  CHECK(cfg.emit.trajectories);
  CHECK_FALSE(cfg.emit.svg);
}

TEST_CASE("sections, comments and overrides") {
  const cli::CliConfig cfg = cli::parse_config(
      "# mirror without coupling\n"
      "scenario = electrostatic_mirror\n"
      "[run]\n"
      "wave_potential = off   ; geometrical optics\n"
      "d_tau = 0.005\n"
      "[output]\n"
      "svg = on\n"
      "dir = /tmp/somewhere\n");
  CHECK_FALSE(cfg.run.wave_potential_on);
  CHECK(cfg.run.d_tau == 0.005);
  CHECK(cfg.emit.svg);
  CHECK(cfg.output_dir == "/tmp/somewhere");
  CHECK(cfg.medium.mode() == MediumSpec::Mode::matter);
}

TEST_CASE("run length follows epsilon in Rayleigh ranges") {
  const cli::CliConfig cfg = cli::parse_config("scenario = gaussian_slit\nepsilon = 0.4\nlength_zr = 2\n");
  CHECK(cfg.run.max_z == doctest::Approx(2.0 * rayleigh_range(0.4)));
  CHECK(cfg.compare_planes.size() == 2);
}

TEST_CASE("inline setups build their own launch and medium") {
  const cli::CliConfig cfg = cli::parse_config(
      "[launch]\nprofile = supergaussian\norder = 6\nn_rays = 51\n[medium]\nkind = uniform_optical\nvalue = 1.2\n");
  CHECK(cfg.scenario.empty());
  CHECK(cfg.launch.profile.order() == 6.0);
  CHECK(cfg.launch.n_rays == 51);
  CHECK(cfg.medium.eff_index_sq(Vec2(1.0, 2.0)) == 1.2);
}

TEST_CASE("epsilon outside the paraxial regime is rejected with the constraint") {
  CHECK_THROWS_WITH_AS((void)cli::parse_config("scenario = gaussian_slit\nepsilon = 1.5\n"),
                       doctest::Contains("< 1"), ValidationError);
  CHECK_THROWS_WITH_AS((void)cli::parse_config("scenario = gaussian_slit\nepsilon = 1.5\n"),
                       doctest::Contains("line 2"), ValidationError);
}

TEST_CASE("an unknown scenario is rejected with the registry") {
  CHECK_THROWS_WITH_AS((void)cli::parse_config("scenario = warp_drive\n"),
                       doctest::Contains("{gaussian_slit, supergaussian_slit, electrostatic_mirror, "
                                         "free_plane_wave}"),
                       ValidationError);
}

TEST_CASE("malformed lines are reported with their location") {
  CHECK_THROWS_WITH_AS((void)cli::parse_config("scenario = gaussian_slit\n[run]\nwarp = 9\n"),
                       doctest::Contains("line 3: unknown key 'warp'"), ValidationError);
  CHECK_THROWS_WITH_AS((void)cli::parse_config("scenario = gaussian_slit\n[launch]\nd_tau = 0.1\n"),
                       doctest::Contains("line 3"), ValidationError);
  CHECK_THROWS_WITH_AS((void)cli::parse_config("scenario = gaussian_slit\n[nowhere]\n"),
                       doctest::Contains("line 2: unknown section"), ValidationError);
  CHECK_THROWS_WITH_AS((void)cli::parse_config("scenario = gaussian_slit\nn_rays = many\n"),
                       doctest::Contains("line 2"), ValidationError);
  CHECK_THROWS_WITH_AS((void)cli::parse_config("scenario = gaussian_slit\nd_tau = 1\nd_tau = 2\n"),
                       doctest::Contains("repeats line 2"), ValidationError);
  CHECK_THROWS_WITH_AS((void)cli::parse_config("scenario = gaussian_slit\nkind = vacuum\n"),
                       doctest::Contains("either a scenario"), ValidationError);
}

TEST_CASE("a configuration without a scenario is rejected") {
  CHECK_THROWS_WITH_AS((void)cli::parse_config(""), doctest::Contains("missing scenario"), ValidationError);
  CHECK_THROWS_WITH_AS((void)cli::parse_config("[run]\nd_tau = 0.1\n"),
                       doctest::Contains("missing scenario"), ValidationError);
}

TEST_CASE("the key reference documents every key") {
  const std::string ref = cli::config_reference();
  for (const char* key : {"scenario", "epsilon", "n_rays", "d_tau", "stepping", "length_zr",
                          "wave_potential", "output_every", "svg", "dir"})
    CHECK(ref.find(key) != std::string::npos);
}

TEST_CASE("an invalid configuration exits 2 and writes nothing") {
  cli::CliConfig cfg = cli::parse_config("scenario = gaussian_slit\n");
  cfg.output_dir = scratch("invalid");
  cfg.launch.n_rays = 3;
  std::ostringstream log;
  CHECK(cli::execute(cfg, log) == cli::exit_validation);
  CHECK_FALSE(fs::exists(cfg.output_dir));
  CHECK(log.str().find("validation error") != std::string::npos);
}

TEST_CASE("a short Gaussian run writes self-describing files and a summary") {
  cli::CliConfig cfg = cli::parse_config("scenario = gaussian_slit\nlength_zr = 1\n[output]\nsvg = on\n");
  cfg.output_dir = scratch("gaussian");
  std::ostringstream log;
  REQUIRE(cli::execute(cfg, log) == cli::exit_ok);
  const std::string summary = slurp(cfg.output_dir / "summary.txt");
  CHECK(summary.find("max_residual: ") != std::string::npos);
  CHECK(summary.find("power_drift: 0\n") != std::string::npos);
  CHECK(summary.find("termination: reached_target") != std::string::npos);
  CHECK(summary.find("intensity_z ") != std::string::npos);
  CHECK(first_line(cfg.output_dir / "trajectories.csv") ==
        "ray_id,step,tau [w0],x [w0],z [w0],kx [k0],kz [k0],R [launch peak],W [1]");
  CHECK(first_line(cfg.output_dir / "fronts.csv") == "step,ray_id,sigma [w0],R [launch peak]");
  CHECK(first_line(cfg.output_dir / "intensity.csv") ==
        "plane [w0],x [w0],I_ray [peak],I_oracle [peak]");
  CHECK(first_line(cfg.output_dir / "envelope.csv") == "z [w0],x_paraxial [w0]");
  CHECK(slurp(cfg.output_dir / "figure.svg").find("<polyline") != std::string::npos);
  fs::remove_all(cfg.output_dir);
}

TEST_CASE("identical configurations give identical files") {
  const std::string text = "scenario = supergaussian_slit\nlength_zr = 0.5\n";
  cli::CliConfig a = cli::parse_config(text), b = cli::parse_config(text);
  a.output_dir = scratch("det_a");
  b.output_dir = scratch("det_b");
  std::ostringstream log;
  REQUIRE(cli::execute(a, log) == cli::exit_ok);
  REQUIRE(cli::execute(b, log) == cli::exit_ok);
  for (const char* f : {"trajectories.csv", "fronts.csv", "intensity.csv", "envelope.csv", "summary.txt"}) {
    CAPTURE(f);
    CHECK(slurp(a.output_dir / f) == slurp(b.output_dir / f));
  }
  fs::remove_all(a.output_dir);
  fs::remove_all(b.output_dir);
}

TEST_CASE("the uncoupled mirror reports its focal width") {
  cli::CliConfig cfg = cli::parse_config("scenario = electrostatic_mirror\nwave_potential = off\n");
  cfg.output_dir = scratch("mirror");
  cfg.emit = cli::EmitFlags{false, false, false, false, false};
  std::ostringstream log;
  REQUIRE(cli::execute(cfg, log) == cli::exit_ok);
  const std::string summary = slurp(cfg.output_dir / "summary.txt");
  const auto at = summary.find("min_width: ");
  REQUIRE(at != std::string::npos);
  CHECK(std::stod(summary.substr(at + 11)) < 0.05);
  CHECK_FALSE(fs::exists(cfg.output_dir / "trajectories.csv"));
  fs::remove_all(cfg.output_dir);
}

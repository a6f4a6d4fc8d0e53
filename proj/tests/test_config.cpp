#include <doctest.h>

#include <sstream>

#include "ibf/config.hpp"

using namespace ibf;

namespace {

RunConfig parse(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is, "c.ini");
}

std::string failure(const std::string& text) {
  try {
    parse(text);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::usage);
    return e.what();
  }
  FAIL("accepted: " << text);
  return {};
}

const char* kInterval = "[geometry]\nshape = interval\nhalf_length = 80\nspacing = 0.5\n";

}  // namespace

TEST_CASE("full configuration parses") {
  const RunConfig c = parse(
      "# comment\n"
      "[beam]\nfamily = gaussian\nsigma = 2\n"
      "[beam]\nfamily = cauchy_poisson\nsigma = 6\n; comment\n"
      "[geometry]\nshape = interval\nhalf_length = 80\nspacing = 0.5\nmargin = 12\nmeasure = continuous\n"
      "[solver]\nmode = multibeam\ngamma = 1e-4\nnonneg = true\n"
      "[spectrum]\nrows = 10\ndump = 2\n"
      "[synth]\ncomponents = 5\nnoise = 0.1\n"
      "[io]\nseed = 42\n");
  REQUIRE(c.beams.size() == 2);
  CHECK(c.beams[0].beam == Beam::gaussian(1, 2.0));
  CHECK(c.beams[1].beam.family() == BeamFamily::cauchy_poisson);
  CHECK(c.beams[1].line == 5);
  CHECK(c.beams[1].beam.sigma() == 6.0);
  REQUIRE(c.geometry);
  CHECK(c.geometry->half_length == 80.0);
  CHECK(*c.geometry->margin == 12.0);
  CHECK(c.geometry->measure == KernelMeasure::continuous);
  CHECK(c.solver.mode == SolverMode::multibeam);
  CHECK(c.solver.nonneg);
  CHECK(c.solver.gamma == 1e-4);
  CHECK(c.spectrum.rows == 10);
  CHECK(c.synth.noise == 0.1);
  CHECK(*c.io.seed == 42u);
  CHECK(std::string(to_string(SolverMode::rbf_nonneg)) == "rbf-nonneg");
}

TEST_CASE("two-dimensional shapes and families") {
  const RunConfig r = parse("[beam]\nfamily = gaussian\ndimension = 2\nsigma = 4\n"
                            "[geometry]\nshape = rectangle\nhalf_x = 48\nhalf_y = 24\nspacing = 1\n"
                            "[solver]\nmode = truncated-fit\nn_tr = 400\n");
  CHECK(r.geometry->shape == Shape::rectangle);
  CHECK(*r.solver.n_tr == 400);
  const RunConfig a = parse("[beam]\nfamily = gaussian_aniso\ndimension = 2\nb11 = 4\nb12 = 1\nb22 = 9\n"
                            "[geometry]\nshape = disk\nradius = 10\nspacing = 1\n");
  CHECK(a.beams[0].beam.covariance()(0, 1) == 1.0);
  const RunConfig s = parse("[beam]\nfamily = gaussian\ndimension = 2\nsigma = 1\n"
                            "[geometry]\nshape = stadium\nwidth = 20\nspacing = 1\n"
                            "[solver]\nmode = rbf-nonneg\ncenter_stride = 3\n");
  CHECK(s.solver.center_stride == 3);
  const RunConfig t = parse(std::string("[beam]\nfamily = tube_poisson\ninner_radius = 1\ntube_radius = 2\n") + kInterval);
  CHECK(t.beams[0].beam.tube_radius() == 2.0);
}

TEST_CASE("structural errors name the line") {
  const std::string beam = "[beam]\nfamily = gaussian\nsigma = 2\n";
  CHECK(failure(kInterval).find("beam") != std::string::npos);
  CHECK(failure(beam).find("geometry") != std::string::npos);
  CHECK(failure(beam + kInterval + "[bogus]\n").find("c.ini:8:") != std::string::npos);
  CHECK(failure("[beam]\nfamily = gaussian\nsigma = 2\nsigma = 3\n" + std::string(kInterval)).find("c.ini:4:") != std::string::npos);
  CHECK(failure(beam + kInterval + "[solver]\nmode = rkhs\n[solver]\nmode = rkhs\n").find("c.ini:10:") != std::string::npos);
  CHECK(failure("[beam]\nfamily = gaussian\nsigma = 2\ncolour = red\n" + std::string(kInterval)).find("c.ini:4:") != std::string::npos);
  CHECK(failure("[beam]\nfamily = gaussian\nsigma = two\n" + std::string(kInterval)).find("c.ini:3:") != std::string::npos);
  CHECK(failure("[beam]\nfamily = gaussian\nsigma = -1\n" + std::string(kInterval)).find("c.ini:3:") != std::string::npos);
  CHECK(failure("[beam]\nfamily = laser\nsigma = 1\n" + std::string(kInterval)).find("c.ini:2:") != std::string::npos);
  CHECK(failure("sigma = 2\n" + beam + kInterval).find("c.ini:1:") != std::string::npos);
  CHECK(failure(beam + kInterval + "just words\n").find("c.ini:8:") != std::string::npos);
}

TEST_CASE("family and shape specific keys") {
  const std::string beam = "[beam]\nfamily = gaussian\nsigma = 2\n";
  CHECK(failure("[beam]\nfamily = gaussian\nsigma = 2\ncutoff = 1\n" + std::string(kInterval)).find("c.ini:4:") != std::string::npos);
  CHECK(failure("[beam]\nfamily = sinc_truncation\n" + std::string(kInterval)).find("cutoff") != std::string::npos);
  CHECK(failure(beam + "[geometry]\nshape = interval\nhalf_length = 8\nradius = 2\nspacing = 1\n").find("c.ini:7:") != std::string::npos);
  CHECK(failure(beam + "[geometry]\nshape = disk\nspacing = 1\n").find("radius") != std::string::npos);
  CHECK(failure(beam + "[geometry]\nshape = hexagon\nspacing = 1\n").find("c.ini:5:") != std::string::npos);
  CHECK(failure(beam + "[geometry]\nshape = mask_file\nmask_file = /no/such/mask.txt\n").find("c.ini:6:") != std::string::npos);
  // Dimension of the beam must match the domain.
  CHECK_FALSE(failure(beam + "[geometry]\nshape = disk\nradius = 5\nspacing = 1\n").empty());
  CHECK_FALSE(failure("[beam]\nfamily = tube_poisson\ndimension = 2\ninner_radius = 1\ntube_radius = 2\n"
                      "[geometry]\nshape = disk\nradius = 5\nspacing = 1\n").empty());
}

TEST_CASE("solver key rules") {
  const std::string base = std::string("[beam]\nfamily = gaussian\nsigma = 2\n") + kInterval;
  CHECK_FALSE(failure(base + "[solver]\nmode = truncated-fit\n").empty());
  CHECK(failure(base + "[solver]\nmode = truncated-fit\nn_tr = 5\nl_noise = 3\n").find("c.ini:") != std::string::npos);
  CHECK(failure(base + "[solver]\nmode = rkhs\nnonneg = true\n").find("c.ini:10:") != std::string::npos);
  CHECK(failure(base + "[solver]\nmode = rkhs\ncenter_stride = 2\n").find("c.ini:10:") != std::string::npos);
  CHECK(failure(base + "[solver]\nmode = pseudoinverse\nn_tr = 5\ngamma = 1\n").find("c.ini:11:") != std::string::npos);
  CHECK(failure(base + "[solver]\nmode = magic\n").find("c.ini:9:") != std::string::npos);
  CHECK(failure(base + "[solver]\nmode = multibeam\nnonneg = maybe\n").find("c.ini:10:") != std::string::npos);
  CHECK(failure(base + "[solver]\nmode = rbf-nonneg\nl_noise = 16\n").find("c.ini:10:") != std::string::npos);
  CHECK(*parse(base + "[solver]\nmode = pseudoinverse\nl_noise = 16\n").solver.l_noise == 16.0);
  CHECK(parse(base + "[solver]\nmode = rkhs\ngamma = 0.5\n").solver.gamma == 0.5);
}

TEST_CASE("missing file is a usage error") {
  try {
    load_config("/no/such/config.ini");
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::usage);
  }
}

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "ibf/io.hpp"
#include "ibf/kernels.hpp"
#include "ibf/pipeline.hpp"

using namespace ibf;
namespace fs = std::filesystem;

namespace {

RunConfig config(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is, "p.ini");
}

std::map<std::string, std::string> manifest(const fs::path& dir) {
  std::map<std::string, std::string> m;
  std::ifstream in(dir / "manifest.txt");
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) m[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return m;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ibf_pipeline_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::string kBase =
    "[beam]\nfamily = gaussian\nsigma = 2\n"
    "[geometry]\nshape = interval\nhalf_length = 20\nspacing = 0.5\n";

}  // namespace

TEST_CASE("manifest lines") {
  Manifest m;
  m.add("a", 1.5);
  m.add("b", Index{3});
  m.add("c", "text");
  REQUIRE(m.entries().size() == 3);
  CHECK(m.entries()[0].second == "1.5");
  CHECK(m.entries()[1].second == "3");
  const fs::path dir = scratch("manifest");
  fs::create_directories(dir);
  m.write((dir / "manifest.txt").string());
  CHECK(manifest(dir).at("c") == "text");
  fs::remove_all(dir);
}

TEST_CASE("geometry from configuration") {
  const GridPair g = build_geometry(config(kBase));
  CHECK(g.domain->size() == 81);
  CHECK(g.dwell->axis(0).lower == doctest::Approx(-30.0));
  const GridPair m = build_geometry(config(kBase + "margin = 2\n"));
  CHECK(m.dwell->axis(0).lower == doctest::Approx(-22.0));
  const GridPair s = build_geometry(config("[beam]\nfamily = gaussian\ndimension = 2\nsigma = 1\n"
                                           "[geometry]\nshape = stadium\nwidth = 10\nspacing = 1\n"));
  CHECK(s.domain->masked());
  CHECK(s.dwell->covers(*s.domain));
}

TEST_CASE("normal stream") {
  NormalStream a(7), b(7), c(8);
  double sum = 0.0, sq = 0.0;
  bool differs = false, same = true;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = a.next();
    same &= x == b.next();
    differs |= x != c.next();
    sum += x;
    sq += x * x;
  }
  CHECK(same);
  CHECK(differs);
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sq / n - 1.0) < 0.01);
}

TEST_CASE("spectrum command") {
  const fs::path dir = scratch("spectrum");
  cmd_spectrum(config(kBase + "[spectrum]\nrows = 5\ndump = 2\n"), dir.string());
  const auto m = manifest(dir);
  const double l1 = std::stod(m.at("lambda_1"));
  CHECK(l1 > 0.9);
  CHECK(l1 < 1.0);
  CHECK(std::stod(m.at("right_1_min_over_max")) >= -1e-8);
  CHECK(fs::exists(dir / "spectrum.txt"));
  CHECK(fs::exists(dir / "right_2.txt"));
  CHECK(fs::exists(dir / "left_2.txt"));
  CHECK_FALSE(fs::exists(dir / "right_3.txt"));
  const FieldMap r1 = read_field((dir / "right_1.txt").string());
  CHECK(r1.grid().cell_measure() * r1.values().squaredNorm() == doctest::Approx(1.0).epsilon(1e-10));
  fs::remove_all(dir);
}

TEST_CASE("synth and solve") {
  const fs::path dir = scratch("solve");
  const RunConfig syn = config(kBase + "[synth]\ncomponents = 6\nnoise = 0.05\n");
  cmd_synth(syn, 11, (dir / "a").string());
  cmd_synth(syn, 11, (dir / "b").string());
  cmd_synth(syn, 12, (dir / "c").string());
  CHECK(slurp(dir / "a" / "measurement.txt") == slurp(dir / "b" / "measurement.txt"));
  CHECK(slurp(dir / "a" / "measurement.txt") != slurp(dir / "c" / "measurement.txt"));
  const std::string input = (dir / "a" / "measurement.txt").string();

  for (const char* solver : {"mode = pseudoinverse\nn_tr = 20\n", "mode = truncated-fit\nn_tr = 20\ngamma = 1e-6\n",
                             "mode = truncated-fit\nl_noise = 10\n", "mode = rkhs\ngamma = 1e-4\n",
                             "mode = rbf-nonneg\ngamma = 1e-6\ncenter_stride = 2\n", "mode = multibeam\ngamma = 1e-6\n"}) {
    CAPTURE(solver);
    const fs::path out = dir / "out";
    fs::remove_all(out);
    cmd_solve(config(kBase + "[solver]\n" + solver), input, out.string());
    CHECK(fs::exists(out / "etch_map.txt"));
    CHECK(fs::exists(out / "filtered_map.txt"));
    CHECK(fs::exists(out / "residual_map.txt"));
    const auto m = manifest(out);
    CHECK(std::stod(m.at("residual_rms")) < std::stod(m.at("signal_rms")));
  }

  // A measurement on a different grid is rejected.
  try {
    cmd_solve(config("[beam]\nfamily = gaussian\nsigma = 2\n[geometry]\nshape = interval\nhalf_length = 10\nspacing = 0.5\n"
                     "[solver]\nmode = rkhs\n"),
              input, (dir / "bad").string());
    FAIL("expected invalid input");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::invalid_input);
  }
  fs::remove_all(dir);
}

TEST_CASE("nonnegative rbf solve keeps coefficients nonnegative") {
  const fs::path dir = scratch("rbf");
  cmd_synth(config(kBase), 3, dir.string());
  cmd_solve(config(kBase + "[solver]\nmode = rbf-nonneg\n"), (dir / "measurement.txt").string(), (dir / "out").string());
  CHECK(std::stod(manifest(dir / "out").at("min_coefficient")) >= 0.0);
  CHECK(std::stod(manifest(dir / "out").at("min_dwell")) >= 0.0);
  fs::remove_all(dir);
}

TEST_CASE("multibeam and kernel dump") {
  const fs::path dir = scratch("multi");
  const std::string two = "[beam]\nfamily = gaussian\nsigma = 2\n[beam]\nfamily = gaussian\nsigma = 4\n"
                          "[geometry]\nshape = interval\nhalf_length = 20\nspacing = 0.5\n[solver]\nmode = multibeam\ngamma = 1e-6\n";
  cmd_synth(config(two), 5, dir.string());
  cmd_multibeam(config(two), (dir / "measurement.txt").string(), (dir / "mb").string());
  CHECK(fs::exists(dir / "mb" / "etch_map_1.txt"));
  CHECK(fs::exists(dir / "mb" / "etch_map_2.txt"));
  CHECK(fs::exists(dir / "mb" / "combined_forward.txt"));
  cmd_kernel_dump(config(two), (dir / "k").string());
  const MatrixFile k12 = read_matrix((dir / "k" / "kernel_1_2.txt").string());
  CHECK_FALSE(fs::exists(dir / "k" / "kernel_2_1.txt"));
  const GridPair g = build_geometry(config(two));
  const KernelMatrix direct = assemble_cross(Beam::gaussian(1, 2.0), Beam::gaussian(1, 4.0), g.dwell, *g.domain);
  CHECK(k12.values == direct.values);
  const MatrixFile k11 = read_matrix((dir / "k" / "kernel_1_1.txt").string());
  CHECK(k11.values == k11.values.transpose());
  fs::remove_all(dir);
}

#include "ibf/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace ibf {

const char* to_string(SolverMode mode) noexcept {
  switch (mode) {
    case SolverMode::pseudoinverse: return "pseudoinverse";
    case SolverMode::truncated_fit: return "truncated-fit";
    case SolverMode::rkhs: return "rkhs";
    case SolverMode::rbf_nonneg: return "rbf-nonneg";
    case SolverMode::multibeam: return "multibeam";
  }
  return "?";
}

namespace {

struct Entry {
  std::string value;
  int line = 0;
};

struct Section {
  std::string name;
  int line = 0;
  std::map<std::string, Entry> entries;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

class Reader {
 public:
  Reader(const Section& s, const std::string& file) : s_(s), file_(file) {}

  [[noreturn]] void error(int line, const std::string& msg) const {
    fail(ErrorKind::usage, file_ + ":" + std::to_string(line) + ": " + msg);
  }

  bool has(const std::string& key) const { return s_.entries.count(key) != 0; }
  int line_of(const std::string& key) const { return has(key) ? s_.entries.at(key).line : s_.line; }

  void allow(std::initializer_list<const char*> keys) const {
    std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, e] : s_.entries)
      if (!ok.count(k)) error(e.line, "unknown key '" + k + "' in [" + s_.name + "]");
  }

  void forbid(const std::string& key, const std::string& why) const {
    if (has(key)) error(line_of(key), "key '" + key + "' " + why);
  }

  std::string str(const std::string& key) const {
    if (!has(key)) error(s_.line, "[" + s_.name + "] is missing required key '" + key + "'");
    return s_.entries.at(key).value;
  }

  double real(const std::string& key) const {
    const std::string v = str(key);
    char* end = nullptr;
    errno = 0;
    const double x = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE || !std::isfinite(x))
      error(line_of(key), "'" + key + "' expects a finite number, got '" + v + "'");
    return x;
  }

  double positive(const std::string& key) const {
    const double x = real(key);
    if (!(x > 0.0)) error(line_of(key), "'" + key + "' must be positive");
    return x;
  }

  double nonnegative(const std::string& key) const {
    const double x = real(key);
    if (!(x >= 0.0)) error(line_of(key), "'" + key + "' must be nonnegative");
    return x;
  }

  std::uint64_t unsigned_int(const std::string& key) const {
    const std::string v = str(key);
    if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
      error(line_of(key), "'" + key + "' expects a nonnegative integer, got '" + v + "'");
    errno = 0;
    const unsigned long long x = std::strtoull(v.c_str(), nullptr, 10);
    if (errno == ERANGE) error(line_of(key), "'" + key + "' is out of range");
    return x;
  }

  Index count(const std::string& key, Index min = 0) const {
    const std::uint64_t x = unsigned_int(key);
    if (x > static_cast<std::uint64_t>(1) << 40 || static_cast<Index>(x) < min)
      error(line_of(key), "'" + key + "' must be at least " + std::to_string(min));
    return static_cast<Index>(x);
  }

  bool boolean(const std::string& key) const {
    const std::string v = str(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    error(line_of(key), "'" + key + "' expects true or false, got '" + v + "'");
  }

 private:
  const Section& s_;
  const std::string& file_;
};

BeamBlock parse_beam(const Reader& r, int line) {
  r.allow({"family", "dimension", "sigma", "cutoff", "inner_radius", "tube_radius", "b11", "b12", "b22"});
  BeamFamily family{};
  try {
    family = parse_beam_family(r.str("family"));
  } catch (const Error&) {
    r.error(r.line_of("family"), "unknown beam family '" + r.str("family") + "'");
  }
  int dim = 1;
  if (r.has("dimension")) {
    const Index d = r.count("dimension", 1);
    if (d > 2) r.error(r.line_of("dimension"), "dimension must be 1 or 2");
    dim = static_cast<int>(d);
  }
  auto only = [&](std::initializer_list<const char*> keys) {
    std::set<std::string> ok(keys.begin(), keys.end());
    ok.insert("family");
    ok.insert("dimension");
    for (const char* k : {"sigma", "cutoff", "inner_radius", "tube_radius", "b11", "b12", "b22"})
      if (!ok.count(k)) r.forbid(k, std::string("does not apply to family ") + to_string(family));
  };
  try {
    switch (family) {
      case BeamFamily::gaussian:
        only({"sigma"});
        return {Beam::gaussian(dim, r.positive("sigma")), line};
      case BeamFamily::cauchy_poisson:
        only({"sigma"});
        return {Beam::cauchy(dim, r.positive("sigma")), line};
      case BeamFamily::moving_average_ball:
        only({"sigma"});
        return {Beam::ball(dim, r.positive("sigma")), line};
      case BeamFamily::moving_average_cube:
        only({"sigma"});
        return {Beam::cube(dim, r.positive("sigma")), line};
      case BeamFamily::sinc_truncation:
        only({"cutoff"});
        return {Beam::sinc(dim, r.positive("cutoff")), line};
      case BeamFamily::tube_poisson:
        only({"inner_radius", "tube_radius"});
        if (dim != 1) r.error(r.line_of("dimension"), "tube_poisson is one-dimensional");
        return {Beam::tube(r.nonnegative("inner_radius"), r.positive("tube_radius")), line};
      case BeamFamily::gaussian_aniso: {
        only({"b11", "b12", "b22"});
        Eigen::MatrixXd B(dim, dim);
        B(0, 0) = r.positive("b11");
        if (dim == 2) {
          B(1, 1) = r.positive("b22");
          B(0, 1) = B(1, 0) = r.has("b12") ? r.real("b12") : 0.0;
        } else {
          r.forbid("b12", "needs dimension = 2");
          r.forbid("b22", "needs dimension = 2");
        }
        return {Beam::gaussian_aniso(B), line};
      }
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::usage) throw;
    r.error(line, e.what());
  }
  r.error(line, "unhandled beam family");
}

GeometryBlock parse_geometry(const Reader& r) {
  r.allow({"shape", "half_length", "half_x", "half_y", "width", "radius", "mask_file", "spacing", "margin",
           "measure", "max_side"});
  GeometryBlock g;
  const std::string shape = r.str("shape");
  std::set<std::string> used{"shape", "spacing", "margin", "measure", "max_side"};
  if (shape == "interval") {
    g.shape = Shape::interval;
    g.half_length = r.positive("half_length");
    used.insert("half_length");
  } else if (shape == "rectangle") {
    g.shape = Shape::rectangle;
    g.half_x = r.positive("half_x");
    g.half_y = r.positive("half_y");
    used.insert({"half_x", "half_y"});
  } else if (shape == "stadium") {
    g.shape = Shape::stadium;
    g.width = r.positive("width");
    used.insert("width");
  } else if (shape == "disk") {
    g.shape = Shape::disk;
    g.radius = r.positive("radius");
    used.insert("radius");
  } else if (shape == "mask_file") {
    g.shape = Shape::mask_file;
    g.mask_file = r.str("mask_file");
    if (!std::filesystem::exists(g.mask_file)) r.error(r.line_of("mask_file"), "mask file not found: " + g.mask_file);
    used.insert("mask_file");
  } else {
    r.error(r.line_of("shape"), "shape must be interval, rectangle, stadium, disk or mask_file");
  }
  for (const char* k : {"half_length", "half_x", "half_y", "width", "radius", "mask_file"})
    if (!used.count(k)) r.forbid(k, "does not apply to shape " + shape);
  if (g.shape == Shape::mask_file)
    r.forbid("spacing", "is taken from the mask file");
  else
    g.spacing = r.positive("spacing");
  if (r.has("margin")) g.margin = r.nonnegative("margin");
  if (r.has("measure")) {
    try {
      g.measure = parse_kernel_measure(r.str("measure"));
    } catch (const Error&) {
      r.error(r.line_of("measure"), "measure must be lattice or continuous");
    }
  }
  if (r.has("max_side")) g.max_side = r.count("max_side", 1);
  return g;
}

SolverBlock parse_solver(const Reader& r) {
  r.allow({"mode", "n_tr", "l_noise", "gamma", "nonneg", "center_stride"});
  SolverBlock s;
  const std::string mode = r.str("mode");
  if (mode == "pseudoinverse") s.mode = SolverMode::pseudoinverse;
  else if (mode == "truncated-fit") s.mode = SolverMode::truncated_fit;
  else if (mode == "rkhs") s.mode = SolverMode::rkhs;
  else if (mode == "rbf-nonneg") s.mode = SolverMode::rbf_nonneg;
  else if (mode == "multibeam") s.mode = SolverMode::multibeam;
  else r.error(r.line_of("mode"), "mode must be pseudoinverse, truncated-fit, rkhs, rbf-nonneg or multibeam");
  if (r.has("n_tr") && r.has("l_noise")) r.error(r.line_of("l_noise"), "give either n_tr or l_noise, not both");
  if (r.has("n_tr")) s.n_tr = r.count("n_tr", 1);
  if (r.has("l_noise")) s.l_noise = r.positive("l_noise");
  if (r.has("gamma")) s.gamma = r.nonnegative("gamma");
  if (r.has("nonneg")) s.nonneg = r.boolean("nonneg");
  if (r.has("center_stride")) s.center_stride = r.count("center_stride", 1);
  const bool modal = s.mode == SolverMode::pseudoinverse || s.mode == SolverMode::truncated_fit;
  if (modal && !s.n_tr && !s.l_noise)
    r.error(r.line_of("mode"), std::string("mode ") + mode + " needs n_tr or l_noise");
  if (!modal) {
    r.forbid("n_tr", "applies only to modal solvers");
    r.forbid("l_noise", "applies only to modal solvers");
  }
  if (s.mode != SolverMode::multibeam) r.forbid("nonneg", "applies only to mode multibeam");
  if (s.mode != SolverMode::rbf_nonneg) r.forbid("center_stride", "applies only to mode rbf-nonneg");
  if (s.mode == SolverMode::pseudoinverse) r.forbid("gamma", "does not apply to mode pseudoinverse");
  return s;
}

}  // namespace

RunConfig parse_config(std::istream& is, const std::string& name) {
  std::vector<Section> sections;
  std::string raw;
  int lineno = 0;
  auto error = [&](const std::string& msg) {
    fail(ErrorKind::usage, name + ":" + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(is, raw)) {
    ++lineno;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') error("malformed section header");
      const std::string sec = trim(line.substr(1, line.size() - 2));
      static const std::set<std::string> known{"beam", "geometry", "solver", "spectrum", "synth", "io"};
      if (!known.count(sec)) error("unknown section [" + sec + "]");
      if (sec != "beam")
        for (const auto& s : sections)
          if (s.name == sec) error("duplicate section [" + sec + "] (first at line " + std::to_string(s.line) + ")");
      sections.push_back({sec, lineno, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) error("expected 'key = value'");
    if (sections.empty()) error("key outside of any section");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    const auto hash = value.find(" #");
    if (hash != std::string::npos) value = trim(value.substr(0, hash));
    if (key.empty()) error("empty key");
    auto& entries = sections.back().entries;
    if (entries.count(key)) error("duplicate key '" + key + "' (first at line " + std::to_string(entries[key].line) + ")");
    entries[key] = {value, lineno};
  }

  RunConfig cfg;
  cfg.source = name;
  for (const auto& s : sections) {
    const Reader r(s, name);
    if (s.name == "beam") {
      cfg.beams.push_back(parse_beam(r, s.line));
    } else if (s.name == "geometry") {
      cfg.geometry = parse_geometry(r);
    } else if (s.name == "solver") {
      cfg.solver = parse_solver(r);
    } else if (s.name == "spectrum") {
      r.allow({"rows", "dump", "modes", "fit_fraction"});
      if (r.has("rows")) cfg.spectrum.rows = r.count("rows", 1);
      if (r.has("dump")) cfg.spectrum.dump = r.count("dump");
      if (r.has("modes")) cfg.spectrum.modes = r.count("modes", 1);
      if (r.has("fit_fraction")) {
        cfg.spectrum.fit_fraction = r.positive("fit_fraction");
        if (cfg.spectrum.fit_fraction > 1.0) r.error(r.line_of("fit_fraction"), "fit_fraction must not exceed 1");
      }
    } else if (s.name == "synth") {
      r.allow({"components", "noise"});
      if (r.has("components")) cfg.synth.components = r.count("components", 1);
      if (r.has("noise")) cfg.synth.noise = r.nonnegative("noise");
    } else if (s.name == "io") {
      r.allow({"input", "output", "seed"});
      if (r.has("input")) cfg.io.input = r.str("input");
      if (r.has("output")) cfg.io.output = r.str("output");
      if (r.has("seed")) cfg.io.seed = r.unsigned_int("seed");
    }
  }
  if (cfg.beams.empty()) fail(ErrorKind::usage, name + ": missing [beam] section");
  if (!cfg.geometry) fail(ErrorKind::usage, name + ": missing [geometry] section");
  for (const auto& b : cfg.beams) {
    const int want = (cfg.geometry->shape == Shape::interval) ? 1 : 2;
    if (cfg.geometry->shape != Shape::mask_file && b.beam.dimension() != want)
      fail(ErrorKind::usage, name + ":" + std::to_string(b.line) + ": beam dimension " +
                                 std::to_string(b.beam.dimension()) + " does not match the geometry");
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::usage, "cannot open config file " + path);
  return parse_config(is, path);
}

}  // namespace ibf

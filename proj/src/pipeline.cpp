#include "ibf/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>

#include "ibf/io.hpp"
#include "ibf/solvers.hpp"
#include "ibf/spectral.hpp"

namespace ibf {

void Manifest::add(const std::string& key, const std::string& value) { entries_.emplace_back(key, value); }
void Manifest::add(const std::string& key, double value) { entries_.emplace_back(key, format_double(value)); }
void Manifest::add(const std::string& key, Index value) { entries_.emplace_back(key, std::to_string(value)); }

void Manifest::write(const std::string& path) const {
  std::ofstream os(path);
  if (!os) fail(ErrorKind::invalid_input, "cannot open " + path + " for writing");
  for (const auto& [k, v] : entries_) os << k << " = " << v << '\n';
}

NormalStream::NormalStream(std::uint64_t seed) : engine_(seed) {}

double NormalStream::next() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  constexpr double scale = 0x1.0p-53;
  const double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * scale;  // (0, 1]
  const double u2 = static_cast<double>(engine_() >> 11) * scale;          // [0, 1)
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(phi);
  has_spare_ = true;
  return r * std::cos(phi);
}

namespace {

namespace fs = std::filesystem;

std::string join(const std::string& dir, const std::string& file) { return (fs::path(dir) / file).string(); }

void prepare_dir(const std::string& dir) {
  if (dir.empty()) fail(ErrorKind::usage, "no output directory given (--out or [io] output)");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::invalid_input, "cannot create output directory " + dir + ": " + ec.message());
}

double max_scale(const RunConfig& cfg) {
  double s = 0.0;
  for (const auto& b : cfg.beams) s = std::max(s, b.beam.scale());
  return s;
}

AssemblyOptions assembly(const RunConfig& cfg) {
  AssemblyOptions opt;
  opt.measure = cfg.geometry->measure;
  opt.max_side = cfg.geometry->max_side;
  return opt;
}

const Beam& single_beam(const RunConfig& cfg, const char* what) {
  if (cfg.beams.size() != 1)
    fail(ErrorKind::usage, std::string(what) + " takes exactly one [beam] section, found " +
                               std::to_string(cfg.beams.size()));
  return cfg.beams.front().beam;
}

// Singular system behind the modal solvers: dense, or a tensor product for
// separable beams on rectangles.
struct Modal {
  std::optional<SpectralSystem> dense;
  std::optional<TensorSystem> tensor;
  GridPtr dwell;
  GridPtr domain;

  Index available() const { return dense ? std::min(dense->usable(), dense->left_count()) : tensor->size(); }
  Index count() const { return dense ? dense->usable() : tensor->size(); }
  double lambda(Index n) const { return dense ? dense->lambda(n) : tensor->modes[static_cast<std::size_t>(n)].lambda; }
  Eigen::VectorXd lambdas() const {
    Eigen::VectorXd l(count());
    for (Index n = 0; n < l.size(); ++n) l(n) = lambda(n);
    return l;
  }
  Eigen::VectorXd left(Index n) const { return dense ? Eigen::VectorXd(dense->h.col(n)) : tensor->left(n); }
  Eigen::VectorXd right(Index n) const { return dense ? Eigen::VectorXd(dense->t.col(n)) : tensor->right(n); }

  FitResult fit(const SampleSet& s, Index n_tr, double gamma) const {
    return dense ? fit_truncated(s, *dense, n_tr, gamma) : fit_truncated(s, *tensor, n_tr, gamma);
  }
  FieldMap filtered(const FitResult& f) const {
    return dense ? reconstruct_filtered(f, *dense) : reconstruct_filtered(f, *tensor);
  }
  FieldMap etch(const FitResult& f) const { return dense ? dwell_from_coeffs(f, *dense) : dwell_from_coeffs(f, *tensor); }
};

bool use_tensor(const Beam& beam, const Grid& domain) {
  return beam.dimension() == 2 && beam.separable() && !domain.masked();
}

Modal build_modal(const Beam& beam, const GridPair& grids, const AssemblyOptions& opt, Index left, Index tensor_modes) {
  Modal m;
  m.dwell = grids.dwell;
  m.domain = grids.domain;
  if (use_tensor(beam, *grids.domain)) {
    m.tensor = build_tensor_system(beam, grids, 0, opt);
    const Index pairs = m.tensor->x.usable() * m.tensor->y.usable();
    m.tensor->modes = tensor_order_2d(m.tensor->x, m.tensor->y, std::min(tensor_modes, pairs));
  } else {
    m.dense = build_spectral_system(beam, grids, opt, -1);
    if (left >= 0 && left < m.dense->left_count()) m.dense->h.conservativeResize(Eigen::NoChange, left);
  }
  return m;
}

Modal build_modal_for(const Beam& beam, const GridPair& grids, const AssemblyOptions& opt, Index needed,
                      Index tensor_modes) {
  if (use_tensor(beam, *grids.domain)) {
    const Index avail = std::max(tensor_modes, needed);
    return build_modal(beam, grids, opt, -1, avail);
  }
  return build_modal(beam, grids, opt, needed, 0);
}

SampleSet finite_samples(const FieldMap& h, const Eigen::VectorXd& raw) {
  const Grid& g = h.grid();
  SampleSet s;
  std::vector<Index> nodes;
  for (Index i : g.included_indices())
    if (std::isfinite(raw(i))) nodes.push_back(i);
  s.points.resize(static_cast<Index>(nodes.size()), g.dimension());
  s.values.resize(static_cast<Index>(nodes.size()));
  for (std::size_t r = 0; r < nodes.size(); ++r) {
    s.points.row(static_cast<Index>(r)) = g.point(nodes[r]).transpose();
    s.values(static_cast<Index>(r)) = h(nodes[r]);
  }
  s.nodes = std::move(nodes);
  return s;
}

struct Measurement {
  FieldMap field;
  Eigen::VectorXd raw;  // nan where the file had no value
};

Measurement load_measurement(const std::string& input, const GridPair& grids) {
  if (input.empty()) fail(ErrorKind::usage, "no input file given (--input or [io] input)");
  if (!fs::exists(input)) fail(ErrorKind::usage, "input file not found: " + input);
  const MatrixFile file = read_matrix(input);
  if (!file.grid) fail(ErrorKind::invalid_input, input + ": measurement file has no grid descriptor");
  const Grid& g = *file.grid;
  const Grid& d = *grids.domain;
  bool ok = g.dimension() == d.dimension();
  for (Index k = 0; ok && k < d.dimension(); ++k) {
    const Axis& a = g.axis(k);
    const Axis& b = d.axis(k);
    ok = a.count == b.count && std::abs(a.lower - b.lower) <= 1e-9 * b.spacing &&
         std::abs(a.spacing - b.spacing) <= 1e-12 * b.spacing;
  }
  if (!ok) fail(ErrorKind::invalid_input, input + ": measurement grid does not match the configured geometry");
  const Index nx = g.axis(0).count;
  Eigen::VectorXd raw(d.size()), v(d.size());
  for (Index i = 0; i < d.size(); ++i) {
    raw(i) = file.values(i / nx, i % nx);
    if (!d.included(i)) raw(i) = std::numeric_limits<double>::quiet_NaN();
    v(i) = std::isfinite(raw(i)) ? raw(i) : 0.0;
  }
  return {FieldMap(grids.domain, std::move(v)), std::move(raw)};
}

double rms_over(const FieldMap& f, const std::vector<Index>& nodes) {
  if (nodes.empty()) return 0.0;
  double s = 0.0;
  for (Index i : nodes) s += f(i) * f(i);
  return std::sqrt(s / static_cast<double>(nodes.size()));
}

void add_beam(Manifest& m, const std::string& prefix, const Beam& b) {
  m.add(prefix + "family", to_string(b.family()));
  m.add(prefix + "dimension", b.dimension());
  m.add(prefix + "scale", b.scale());
}

void add_geometry(Manifest& m, const GridPair& g) {
  m.add("domain_nodes", g.domain->included_count());
  m.add("dwell_nodes", g.dwell->size());
  m.add("spacing", g.domain->axis(0).spacing);
}

void write_coefficients(const std::string& path, const Eigen::VectorXd& c) { write_matrix(path, c); }

void add_warnings(Manifest& m, const std::vector<std::string>& warnings) {
  m.add("warnings", static_cast<Index>(warnings.size()));
  for (std::size_t i = 0; i < warnings.size(); ++i) m.add("warning_" + std::to_string(i + 1), warnings[i]);
}

struct MultibeamOutcome {
  std::vector<FieldMap> etch;
  FieldMap forward;
};

MultibeamOutcome run_multibeam(const RunConfig& cfg, const GridPair& grids, const FieldMap& h) {
  std::vector<Beam> beams;
  for (const auto& b : cfg.beams) beams.push_back(b.beam);
  const MultiBeamSystem mb = build_multibeam(beams, grids.dwell, grids.domain, assembly(cfg));
  std::vector<FieldMap> t = multibeam_solve(mb, h, cfg.solver.gamma, cfg.solver.nonneg);
  FieldMap fwd = combined_forward(mb, t);
  return {std::move(t), std::move(fwd)};
}

void write_multibeam(const RunConfig& cfg, const GridPair& grids, const Measurement& m, const std::string& out,
                     bool single_names) {
  prepare_dir(out);
  const MultibeamOutcome r = run_multibeam(cfg, grids, m.field);
  const std::vector<Index> nodes = finite_samples(m.field, m.raw).nodes;
  FieldMap residual(grids.domain, m.field.values() - r.forward.values());
  Manifest man;
  man.add("command", single_names ? "solve" : "multibeam");
  man.add("mode", "multibeam");
  man.add("beam_count", static_cast<Index>(cfg.beams.size()));
  for (std::size_t i = 0; i < cfg.beams.size(); ++i) add_beam(man, "beam_" + std::to_string(i + 1) + "_", cfg.beams[i].beam);
  add_geometry(man, grids);
  man.add("measure", to_string(cfg.geometry->measure));
  man.add("gamma", cfg.solver.gamma);
  man.add("nonneg", cfg.solver.nonneg ? "true" : "false");
  man.add("residual_rms", rms_over(residual, nodes));
  man.add("signal_rms", rms_over(m.field, nodes));
  double max_dwell = 0.0, min_dwell = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < r.etch.size(); ++i) {
    const FieldMap& t = r.etch[i];
    const std::string name = single_names ? "etch_map.txt" : "etch_map_" + std::to_string(i + 1) + ".txt";
    write_field(join(out, name), t);
    max_dwell = std::max(max_dwell, t.values().cwiseAbs().maxCoeff());
    min_dwell = std::min(min_dwell, t.values().minCoeff());
    if (!single_names) man.add("max_dwell_" + std::to_string(i + 1), t.values().cwiseAbs().maxCoeff());
  }
  man.add("max_dwell", max_dwell);
  man.add("min_dwell", min_dwell);
  write_field(join(out, single_names ? "filtered_map.txt" : "combined_forward.txt"), r.forward);
  write_field(join(out, "residual_map.txt"), residual);
  man.write(join(out, "manifest.txt"));
}

}  // namespace

GridPair build_geometry(const RunConfig& cfg) {
  if (!cfg.geometry) fail(ErrorKind::usage, "missing [geometry] section");
  const GeometryBlock& g = *cfg.geometry;
  const double scale = max_scale(cfg);
  const double margin = g.margin.value_or(kDwellMarginScales * scale);
  GridPtr domain;
  try {
    switch (g.shape) {
      case Shape::interval: domain = make_interval_grids(g.half_length, g.spacing, g.spacing).domain; break;
      case Shape::rectangle: domain = make_rectangle_grids(g.half_x, g.half_y, g.spacing, g.spacing).domain; break;
      case Shape::stadium: domain = make_stadium_mask(g.width, g.spacing); break;
      case Shape::disk: domain = make_disk_mask(g.radius, g.spacing); break;
      case Shape::mask_file: {
        const MatrixFile f = read_matrix(g.mask_file);
        if (!f.grid) fail(ErrorKind::invalid_input, g.mask_file + ": mask file has no grid descriptor");
        std::vector<std::uint8_t> mask(static_cast<std::size_t>(f.grid->size()));
        const Index nx = f.grid->axis(0).count;
        for (Index i = 0; i < f.grid->size(); ++i) {
          const double v = f.values(i / nx, i % nx);
          mask[static_cast<std::size_t>(i)] = std::isfinite(v) && v != 0.0 ? 1 : 0;
        }
        domain = std::make_shared<const Grid>(f.grid->axes(), std::move(mask));
        break;
      }
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::invalid_argument) fail(ErrorKind::usage, std::string("geometry: ") + e.what());
    throw;
  }
  if (domain->included_count() == 0) fail(ErrorKind::usage, "geometry: the domain contains no nodes");
  for (const auto& b : cfg.beams)
    if (b.beam.dimension() != domain->dimension())
      fail(ErrorKind::usage, "beam dimension does not match the geometry");
  return {make_dwell_grid(*domain, margin), domain};
}

void cmd_spectrum(const RunConfig& cfg, const std::string& out) {
  const Beam& beam = single_beam(cfg, "spectrum");
  const GridPair grids = build_geometry(cfg);
  prepare_dir(out);
  const Modal sys = build_modal(beam, grids, assembly(cfg), -1, cfg.spectrum.modes);
  const Index count = sys.count();
  if (count == 0) fail(ErrorKind::numeric_failure, "spectrum: no eigenvalue above the clamp threshold");

  const bool interval = cfg.geometry->shape == Shape::interval;
  const double L = grids.domain->axis(0).upper();
  const Index rows = std::min(cfg.spectrum.rows, count);
  std::ofstream tab(join(out, "spectrum.txt"));
  if (!tab) fail(ErrorKind::invalid_input, "cannot write spectrum table");
  if (interval)
    tab << "# n lambda k parity asymptotic fit_residual\n";
  else if (sys.tensor)
    tab << "# n lambda kx ky\n";
  else
    tab << "# n lambda\n";
  for (Index n = 0; n < rows; ++n) {
    tab << n + 1 << ' ' << format_double(sys.lambda(n));
    if (interval && sys.lambda(n) >= 1e-6) {
      const FieldMap tn = sys.dense->right(n);
      const ModeParity parity = detect_parity(tn);
      const WavenumberFit fit = fit_wavenumber(tn, parity, cfg.spectrum.fit_fraction, L);
      tab << ' ' << format_double(fit.k) << ' ' << (parity == ModeParity::even ? "even" : "odd") << ' '
          << format_double(asymptotic_eigenvalue(beam, fit.k)) << ' ' << format_double(fit.residual);
    } else if (interval) {
      tab << " nan - nan nan";
    } else if (sys.tensor) {
      const TensorMode& m = sys.tensor->modes[static_cast<std::size_t>(n)];
      tab << ' ' << m.k + 1 << ' ' << m.l + 1;
    }
    tab << '\n';
  }
  tab.close();

  const Index dump = std::min(cfg.spectrum.dump, std::min(count, sys.available()));
  for (Index n = 0; n < dump; ++n) {
    write_field(join(out, "right_" + std::to_string(n + 1) + ".txt"), FieldMap(grids.dwell, sys.right(n)));
    write_field(join(out, "left_" + std::to_string(n + 1) + ".txt"), FieldMap(grids.domain, sys.left(n)));
  }

  Manifest man;
  man.add("command", "spectrum");
  add_beam(man, "beam_", beam);
  add_geometry(man, grids);
  man.add("measure", to_string(cfg.geometry->measure));
  man.add("system", sys.tensor ? "tensor" : "dense");
  man.add("modes", count);
  man.add("lambda_1", sys.lambda(0));
  man.add("operator_norm", std::sqrt(sys.lambda(0)));
  man.add("asymptotic_lambda_max", asymptotic_eigenvalue(beam, Eigen::VectorXd::Zero(beam.dimension())));
  if (sys.dense) man.add("clamp_threshold", sys.dense->clamp_threshold);
  man.add("trace", sys.lambdas().sum());
  auto ratio = [](const Eigen::VectorXd& v, const Grid& g) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (Index i : g.included_indices()) lo = std::min(lo, v(i)), hi = std::max(hi, v(i));
    return lo / hi;
  };
  man.add("right_1_min_over_max", ratio(sys.right(0), *grids.dwell));
  if (sys.available() > 0) man.add("left_1_min_over_max", ratio(sys.left(0), *grids.domain));
  if (interval && beam.family() == BeamFamily::gaussian) {
    const auto decay = decay_diagnostics(*sys.dense, 0, beam.sigma(), L);
    for (std::size_t j = 0; j < decay.size(); ++j) {
      const std::string p = "decay_" + std::to_string(j + 1) + "_";
      man.add(p + "x", decay[j].x);
      man.add(p + "ratio", decay[j].ratio);
    }
  }
  man.write(join(out, "manifest.txt"));
}

void cmd_solve(const RunConfig& cfg, const std::string& input, const std::string& out) {
  const GridPair grids = build_geometry(cfg);
  const Measurement m = load_measurement(input, grids);
  if (cfg.solver.mode == SolverMode::multibeam) {
    if (cfg.beams.size() == 1) return write_multibeam(cfg, grids, m, out, true);
    return write_multibeam(cfg, grids, m, out, false);
  }
  const Beam& beam = single_beam(cfg, to_string(cfg.solver.mode));
  const SampleSet samples = finite_samples(m.field, m.raw);
  if (samples.size() == 0) fail(ErrorKind::invalid_input, input + ": no finite values inside the domain");
  prepare_dir(out);

  Manifest man;
  man.add("command", "solve");
  man.add("mode", to_string(cfg.solver.mode));
  add_beam(man, "beam_", beam);
  add_geometry(man, grids);
  man.add("measure", to_string(cfg.geometry->measure));
  man.add("samples", samples.size());

  FitResult fit;
  std::optional<FieldMap> filtered, etch;
  switch (cfg.solver.mode) {
    case SolverMode::pseudoinverse:
    case SolverMode::truncated_fit: {
      const AssemblyOptions opt = assembly(cfg);
      Index n_tr = cfg.solver.n_tr.value_or(0);
      const Index needed = cfg.solver.l_noise ? -1 : n_tr;
      const Modal sys =
          build_modal_for(beam, grids, opt, needed, std::max(cfg.spectrum.modes, n_tr));
      std::vector<std::string> notes;
      if (cfg.solver.l_noise) {
        if (beam.family() != BeamFamily::gaussian)
          fail(ErrorKind::usage, "l_noise truncation needs a gaussian beam; give n_tr instead");
        const TruncationChoice tc = choose_truncation(*cfg.solver.l_noise, beam.sigma(), sys.lambdas());
        man.add("l_noise", *cfg.solver.l_noise);
        man.add("truncation_threshold", tc.threshold);
        if (!tc.warning.empty()) fail(ErrorKind::numeric_failure, "solve: " + tc.warning);
        n_tr = tc.n_tr;
        if (sys.tensor && n_tr == sys.count())
          notes.push_back("truncation limited by spectrum.modes = " + std::to_string(sys.count()));
      }
      if (n_tr > sys.available())
        fail(ErrorKind::invalid_argument, "solve: N_tr = " + std::to_string(n_tr) + " exceeds the " +
                                              std::to_string(sys.available()) + " available modes");
      if (cfg.solver.mode == SolverMode::pseudoinverse) {
        fit.n_tr = n_tr;
        fit.coefficients.resize(n_tr);
        for (Index n = 0; n < n_tr; ++n) fit.coefficients(n) = weighted_inner(*grids.domain, sys.left(n), m.field.values());
      } else {
        fit = sys.fit(samples, n_tr, cfg.solver.gamma);
      }
      fit.warnings.insert(fit.warnings.end(), notes.begin(), notes.end());
      filtered = sys.filtered(fit);
      etch = sys.etch(fit);
      man.add("system", sys.tensor ? "tensor" : "dense");
      man.add("lambda_1", sys.lambda(0));
      if (n_tr > 0) man.add("lambda_n_tr", sys.lambda(n_tr - 1));
      break;
    }
    case SolverMode::rkhs: {
      if (samples.size() > cfg.geometry->max_side)
        fail(ErrorKind::resource_limit, "rkhs: " + std::to_string(samples.size()) +
                                            " samples exceed max_side = " + std::to_string(cfg.geometry->max_side));
      fit = rkhs_fit(samples, beam, cfg.solver.gamma);
      etch = rkhs_dwell(fit, beam, samples).sample(grids.dwell);
      Eigen::VectorXd pred = Eigen::VectorXd::Zero(grids.domain->size());
      const std::vector<Index> inc = grids.domain->included_indices();
      Eigen::MatrixXd pts(static_cast<Index>(inc.size()), grids.domain->dimension());
      for (std::size_t r = 0; r < inc.size(); ++r) pts.row(static_cast<Index>(r)) = grids.domain->point(inc[r]).transpose();
      const Eigen::VectorXd p = rkhs_predict(fit, beam, samples, pts);
      for (std::size_t r = 0; r < inc.size(); ++r) pred(inc[r]) = p(static_cast<Index>(r));
      filtered = FieldMap(grids.domain, std::move(pred));
      break;
    }
    case SolverMode::rbf_nonneg: {
      const Grid& dw = *grids.dwell;
      const Index stride = cfg.solver.center_stride;
      std::vector<Index> centers;
      for (Index i = 0; i < dw.size(); ++i) {
        const auto [ix, iy] = dw.lattice_coords(i);
        if (ix % stride == 0 && iy % stride == 0) centers.push_back(i);
      }
      if (static_cast<Index>(centers.size()) > cfg.geometry->max_side)
        fail(ErrorKind::resource_limit, "rbf-nonneg: " + std::to_string(centers.size()) +
                                            " centers exceed max_side; raise center_stride");
      Eigen::MatrixXd cpts(static_cast<Index>(centers.size()), dw.dimension());
      for (std::size_t j = 0; j < centers.size(); ++j) cpts.row(static_cast<Index>(j)) = dw.point(centers[j]).transpose();
      try {
        fit = rbf_fit_nonneg(samples, cpts, beam, cfg.solver.gamma);
      } catch (const ConvergenceFailure& e) {
        fail(ErrorKind::convergence_failure, std::string("rbf-nonneg: ") + e.what());
      }
      // Point weights alpha_j at the centres become dwell densities alpha_j / cell.
      Eigen::VectorXd t = Eigen::VectorXd::Zero(dw.size());
      for (std::size_t j = 0; j < centers.size(); ++j) t(centers[j]) = fit.coefficients(static_cast<Index>(j)) / dw.cell_measure();
      etch = FieldMap(grids.dwell, std::move(t));
      filtered = apply_forward(*etch, beam, grids.domain);
      man.add("centers", static_cast<Index>(centers.size()));
      break;
    }
    case SolverMode::multibeam: break;
  }

  FieldMap residual(grids.domain, m.field.values() - filtered->values());
  man.add("n_tr", fit.n_tr);
  man.add("gamma", fit.gamma);
  if (cfg.solver.mode != SolverMode::pseudoinverse) man.add("empirical_error", fit.empirical_error);
  man.add("residual_rms", rms_over(residual, samples.nodes));
  man.add("signal_rms", rms_over(m.field, samples.nodes));
  man.add("max_dwell", etch->values().cwiseAbs().maxCoeff());
  man.add("min_dwell", etch->values().minCoeff());
  man.add("coefficient_count", fit.coefficients.size());
  if (fit.coefficients.size() > 0) {
    man.add("min_coefficient", fit.coefficients.minCoeff());
    man.add("max_coefficient", fit.coefficients.maxCoeff());
  }
  add_warnings(man, fit.warnings);

  write_field(join(out, "etch_map.txt"), *etch);
  write_field(join(out, "filtered_map.txt"), *filtered);
  write_field(join(out, "residual_map.txt"), residual);
  write_coefficients(join(out, "coefficients.txt"), fit.coefficients);
  man.write(join(out, "manifest.txt"));
}

void cmd_synth(const RunConfig& cfg, std::uint64_t seed, const std::string& out) {
  const GridPair grids = build_geometry(cfg);
  prepare_dir(out);
  NormalStream rng(seed);
  const Index M = cfg.synth.components;
  Eigen::VectorXd h = Eigen::VectorXd::Zero(grids.domain->size());
  Manifest man;
  man.add("command", "synth");
  man.add("seed", std::to_string(seed));
  man.add("generator", "mt19937_64 box-muller");
  add_geometry(man, grids);
  man.add("components", M);
  for (std::size_t b = 0; b < cfg.beams.size(); ++b) {
    const Beam& beam = cfg.beams[b].beam;
    const Modal sys = build_modal_for(beam, grids, assembly(cfg), M, M);
    if (sys.available() < M)
      fail(ErrorKind::invalid_argument, "synth: only " + std::to_string(sys.available()) + " modes available");
    const std::string p = "beam_" + std::to_string(b + 1) + "_";
    add_beam(man, p, beam);
    for (Index n = 0; n < M; ++n) {
      const double c = rng.next();
      h += c * sys.left(n);
      man.add(p + "c_" + std::to_string(n + 1), c);
    }
  }
  const std::vector<Index> inc = grids.domain->included_indices();
  const double signal = rms_over(FieldMap(grids.domain, h), inc);
  const double sd = cfg.synth.noise * signal;
  if (sd > 0.0)
    for (Index i : inc) h(i) += sd * rng.next();
  man.add("signal_rms", signal);
  man.add("noise", cfg.synth.noise);
  man.add("noise_sd", sd);
  write_field(join(out, "measurement.txt"), FieldMap(grids.domain, std::move(h)));
  man.write(join(out, "manifest.txt"));
}

void cmd_multibeam(const RunConfig& cfg, const std::string& input, const std::string& out) {
  const GridPair grids = build_geometry(cfg);
  const Measurement m = load_measurement(input, grids);
  write_multibeam(cfg, grids, m, out, false);
}

void cmd_kernel_dump(const RunConfig& cfg, const std::string& out) {
  const GridPair grids = build_geometry(cfg);
  prepare_dir(out);
  Manifest man;
  man.add("command", "kernel-dump");
  add_geometry(man, grids);
  man.add("measure", to_string(cfg.geometry->measure));
  for (std::size_t i = 0; i < cfg.beams.size(); ++i) {
    add_beam(man, "beam_" + std::to_string(i + 1) + "_", cfg.beams[i].beam);
    for (std::size_t j = i; j < cfg.beams.size(); ++j) {
      const KernelMatrix K = assemble_cross(cfg.beams[i].beam, cfg.beams[j].beam, grids.dwell, *grids.domain, assembly(cfg));
      const std::string name = "kernel_" + std::to_string(i + 1) + "_" + std::to_string(j + 1) + ".txt";
      write_matrix(join(out, name), K.values);
      man.add("file_" + std::to_string(i + 1) + "_" + std::to_string(j + 1), name);
    }
  }
  // Row and column j of every kernel is dwell node j.
  write_field(join(out, "dwell_grid.txt"), FieldMap::zeros(grids.dwell));
  man.write(join(out, "manifest.txt"));
}

}  // namespace ibf

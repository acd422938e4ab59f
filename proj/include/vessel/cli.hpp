#pragma once

// Command-line front end: fit | mesh | voxelize | eval | synth | gradcheck.
//
// Exit codes: 0 success, 1 input error, 2 divergence or numeric failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vessel/error.hpp"
#include "vessel/fit.hpp"
#include "vessel/gradcheck.hpp"
#include "vessel/io.hpp"
#include "vessel/metrics.hpp"
#include "vessel/synth.hpp"
#include "vessel/voxelizer.hpp"

namespace vessel {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitNumeric = 2;

namespace cli_detail {

inline GridShape parse_shape(const std::string& s) {
  GridShape g;
  char c1 = 0, c2 = 0;
  std::istringstream ss(s);
  std::string rest;
  if (!(ss >> g.nx >> c1 >> g.ny >> c2 >> g.nz) || c1 != ',' || c2 != ',' || (ss >> rest) || !g.valid()) {
    throw InputError("--shape expects X,Y,Z with positive integers, got '" + s + "'");
  }
  return g;
}

inline Params load_params(const std::string& path) {
  auto doc = read_params_json(path);
  for (const auto& w : doc.warnings) std::cerr << "warning: " << path << ": " << w << "\n";
  return doc.params;
}

struct FitArgs {
  std::string seg, centerline, config, sparse_mask, out_params, out_mesh, out_vox, report;
  bool stage4 = false;
  unsigned long long seed = 0;
  int threads = 1;
  FitHyper hyper;
};

inline int cmd_fit(FitArgs a) {
  FitInputs in;
  in.segmentation = read_binary_volume(a.seg);
  in.preliminary_centerline = read_polyline(a.centerline);
  if (!a.config.empty()) {
    parse_fit_config(io_detail::read_file(a.config), a.hyper, [&](const std::string& k, const std::string& v) {
      if (k == "seed") {
        a.seed = static_cast<unsigned long long>(fit_detail::parse_int(k, v));
        return true;
      }
      return false;
    });
  }
  if (a.stage4) a.hyper.enabled[3] = true;
  a.hyper.threads = a.threads;
  if (!a.sparse_mask.empty()) in.slice_mask = read_slice_mask(a.sparse_mask);

  const FitResult r = fit_vessel(in, a.hyper);
  write_params_json(r.params, a.out_params);
  if (!a.out_mesh.empty()) write_mesh_obj(vessel_mesh(r.params, a.hyper.s_mesh), a.out_mesh);
  if (!a.out_vox.empty()) {
    VoxelizeOptions vo;
    vo.tau = a.hyper.tau;
    vo.margin = a.hyper.margin;
    vo.threads = a.threads;
    write_volume(to_float_grid(soft_voxelize(vessel_mesh(r.params, a.hyper.s_mesh), in.segmentation.shape(), vo).grid),
                 a.out_vox);
  }
  auto j = fit_report_json(r.report);
  j["seed"] = a.seed;
  if (!a.report.empty()) write_json(j, a.report);
  std::cout << "dice " << r.report.dice << "  hd95 " << r.report.hd95 << "  chamfer " << r.report.chamfer << "  ("
            << r.report.wall_seconds << " s)\n";
  return kExitOk;
}

struct MeshArgs {
  std::string params, out;
  int sections = 64;
  int radial = 0;
};

inline int cmd_mesh(const MeshArgs& a) {
  Params p = load_params(a.params);
  if (a.radial != 0 && a.radial != p.P) {
    for (const auto& row : p.adjustment_cp)
      for (double x : row)
        if (x != 0.0) throw InputError("--radial differs from the params' P and the radial adjustments are non-zero");
    p.P = a.radial;
    for (auto& row : p.adjustment_cp) row.assign(static_cast<std::size_t>(a.radial), 0.0);
  }
  if (a.sections < 2) throw InputError("--sections must be at least 2");
  const Mesh m = vessel_mesh(p, static_cast<std::size_t>(a.sections));
  write_mesh_obj(m, a.out);
  std::cout << m.vertices.size() << " vertices, " << m.faces.size() << " faces\n";
  return kExitOk;
}

struct VoxelizeArgs {
  std::string params, mesh, shape, axis = "X", out;
  double tau = 0.1;
  int margin = -1;
  int sections = 64;
  bool hard = false;
  int threads = 1;
};

inline int cmd_voxelize(const VoxelizeArgs& a) {
  if (a.params.empty() == a.mesh.empty()) throw InputError("give exactly one of --params and --mesh");
  const GridShape shape = parse_shape(a.shape);
  const Mesh m = a.mesh.empty() ? vessel_mesh(load_params(a.params), static_cast<std::size_t>(a.sections)) : read_mesh_obj(a.mesh);
  VoxelizeOptions vo;
  if (!(a.tau > 0.0)) throw InputError("--tau must be positive");
  vo.tau = a.tau;
  if (a.margin >= 0) vo.margin = a.margin;
  vo.axis = parse_axis(a.axis);
  vo.threads = a.threads;
  const auto soft = soft_voxelize(m, shape, vo);
  if (a.hard) write_volume(harden(soft.grid), a.out);
  else write_volume(to_float_grid(soft.grid), a.out);
  return kExitOk;
}

struct EvalArgs {
  std::string pred, ref, pred_centerline, ref_centerline, mesh, out;
};

inline BinaryGrid as_binary(const Volume& v) {
  if (const auto* b = std::get_if<BinaryGrid>(&v)) return *b;
  const auto& f = std::get<VoxelGrid<float>>(v);
  BinaryGrid g(f.shape(), 0);
  for (std::size_t i = 0; i < f.size(); ++i) g[i] = f[i] > 0.5f ? 1 : 0;
  return g;
}

inline int cmd_eval(const EvalArgs& a) {
  EvalReport rep;
  const BinaryGrid pred = as_binary(read_volume(a.pred));
  const BinaryGrid ref = read_binary_volume(a.ref);
  if (!(pred.shape() == ref.shape())) throw InputError("--pred and --ref have different shapes");
  rep.dice = dice_score(pred, ref);
  if (a.pred_centerline.empty() != a.ref_centerline.empty()) {
    throw InputError("--pred-centerline and --ref-centerline go together");
  }
  if (!a.pred_centerline.empty()) {
    const auto pc = read_polyline(a.pred_centerline);
    const auto rc = read_polyline(a.ref_centerline);
    if (pc.empty() || rc.empty()) throw InputError("empty centerline file");
    rep.hd95 = hd95(pc, rc);
    rep.chamfer = chamfer(pc, rc);
    rep.has_centerline = true;
  }
  if (!a.mesh.empty()) {
    rep.mesh_quality = mesh_quality(read_mesh_obj(a.mesh));
    rep.has_mesh = true;
  }
  const auto j = eval_report_json(rep);
  if (!a.out.empty()) write_json(j, a.out);
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

struct SynthArgs {
  std::string kind = "helix", shape = "64,64,64", out_dir;
  unsigned long long seed = 0;
  double sparse_fraction = 1.0;
  bool jitter = false;
};

inline int cmd_synth(const SynthArgs& a) {
  SynthOptions so;
  so.jitter = a.jitter;
  const auto c = make_case(parse_case_kind(a.kind), parse_shape(a.shape), a.seed, so);
  namespace fs = std::filesystem;
  fs::create_directories(a.out_dir);
  const fs::path d(a.out_dir);
  write_volume(c.segmentation, (d / "segmentation.nrrd").string());
  write_polyline(c.preliminary_centerline, (d / "centerline.txt").string());
  write_polyline(c.centerline_gt, (d / "centerline_gt.txt").string());
  write_params_json(c.true_params, (d / "true_params.json").string());
  write_mesh_obj(vessel_mesh(c.true_params, c.sections), (d / "true_mesh.obj").string());
  if (a.sparse_fraction < 1.0) {
    write_slice_mask(sparsify_slices(c.segmentation, a.sparse_fraction, Axis::Z), (d / "slice_mask.json").string());
  }
  std::cout << to_string(c.kind) << ": " << count_foreground(c.segmentation) << " foreground voxels, "
            << c.preliminary_centerline.size() << " centerline points\n";
  return kExitOk;
}

inline int cmd_gradcheck(const GradcheckOptions& o) {
  const auto r = run_gradcheck(o);
  for (const auto& run : r.runs) {
    std::printf("stage %d axis %s: %zu/%zu passed (%zu flagged), max rel error %.3g\n", run.stage,
                to_string(run.axis).c_str(), run.report.n_passed, run.report.n_coordinates, run.report.n_flagged,
                run.report.max_rel_error);
    for (const auto& f : run.report.failures()) {
      std::printf("  coordinate %zu: analytic %.6g numeric %.6g refined %.6g\n", f.index, f.analytic, f.numeric,
                  f.numeric_refined);
    }
  }
  const bool ok = r.pass_fraction() >= o.required_fraction;
  std::printf("%s: %.2f%% of coordinates passed (need %.0f%%)\n", ok ? "PASS" : "FAIL", 100.0 * r.pass_fraction(),
              100.0 * o.required_fraction);
  return ok ? kExitOk : kExitNumeric;
}

}  // namespace cli_detail

inline int run_cli(int argc, char** argv) {
  using namespace cli_detail;
  CLI::App app{"Parametric vessel models fitted to segmentations"};
  app.require_subcommand(1);

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Fit vessel parameters to a segmentation");
  fit->add_option("--seg", fa.seg, "Binary segmentation (NRRD)")->required();
  fit->add_option("--centerline", fa.centerline, "Preliminary centerline (x y z per line)")->required();
  fit->add_option("--config", fa.config, "key=value hyperparameter file");
  fit->add_option("--sparse-mask", fa.sparse_mask, "Slice mask JSON restricting the Dice sums");
  fit->add_flag("--stage4", fa.stage4, "Run the radial adjustment stage");
  fit->add_option("--seed", fa.seed, "Random seed")->capture_default_str();
  fit->add_option("--threads", fa.threads, "Worker threads for voxelization")->capture_default_str()->check(CLI::PositiveNumber);
  fit->add_option("--out-params", fa.out_params, "Fitted params JSON")->required();
  fit->add_option("--out-mesh", fa.out_mesh, "Fitted mesh (OBJ)");
  fit->add_option("--out-vox", fa.out_vox, "Soft voxelization of the fit (float NRRD)");
  fit->add_option("--report", fa.report, "Fit report JSON");
  fit->add_option("--centerline-cp", fa.hyper.n_c, "Centerline control points")->capture_default_str();
  fit->add_option("--radius-cp", fa.hyper.n_r, "Radius control points")->capture_default_str();
  fit->add_option("--adjustment-cp", fa.hyper.n_a, "Radial adjustment control points")->capture_default_str();
  fit->add_option("--radial", fa.hyper.P, "Radial directions P")->capture_default_str();
  fit->add_option("--sections", fa.hyper.s_mesh, "Cross-sections of the training mesh")->capture_default_str();
  fit->add_option("--loss-samples", fa.hyper.s_loss, "Centerline samples in the losses")->capture_default_str();
  fit->add_option("--tau", fa.hyper.tau, "Sigmoid temperature")->capture_default_str();
  fit->add_option("--margin", fa.hyper.margin, "Bounding-box margin in voxels")->capture_default_str();
  for (int s = 0; s < 4; ++s) {
    const std::string n = std::to_string(s + 1);
    fit->add_option("--stage" + n + "-iters", fa.hyper.stages[static_cast<std::size_t>(s)].iterations,
                    "Stage " + n + " iterations")
        ->capture_default_str();
    fit->add_option("--stage" + n + "-lr", fa.hyper.stages[static_cast<std::size_t>(s)].learning_rate,
                    "Stage " + n + " learning rate")
        ->capture_default_str();
  }

  MeshArgs ma;
  auto* mesh = app.add_subcommand("mesh", "Build a mesh from a params document");
  mesh->add_option("--params", ma.params, "Params JSON")->required();
  mesh->add_option("--sections", ma.sections, "Cross-sections S")->capture_default_str();
  mesh->add_option("--radial", ma.radial, "Radial directions P (default: the params' P)");
  mesh->add_option("--out", ma.out, "Output OBJ")->required();

  VoxelizeArgs va;
  auto* vox = app.add_subcommand("voxelize", "Soft or hard voxelization of params or a mesh");
  vox->add_option("--params", va.params, "Params JSON");
  vox->add_option("--mesh", va.mesh, "Watertight OBJ mesh");
  vox->add_option("--shape", va.shape, "Grid shape X,Y,Z")->required();
  vox->add_option("--tau", va.tau, "Sigmoid temperature")->capture_default_str();
  vox->add_option("--margin", va.margin, "Bounding-box margin in voxels (default: 3 for tau 0.1)");
  vox->add_option("--axis", va.axis, "Slicing axis X, Y or Z")->capture_default_str();
  vox->add_option("--sections", va.sections, "Cross-sections when meshing params")->capture_default_str();
  vox->add_flag("--hard", va.hard, "Threshold at 0.5 and write uint8");
  vox->add_option("--threads", va.threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  vox->add_option("--out", va.out, "Output NRRD")->required();

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "Dice, HD95 and Chamfer of a prediction");
  ev->add_option("--pred", ea.pred, "Predicted volume (NRRD; float volumes are thresholded at 0.5)")->required();
  ev->add_option("--ref", ea.ref, "Reference segmentation (NRRD)")->required();
  ev->add_option("--pred-centerline", ea.pred_centerline, "Predicted centerline");
  ev->add_option("--ref-centerline", ea.ref_centerline, "Reference centerline");
  ev->add_option("--mesh", ea.mesh, "Mesh to report quality for");
  ev->add_option("--out", ea.out, "Report JSON");

  SynthArgs sa;
  auto* syn = app.add_subcommand("synth", "Generate a synthetic vessel case");
  syn->add_option("--kind", sa.kind, "straight | arc | helix | varying_radius | elliptic")->capture_default_str();
  syn->add_option("--shape", sa.shape, "Grid shape X,Y,Z")->capture_default_str();
  syn->add_option("--seed", sa.seed, "Random seed")->capture_default_str();
  syn->add_option("--sparse-fraction", sa.sparse_fraction, "Also write a slice mask keeping this fraction")
      ->capture_default_str();
  syn->add_flag("--jitter", sa.jitter, "Flip boundary voxels to emulate annotation noise");
  syn->add_option("--out-dir", sa.out_dir, "Output directory")->required();

  GradcheckOptions ga;
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of the stage 2 and 3 losses");
  gc->set_help_flag("--help", "Print this help message and exit");
  gc->add_option("--fixture", ga.fixture, "straight | arc")->capture_default_str();
  gc->add_option("--size", ga.size, "Grid edge length")->capture_default_str();
  gc->add_option("--h", ga.h, "Finite-difference step")->capture_default_str();
  gc->add_option("--seed", ga.seed, "Random seed")->capture_default_str();
  gc->add_option("--threads", ga.threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*fit) return cmd_fit(fa);
    if (*mesh) return cmd_mesh(ma);
    if (*vox) return cmd_voxelize(va);
    if (*ev) return cmd_eval(ea);
    if (*syn) return cmd_synth(sa);
    if (*gc) return cmd_gradcheck(ga);
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}

}  // namespace vessel

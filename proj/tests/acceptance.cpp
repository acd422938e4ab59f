// Acceptance run: one PASS/FAIL/WARN line per criterion A1..A10.
//
// Usage: vessel_acceptance [--known-red A5,...]
// Exit status is non-zero when a criterion fails, unless it is listed as
// known-red; known-red failures are still printed as FAIL.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "support.hpp"
#include "vessel/cli.hpp"

using namespace vessel;
using namespace vessel::testing;
namespace fs = std::filesystem;

namespace {

enum class Status { Pass, Fail, Warn };

struct Line {
  Status status = Status::Fail;
  std::string text;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

FitInputs inputs_of(const SyntheticCase& c) { return {c.segmentation, c.preliminary_centerline, c.endpoints, {}}; }

// Meshes built during the run, checked together under A3.
std::vector<std::pair<std::string, std::pair<Mesh, std::array<int, 2>>>> g_meshes;

void keep_mesh(const std::string& what, const Params& p, std::size_t S) {
  g_meshes.push_back({what, {vessel_mesh(p, S), {static_cast<int>(S), p.P}}});
}

Line check_a1() {
  const auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  bool ok = true;
  for (const char* fixture : {"straight", "arc"}) {
    GradcheckOptions o;
    o.fixture = fixture;
    o.size = 32;
    const auto r = run_gradcheck(o);
    std::size_t flagged = 0;
    for (const auto& run : r.runs) flagged += run.report.n_flagged;
    ok &= r.pass_fraction() >= o.required_fraction;
    detail += fmt("%s %.2f%% (%zu/%zu, %zu flagged)  ", fixture, 100 * r.pass_fraction(), r.n_passed, r.n_coordinates,
                  flagged);
  }
  const double secs = seconds_since(t0);
  ok &= secs < 300.0;
  return {ok ? Status::Pass : Status::Fail,
          "gradient correctness at 32^3, h=1e-3, need 99%: " + detail + fmt("in %.1f s", secs)};
}

Line check_a2() {
  std::mt19937_64 rng(2024);
  const GridShape shape{32, 32, 32};
  std::size_t compared = 0, occ_bad = 0, dist_bad = 0, outside_bad = 0, outside = 0;
  for (int m = 0; m < 20; ++m) {
    const Params p = random_tube(rng, 32);
    keep_mesh("random tube", p, 40);
    const Mesh mesh = vessel_mesh(p, 40);
    const MeshSdf sdf(mesh);
    for (Axis axis : {Axis::X, Axis::Y, Axis::Z}) {
      SoftVoxelizer vox(mesh, shape, {.axis = axis});
      const auto occ = vox.occupancy_grid();
      const auto dist = vox.distance_grid();
      for (std::size_t n : vox.computed_voxels()) {
        const int i = static_cast<int>(n % 32), j = static_cast<int>((n / 32) % 32), k = static_cast<int>(n / 1024);
        const Vec3d c = voxel_center(i, j, k);
        const double ud = sdf.unsigned_distance(c);
        const double s = sdf.inside(c) ? ud : -ud;
        ++compared;
        if (std::abs(s) > 1e-3 && (occ[n] != 0) != (s > 0)) ++occ_bad;
        if (dist[n] < ud - 1e-9) ++dist_bad;
      }
      const auto& box = vox.result().bbox;
      const auto& grid = vox.result().grid;
      for (int k = 0; k < 32; ++k)
        for (int j = 0; j < 32; ++j)
          for (int i = 0; i < 32; ++i) {
            if (box.contains(i, j, k)) continue;
            ++outside;
            if (grid(i, j, k) != 0.0) ++outside_bad;
          }
    }
  }
  const bool ok = occ_bad == 0 && dist_bad == 0 && outside_bad == 0;
  return {ok ? Status::Pass : Status::Fail,
          fmt("voxelizer vs exact SDF, 20 tubes x 3 axes: %zu voxels compared, %zu occupancy mismatches, %zu distance "
              "violations; %zu outside-box voxels, %zu nonzero",
              compared, occ_bad, dist_bad, outside, outside_bad)};
}

Line check_a3() {
  std::size_t bad = 0;
  std::string first_bad;
  for (const auto& [what, entry] : g_meshes) {
    const auto& [mesh, sp] = entry;
    const int S = sp[0], P = sp[1];
    const bool ok = validate_watertight(mesh).ok && mesh.vertices.size() == static_cast<std::size_t>(P * S + 2) &&
                    mesh.faces.size() == static_cast<std::size_t>(2 * P * S) && euler_characteristic(mesh) == 2 &&
                    signed_volume(mesh) > 0.0;
    if (!ok) {
      ++bad;
      if (first_bad.empty()) first_bad = what;
    }
  }
  return {bad == 0 && !g_meshes.empty() ? Status::Pass : Status::Fail,
          fmt("mesh topology: %zu meshes, %zu failing watertight / V=PS+2 / F=2PS / chi=2 / volume>0", g_meshes.size(),
              bad) +
              (first_bad.empty() ? "" : " (first: " + first_bad + ")")};
}

struct HelixRuns {
  SyntheticCase scase;
  FitResult full;
  double full_seconds = 0.0;
  double chamfer_gt = 0.0;
};

HelixRuns run_helix() {
  HelixRuns h;
  h.scase = make_case(CaseKind::Helix, {64, 64, 64}, 7);
  keep_mesh("helix truth", h.scase.true_params, h.scase.sections);
  const auto t0 = std::chrono::steady_clock::now();
  h.full = fit_vessel(inputs_of(h.scase), FitHyper{});
  h.full_seconds = seconds_since(t0);
  keep_mesh("helix fit", h.full.params, FitHyper{}.s_mesh);
  h.chamfer_gt = chamfer(sample_centerline(h.full.params, 512), h.scase.centerline_gt);
  return h;
}

Line check_a4(const HelixRuns& h) {
  const bool ok = h.full.report.dice >= 0.92 && h.chamfer_gt <= 2.0 && h.full_seconds < 1800.0;
  return {ok ? Status::Pass : Status::Fail,
          fmt("helix 64^3 default fit: Dice %.4f (need >= 0.92), centerline Chamfer %.3f vox (need <= 2.0), %.1f s",
              h.full.report.dice, h.chamfer_gt, h.full_seconds)};
}

Line check_a5(const HelixRuns& h) {
  FitInputs in = inputs_of(h.scase);
  in.slice_mask = sparsify_slices(h.scase.segmentation, 0.05, Axis::Z);
  const auto sparse = fit_vessel(in, FitHyper{});
  keep_mesh("helix sparse fit", sparse.params, FitHyper{}.s_mesh);
  FitHyper no3;
  no3.enabled[2] = false;
  const auto sparse_no3 = fit_vessel(in, no3);
  const double gap = 100.0 * (h.full.report.dice - sparse.report.dice);
  const bool ok = gap <= 2.0;
  return {ok ? Status::Pass : Status::Fail,
          fmt("sparse supervision, %zu of the axial slices kept: Dice %.4f vs full %.4f, gap %.2f points (need <= 2.0); "
              "without stage 3 %.4f",
              in.slice_mask->slices.size(), sparse.report.dice, h.full.report.dice, gap, sparse_no3.report.dice)};
}

Line check_a6() {
  const auto c = make_case(CaseKind::Elliptic, {64, 64, 64}, 7);
  keep_mesh("elliptic truth", c.true_params, c.sections);
  FitHyper off, on;
  on.enabled[3] = true;
  const auto a = fit_vessel(inputs_of(c), off);
  const auto b = fit_vessel(inputs_of(c), on);
  keep_mesh("elliptic fit with stage 4", b.params, on.s_mesh);
  const double gain = 100.0 * (b.report.dice - a.report.dice);
  return {gain >= 2.0 ? Status::Pass : Status::Fail,
          fmt("stage-4 efficacy, elliptic 64^3: Dice %.4f circular-only -> %.4f with stage 4, +%.2f points (need >= 2)",
              a.report.dice, b.report.dice, gain)};
}

Line check_a7() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-20.0, 20.0), ut(0.0, 1.0);
  std::uniform_int_distribution<int> un(4, 24);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Vec3d> cp(static_cast<std::size_t>(un(rng)));
    for (auto& p : cp) p = {u(rng), u(rng), u(rng)};
    const SplineCurve<Vec3d> curve(cp);
    const double t = trial == 0 ? 0.0 : (trial == 1 ? 1.0 : ut(rng));
    worst = std::max(worst, distance(eval(curve, t), eval_de_boor(curve, t)));
  }

  // Linear precision: collinear equidistant control points stay on the line.
  double off_line = 0.0;
  const Vec3d a{1, 2, 3}, d = normalized(Vec3d{1, -2, 0.5});
  std::vector<Vec3d> line;
  for (int i = 0; i < 10; ++i) line.push_back(a + d * (2.0 * i));
  for (const auto& p : sample_uniform(SplineCurve<Vec3d>(line), 257).samples) {
    const Vec3d r = p - a;
    off_line = std::max(off_line, norm(r - d * dot(r, d)));
  }

  // Local control: moving control point j changes the curve only where its
  // basis function is nonzero.
  bool local = true;
  std::vector<Vec3d> cp(14);
  for (auto& p : cp) p = {u(rng), u(rng), u(rng)};
  for (std::size_t j = 0; j < cp.size(); ++j) {
    auto moved = cp;
    moved[j] = moved[j] + Vec3d{1, 1, 1};
    const SplineCurve<Vec3d> c0(cp), c1(moved);
    for (int i = 0; i <= 400; ++i) {
      const double t = i / 400.0;
      const auto row = basis_row(cp.size(), t);
      bool support = false;
      for (std::size_t k = 0; k < row.count; ++k) support |= row.index[k] == j && row.weight[k] != 0.0;
      if (!support && !(eval(c0, t) == eval(c1, t))) local = false;
    }
  }
  const bool ok = worst < 1e-10 && off_line < 1e-9 && local;
  return {ok ? Status::Pass : Status::Fail,
          fmt("B-spline oracle: max |matrix - de Boor| %.2e over 1000 pairs (need < 1e-10), line deviation %.2e, local "
              "control %s",
              worst, off_line, local ? "holds" : "violated")};
}

Line check_a8() {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 50.0);
  std::vector<Vec3d> a(300), b(300);
  for (auto& p : a) p = {u(rng), u(rng), u(rng)};
  for (auto& p : b) p = {u(rng), u(rng), u(rng)};
  BinaryGrid ga({12, 12, 12}, 0), gb({12, 12, 12}, 0);
  for (std::size_t i = 0; i < ga.size(); ++i) {
    ga[i] = (rng() % 3) == 0;
    gb[i] = (rng() % 2) == 0;
  }
  bool ok = dice_score(ga, ga) == 1.0 && chamfer(a, a) == 0.0 && hd95(a, a) == 0.0;
  ok &= dice_score(ga, gb) == dice_score(gb, ga) && chamfer(a, b) == chamfer(b, a) && hd95(a, b) == hd95(b, a);

  // 100 point pairs at distance 1, then 4% of one side moved far away.
  std::vector<Vec3d> p, q;
  for (int i = 0; i < 100; ++i) {
    p.push_back({10.0 * i, 0, 0});
    q.push_back({10.0 * i, 1, 0});
  }
  for (int i = 0; i < 4; ++i) q[static_cast<std::size_t>(25 * i)].y = 100.0;
  const double robust = hd95(p, q);
  ok &= std::abs(robust - 1.0) < 1e-9 && hausdorff(p, q) > 90.0;
  return {ok ? Status::Pass : Status::Fail,
          fmt("metrics: identity and symmetry %s; hd95 with 4%% outliers at 100 vox = %.3f (expect 1)",
              ok ? "hold" : "violated", robust)};
}

int run_cli_args(std::vector<std::string> args) {
  args.insert(args.begin(), "vessel");
  std::vector<char*> argv;
  for (auto& s : args) argv.push_back(s.data());
  argv.push_back(nullptr);
  std::ostringstream sink;
  auto* old = std::cout.rdbuf(sink.rdbuf());
  const int code = run_cli(static_cast<int>(args.size()), argv.data());
  std::cout.rdbuf(old);
  return code;
}

Line check_a9() {
  const fs::path dir = fs::temp_directory_path() / "vessel_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::string detail;
  bool ok = run_cli_args({"synth", "--kind", "arc", "--shape", "48,48,48", "--seed", "5", "--out-dir",
                          (dir / "case").string()}) == kExitOk;
  for (const char* out : {"a.json", "b.json"}) {
    ok &= run_cli_args({"fit", "--seg", (dir / "case" / "segmentation.nrrd").string(), "--centerline",
                        (dir / "case" / "centerline.txt").string(), "--seed", "5", "--threads", "1", "--out-params",
                        (dir / out).string()}) == kExitOk;
  }
  const bool same = ok && io_detail::read_file((dir / "a.json").string()) == io_detail::read_file((dir / "b.json").string());
  detail += same ? "two fits bitwise identical" : "fits differ";

  // Round trips of every format.
  std::mt19937_64 rng(9);
  const auto c = make_case(CaseKind::VaryingRadius, {48, 48, 48}, 3);
  keep_mesh("varying radius truth", c.true_params, c.sections);
  const auto soft = to_float_grid(soft_voxelize(vessel_mesh(c.true_params, 64), c.segmentation.shape()).grid);
  const auto vol = parse_volume(encode_volume(soft));
  bool rt = std::get<VoxelGrid<float>>(vol) == soft;
  rt &= std::get<BinaryGrid>(parse_volume(encode_volume(c.segmentation))) == c.segmentation;
  const Mesh mesh = vessel_mesh(c.true_params, 50);
  const Mesh mb = parse_obj(encode_obj(mesh));
  rt &= mb.vertices == mesh.vertices && mb.faces == mesh.faces;
  rt &= parse_params(encode_params(c.true_params)).params == c.true_params;
  rt &= parse_polyline(encode_polyline(c.centerline_gt)) == c.centerline_gt;
  const auto mask = sparsify_slices(c.segmentation, 0.1);
  const auto mask_back = parse_slice_mask(encode_slice_mask(mask));
  rt &= mask_back.slices == mask.slices && mask_back.keep_fraction == mask.keep_fraction && mask_back.axis == mask.axis;
  detail += rt ? "; NRRD uint8/float, OBJ, params JSON, polyline, slice mask round-trip losslessly"
               : "; a format round trip lost data";
  return {same && rt ? Status::Pass : Status::Fail, "determinism and I/O: " + detail};
}

Line check_a10(const HelixRuns& h) {
  // Stage-2 start point: the params right after stage 1.
  const FitHyper hyper;
  const FitInputs in = inputs_of(h.scase);
  const auto ctx = make_context(in, hyper);
  const Params start = run_stage(init_params(in, hyper.n_c, hyper.n_r, hyper.P, hyper.s_loss, hyper.n_a), ctx,
                                 hyper.stages[0], {})
                           .params;
  StageConfig joint = StageConfig::defaults(3);
  joint.trainable = kCenterline | kRadius;
  joint.iterations = hyper.stages[1].iterations + hyper.stages[2].iterations;
  std::string outcome;
  double joint_dice = 0.0;
  bool diverged = false;
  try {
    const auto r = run_stage(start, ctx, joint, {}, Axis::X, hyper.divergence_factor);
    joint_dice = fitted_dice(r.params, hyper.s_mesh, h.scase.segmentation);
  } catch (const DivergenceError& e) {
    diverged = true;
    outcome = e.what();
  } catch (const NumericError& e) {
    diverged = true;
    outcome = e.what();
  }
  const double gap = 100.0 * (h.full.report.dice - joint_dice);
  if (diverged) return {Status::Pass, "joint centerline+radius from the stage-2 start diverged: " + outcome};
  const std::string text = fmt("joint centerline+radius from the stage-2 start: Dice %.4f vs staged %.4f, %.2f points "
                               "worse (expected >= 5 or divergence)",
                               joint_dice, h.full.report.dice, gap);
  return {gap >= 5.0 ? Status::Pass : Status::Warn, text};
}

std::set<std::string> parse_known_red(int argc, char** argv) {
  std::set<std::string> out;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) != "--known-red") continue;
    std::stringstream ss(argv[i + 1]);
    for (std::string id; std::getline(ss, id, ',');) out.insert(id);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  const auto known_red = parse_known_red(argc, argv);
  const auto t0 = std::chrono::steady_clock::now();
  std::map<int, Line> lines;
  auto run = [&](int id, const std::function<Line()>& fn) {
    std::cerr << "running A" << id << "...\n";
    try {
      lines[id] = fn();
    } catch (const std::exception& e) {
      lines[id] = {Status::Fail, std::string("threw: ") + e.what()};
    }
  };

  run(1, check_a1);
  run(2, check_a2);
  HelixRuns helix;
  bool helix_ok = true;
  try {
    helix = run_helix();
  } catch (const std::exception& e) {
    helix_ok = false;
    for (int id : {4, 5, 10}) lines[id] = {Status::Fail, std::string("helix fit threw: ") + e.what()};
  }
  if (helix_ok) {
    run(4, [&] { return check_a4(helix); });
    run(5, [&] { return check_a5(helix); });
    run(10, [&] { return check_a10(helix); });
  }
  run(6, check_a6);
  run(7, check_a7);
  run(8, check_a8);
  run(9, check_a9);
  run(3, check_a3);

  int hard_failures = 0;
  for (const auto& [id, line] : lines) {
    const std::string tag = "A" + std::to_string(id);
    const char* status = line.status == Status::Pass ? "PASS" : (line.status == Status::Warn ? "WARN" : "FAIL");
    std::string note;
    if (line.status == Status::Fail) {
      if (known_red.count(tag)) {
        note = "  [known red]";
      } else {
        ++hard_failures;
      }
    }
    std::cout << "[" << status << "] " << tag << " " << line.text << note << "\n";
  }
  std::cout << fmt("acceptance finished in %.1f s, %d unexpected failure(s)\n", seconds_since(t0), hard_failures);
  return hard_failures == 0 ? 0 : 1;
}

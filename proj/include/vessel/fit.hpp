#pragma once

// Four-stage fitting of vessel parameters to a binary segmentation.
//
//   stage 1  centerline   lambda (cl, e, vox, reg) = (1, 100, 0, 10)
//   stage 2  radius                                  (0,   0, 1,  0)
//   stage 3  centerline                              (0, 100, 1,  5)
//   stage 4  adjustments                             (0,   0, 1,  0)
//
// Only the stage's trainable group is updated; every other control point is
// left bitwise untouched. The voxelization axis advances once per forward
// pass and carries over between stages.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vessel/bspline.hpp"
#include "vessel/diff.hpp"
#include "vessel/error.hpp"
#include "vessel/grid.hpp"
#include "vessel/losses.hpp"
#include "vessel/metrics.hpp"
#include "vessel/params.hpp"
#include "vessel/sdf.hpp"
#include "vessel/voxelizer.hpp"

namespace vessel {

enum ParamGroup : unsigned {
  kNoGroup = 0,
  kCenterline = 1u << 0,
  kRadius = 1u << 1,
  kAdjustments = 1u << 2,
};

struct StageConfig {
  int stage_id = 1;
  LossWeights weights;
  unsigned trainable = kNoGroup;
  int iterations = 0;
  double learning_rate = 0.1;

  static StageConfig defaults(int stage_id) {
    switch (stage_id) {
      case 1:
        return {1, {1.0, 100.0, 0.0, 10.0}, kCenterline, 500, 0.05};
      case 2:
        return {2, {0.0, 0.0, 1.0, 0.0}, kRadius, 300, 0.1};
      case 3:
        return {3, {0.0, 100.0, 1.0, 5.0}, kCenterline, 300, 0.1};
      case 4:
        return {4, {0.0, 0.0, 1.0, 0.0}, kAdjustments, 300, 0.1};
      default:
        throw ArgumentError("stage id must be 1..4, got " + std::to_string(stage_id));
    }
  }

  void validate() const {
    weights.validate();
    if (iterations < 0) throw ArgumentError("stage iterations must be non-negative");
    if (!(learning_rate > 0.0)) throw ArgumentError("learning rate must be positive");
  }
};

struct FitInputs {
  BinaryGrid segmentation;
  std::vector<Vec3d> preliminary_centerline;
  std::optional<std::array<Vec3d, 2>> endpoints;  // defaults to polyline ends
  std::optional<SliceMask> slice_mask;

  Vec3d first_endpoint() const { return endpoints ? (*endpoints)[0] : preliminary_centerline.front(); }
  Vec3d last_endpoint() const { return endpoints ? (*endpoints)[1] : preliminary_centerline.back(); }

  void validate() const {
    if (preliminary_centerline.size() < 4) {
      throw InputError("preliminary centerline needs at least 4 points, got " +
                       std::to_string(preliminary_centerline.size()));
    }
    const auto shape = segmentation.shape();
    if (!shape.valid()) throw InputError("segmentation is empty");
    for (const auto& e : {first_endpoint(), last_endpoint()}) {
      if (!all_finite(e) || e.x < 0 || e.y < 0 || e.z < 0 || e.x > shape.nx || e.y > shape.ny || e.z > shape.nz) {
        throw InputError("centerline endpoint outside the segmentation grid");
      }
    }
  }
};

struct FitHyper {
  int n_c = 12;
  int n_r = 8;
  int n_a = 8;
  int P = 10;
  std::size_t s_loss = 128;
  std::size_t s_mesh = 64;
  std::array<StageConfig, 4> stages{StageConfig::defaults(1), StageConfig::defaults(2), StageConfig::defaults(3),
                                    StageConfig::defaults(4)};
  std::array<bool, 4> enabled{true, true, true, false};
  double tau = 0.1;
  int margin = 3;
  double cl_tolerance = kCenterlineTolerance;
  double divergence_factor = 10.0;
  int threads = 1;

  void validate() const {
    if (n_c < 4 || n_r < 4 || n_a < 4) throw ArgumentError("need at least 4 control points per spline");
    if (P < 3) throw ArgumentError("need at least 3 radial directions");
    if (s_loss < 3 || s_mesh < 2) throw ArgumentError("too few loss samples or mesh sections");
    if (!(tau > 0.0)) throw ArgumentError("tau must be positive");
    if (margin < 0) throw ArgumentError("margin must be non-negative");
    if (threads < 1) throw ArgumentError("threads must be positive");
    for (const auto& s : stages) s.validate();
  }
};

/// Points equidistant in cumulative chord length, endpoints kept.
inline std::vector<Vec3d> resample_arclength(const std::vector<Vec3d>& polyline, std::size_t n) {
  if (polyline.empty()) throw InputError("empty polyline");
  if (n < 2) throw ArgumentError("resampling needs at least 2 points");
  std::vector<double> cum(polyline.size(), 0.0);
  for (std::size_t i = 1; i < polyline.size(); ++i) cum[i] = cum[i - 1] + distance(polyline[i - 1], polyline[i]);
  const double total = cum.back();
  if (!(total > 0.0)) throw InputError("polyline has zero length");
  std::vector<Vec3d> out;
  out.reserve(n);
  std::size_t seg = 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0) {
      out.push_back(polyline.front());
      continue;
    }
    if (i + 1 == n) {
      out.push_back(polyline.back());
      continue;
    }
    const double s = total * static_cast<double>(i) / static_cast<double>(n - 1);
    while (seg + 1 < polyline.size() && cum[seg] < s) ++seg;
    const double len = cum[seg] - cum[seg - 1];
    const double f = len > 0.0 ? (s - cum[seg - 1]) / len : 0.0;
    out.push_back(polyline[seg - 1] + (polyline[seg] - polyline[seg - 1]) * f);
  }
  return out;
}

inline double polyline_length(const std::vector<Vec3d>& pts) {
  double L = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) L += distance(pts[i - 1], pts[i]);
  return L;
}

/// Least-squares control points for samples at t_i = i / (S - 1), with the
/// first and last control points pinned to the first and last samples. Falls
/// back to subsampling when the system is ill-conditioned.
inline std::vector<Vec3d> fit_spline_points(const std::vector<Vec3d>& samples, int n_control) {
  const std::size_t S = samples.size();
  const auto M = static_cast<std::size_t>(n_control);
  if (M < 4) throw ArgumentError("need at least 4 control points");
  if (S < 2) throw ArgumentError("need at least 2 samples");
  const auto n_free = static_cast<Eigen::Index>(M - 2);
  SamplingMatrix basis(M, S);
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(S), n_free);
  Eigen::MatrixXd Y(static_cast<Eigen::Index>(S), 3);
  for (std::size_t i = 0; i < S; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    for (int d = 0; d < 3; ++d) Y(r, d) = samples[i][d];
    const auto& row = basis.rows()[i];
    for (std::size_t j = 0; j < row.count; ++j) {
      const std::size_t c = row.index[j];
      const Vec3d* pinned = c == 0 ? &samples.front() : (c == M - 1 ? &samples.back() : nullptr);
      if (pinned != nullptr) {
        for (int d = 0; d < 3; ++d) Y(r, d) -= row.weight[j] * (*pinned)[d];
      } else {
        W(r, static_cast<Eigen::Index>(c - 1)) += row.weight[j];
      }
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(W, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const bool well_posed = static_cast<Eigen::Index>(S) >= n_free && sv(sv.size() - 1) > 1e-8 * sv(0);
  std::vector<Vec3d> cp;
  cp.reserve(M);
  if (well_posed) {
    const Eigen::MatrixXd C = svd.solve(Y);
    cp.push_back(samples.front());
    for (Eigen::Index j = 0; j < n_free; ++j) cp.push_back({C(j, 0), C(j, 1), C(j, 2)});
    cp.push_back(samples.back());
  } else {
    for (std::size_t j = 0; j < M; ++j) cp.push_back(samples[j * (S - 1) / (M - 1)]);
  }
  return cp;
}

/// Foreground volume estimate; with a slice mask the mean labeled-slice area
/// is extended over the labeled span.
inline double foreground_volume(const BinaryGrid& seg, const std::optional<SliceMask>& mask) {
  if (!mask) return static_cast<double>(count_foreground(seg));
  const auto shape = seg.shape();
  const int ax = index_of(mask->axis);
  const auto keep = mask->lookup(shape[ax]);
  std::vector<std::size_t> per_slice(static_cast<std::size_t>(shape[ax]), 0);
  for (int k = 0; k < shape.nz; ++k)
    for (int j = 0; j < shape.ny; ++j)
      for (int i = 0; i < shape.nx; ++i) {
        const int ijk[3] = {i, j, k};
        if (seg(i, j, k)) ++per_slice[static_cast<std::size_t>(ijk[ax])];
      }
  int first = -1, last = -1, labeled = 0;
  double area = 0.0;
  for (int s = 0; s < shape[ax]; ++s) {
    if (!keep[static_cast<std::size_t>(s)] || per_slice[static_cast<std::size_t>(s)] == 0) continue;
    if (first < 0) first = s;
    last = s;
    ++labeled;
    area += static_cast<double>(per_slice[static_cast<std::size_t>(s)]);
  }
  if (labeled == 0) return 0.0;
  return area / labeled * (last - first + 1);
}

inline Params init_params(const FitInputs& inputs, int n_c, int n_r, int P, std::size_t n_fit_samples = 128,
                          int n_a = -1) {
  inputs.validate();
  if (n_c < 4 || n_r < 4) throw ArgumentError("need at least 4 control points per spline");
  if (P < 3) throw ArgumentError("need at least 3 radial directions");
  if (n_a < 0) n_a = n_r;
  if (n_a < 4) throw ArgumentError("need at least 4 adjustment control points");
  const double L = polyline_length(inputs.preliminary_centerline);
  if (!(L > 0.0)) throw InputError("preliminary centerline has zero length");

  Params p;
  p.P = P;
  const auto samples = resample_arclength(inputs.preliminary_centerline, std::max<std::size_t>(n_fit_samples, 4 * static_cast<std::size_t>(n_c)));
  p.centerline_cp = fit_spline_points(samples, n_c);

  const double volume = foreground_volume(inputs.segmentation, inputs.slice_mask);
  if (!(volume > 0.0)) throw InputError("segmentation has no foreground");
  const double r0 = std::sqrt(volume / (std::numbers::pi * L));
  p.radius_cp.assign(static_cast<std::size_t>(n_r), r0);
  p.adjustment_cp.assign(static_cast<std::size_t>(n_a), std::vector<double>(static_cast<std::size_t>(P), 0.0));
  return p;
}

/// Adam over the flat coordinate vector.
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<double> m;
  std::vector<double> v;
};

/// Everything the stage objective needs besides the parameters.
struct ObjectiveContext {
  const BinaryGrid* segmentation = nullptr;
  std::vector<Vec3d> reference_samples;  // arc-length resampled, s_loss points
  Vec3d first_endpoint, last_endpoint;
  std::optional<SliceMask> mask;
  std::size_t s_loss = 128;
  std::size_t s_mesh = 64;
  double tau = 0.1;
  int margin = 3;
  double cl_tolerance = kCenterlineTolerance;
  double coord_scale = 1.0;  // voxel -> normalized image coordinates
  int threads = 1;
};

/// 2 / (largest grid extent): maps the grid onto [-1, 1].
inline double normalized_coord_scale(GridShape shape) {
  return 2.0 / static_cast<double>(std::max({shape.nx, shape.ny, shape.nz}));
}

inline ObjectiveContext make_context(const FitInputs& inputs, const FitHyper& hyper) {
  ObjectiveContext ctx;
  ctx.segmentation = &inputs.segmentation;
  ctx.reference_samples = resample_arclength(inputs.preliminary_centerline, hyper.s_loss);
  ctx.first_endpoint = inputs.first_endpoint();
  ctx.last_endpoint = inputs.last_endpoint();
  ctx.mask = inputs.slice_mask;
  ctx.s_loss = hyper.s_loss;
  ctx.s_mesh = hyper.s_mesh;
  ctx.tau = hyper.tau;
  ctx.margin = hyper.margin;
  ctx.cl_tolerance = hyper.cl_tolerance;
  ctx.coord_scale = normalized_coord_scale(inputs.segmentation.shape());
  ctx.threads = hyper.threads;
  return ctx;
}

/// Weighted stage loss. Terms with zero weight are skipped entirely. The
/// centerline terms are measured in normalized image coordinates; all three
/// are quadratic in position, so this is a factor coord_scale^2 on each.
template <class T>
T stage_objective(const VesselParams<T>& p, const ObjectiveContext& ctx, const LossWeights& w, Axis axis,
                  LossComponents<double>* parts = nullptr) {
  LossComponents<T> c;
  const double s2 = ctx.coord_scale * ctx.coord_scale;
  if (w.lambda_cl > 0.0 || w.lambda_reg > 0.0) {
    const auto samples = sample_centerline(p, ctx.s_loss);
    for (const auto& s : samples) {
      if (!all_finite(s)) throw NumericError("centerline samples", "non-finite sample");
    }
    if (w.lambda_cl > 0.0) c.cl = centerline_loss(samples, ctx.reference_samples, ctx.cl_tolerance) * s2;
    if (w.lambda_reg > 0.0) c.reg = curvature_reg(samples) * s2;
  }
  if (w.lambda_e > 0.0) {
    c.e = endpoint_loss(p.centerline_cp.front(), p.centerline_cp.back(), ctx.first_endpoint, ctx.last_endpoint) * s2;
  }
  if (w.lambda_vox > 0.0) {
    const auto mesh = vessel_mesh(p, ctx.s_mesh);
    VoxelizeOptions opts;
    opts.tau = ctx.tau;
    opts.margin = ctx.margin;
    opts.axis = axis;
    opts.threads = ctx.threads;
    opts.mask = ctx.mask;
    c.vox = voxel_dice_loss(mesh, *ctx.segmentation, opts);
  }
  if (parts != nullptr) *parts = {value(c.cl), value(c.e), value(c.vox), value(c.reg)};
  return total_loss(c, w);
}

struct StageResult {
  Params params;
  AdamState opt_state;
  std::vector<double> loss_history;
  LossComponents<double> final_components;
  double final_loss = 0.0;
  Axis next_axis = Axis::X;
};

inline std::vector<bool> trainable_mask(const Params& p, unsigned groups) {
  std::vector<bool> mask;
  mask.reserve(p.n_coordinates());
  mask.insert(mask.end(), 3 * p.centerline_cp.size(), (groups & kCenterline) != 0);
  mask.insert(mask.end(), p.radius_cp.size(), (groups & kRadius) != 0);
  mask.insert(mask.end(), p.adjustment_cp.size() * static_cast<std::size_t>(p.P), (groups & kAdjustments) != 0);
  return mask;
}

/// Runs `cfg.iterations` Adam steps on the trainable groups.
inline StageResult run_stage(const Params& params, const ObjectiveContext& ctx, const StageConfig& cfg,
                             AdamState opt_state, Axis axis = Axis::X, double divergence_factor = 10.0) {
  params.validate();
  StageResult res;
  res.params = params;
  res.next_axis = axis;
  res.opt_state = std::move(opt_state);
  if (cfg.trainable == kNoGroup || cfg.iterations == 0) return res;
  cfg.validate();

  const auto train = trainable_mask(params, cfg.trainable);
  auto flat = flatten(params);
  auto& st = res.opt_state;
  if (st.m.size() != flat.size()) {
    st.m.assign(flat.size(), 0.0);
    st.v.assign(flat.size(), 0.0);
    st.step = 0;
  }

  double initial = 0.0;
  for (int it = 0; it < cfg.iterations; ++it) {
    const Axis ax = res.next_axis;
    const auto g = gradient(res.params, [&](const auto& p) { return stage_objective(p, ctx, cfg.weights, ax); });
    res.next_axis = next_axis(ax);
    res.loss_history.push_back(g.loss);
    if (it == 0) initial = g.loss;
    if (g.loss > divergence_factor * std::max(initial, 1e-12)) {
      throw DivergenceError("stage " + std::to_string(cfg.stage_id) + " diverged at iteration " + std::to_string(it) +
                            ": loss " + std::to_string(g.loss) + " vs initial " + std::to_string(initial));
    }
    const auto grad = g.grad.flat();
    ++st.step;
    const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
    const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
    for (std::size_t i = 0; i < flat.size(); ++i) {
      if (!train[i]) continue;
      st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * grad[i];
      st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * grad[i] * grad[i];
      const double mhat = st.m[i] / bc1;
      const double vhat = st.v[i] / bc2;
      flat[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + st.eps);
    }
    res.params = unflatten(flat, res.params);
  }
  res.final_loss = stage_objective(res.params, ctx, cfg.weights, res.next_axis, &res.final_components);
  if (!std::isfinite(res.final_loss)) throw NumericError("stage " + std::to_string(cfg.stage_id), "final loss");
  return res;
}

struct StageReport {
  int stage_id = 0;
  int iterations = 0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  LossComponents<double> final_components;
  double seconds = 0.0;
};

struct FitReport {
  std::vector<StageReport> stages;
  double dice = 0.0;     // hard rasterization of the fitted mesh vs segmentation
  double hd95 = 0.0;     // fitted centerline vs preliminary centerline
  double chamfer = 0.0;
  MeshQuality mesh_quality;
  double mean_radius = 0.0;
  std::optional<double> sparse_fraction;
  double wall_seconds = 0.0;
};

struct FitResult {
  Params params;
  FitReport report;
};

/// Stage error wrapper so failures carry the stage id.
class StageError : public Error {
 public:
  StageError(int stage, const std::string& what) : Error("stage " + std::to_string(stage) + ": " + what), stage_(stage) {}
  int stage() const { return stage_; }

 private:
  int stage_;
};

inline double mean_radius(const Params& p, std::size_t S) {
  const auto r = SamplingMatrix(p.radius_cp.size(), S).apply(p.radius_cp);
  double s = 0.0;
  for (double x : r) s += x;
  return s / static_cast<double>(r.size());
}

/// Dice of the hard (exact) rasterization of the params' mesh.
inline double fitted_dice(const Params& p, std::size_t s_mesh, const BinaryGrid& seg) {
  const Mesh mesh = vessel_mesh(p, s_mesh);
  return dice_score(rasterize_exact(mesh, seg.shape(), {.allow_partial = true}), seg);
}

inline FitResult fit_vessel(const FitInputs& inputs, const FitHyper& hyper) {
  const auto t0 = std::chrono::steady_clock::now();
  hyper.validate();
  inputs.validate();
  FitResult out;
  out.params = init_params(inputs, hyper.n_c, hyper.n_r, hyper.P, hyper.s_loss, hyper.n_a);
  const ObjectiveContext ctx = make_context(inputs, hyper);

  Axis axis = Axis::X;
  for (int s = 0; s < 4; ++s) {
    if (!hyper.enabled[static_cast<std::size_t>(s)]) continue;
    const StageConfig& cfg = hyper.stages[static_cast<std::size_t>(s)];
    const auto ts = std::chrono::steady_clock::now();
    StageResult r;
    try {
      r = run_stage(out.params, ctx, cfg, AdamState{}, axis, hyper.divergence_factor);
    } catch (const DivergenceError&) {
      throw;
    } catch (const NumericError&) {
      throw;
    } catch (const Error& e) {
      throw StageError(cfg.stage_id, e.what());
    }
    out.params = r.params;
    axis = r.next_axis;
    StageReport sr;
    sr.stage_id = cfg.stage_id;
    sr.iterations = static_cast<int>(r.loss_history.size());
    sr.initial_loss = r.loss_history.empty() ? r.final_loss : r.loss_history.front();
    sr.final_loss = r.final_loss;
    sr.final_components = r.final_components;
    sr.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - ts).count();
    out.report.stages.push_back(sr);
  }

  auto& rep = out.report;
  const Mesh mesh = vessel_mesh(out.params, hyper.s_mesh);
  rep.dice = dice_score(rasterize_exact(mesh, inputs.segmentation.shape(), {.allow_partial = true}), inputs.segmentation);
  const auto fitted = sample_centerline(out.params, hyper.s_loss);
  rep.hd95 = hd95(fitted, inputs.preliminary_centerline);
  rep.chamfer = chamfer(fitted, inputs.preliminary_centerline);
  rep.mesh_quality = mesh_quality(mesh);
  rep.mean_radius = mean_radius(out.params, hyper.s_mesh);
  if (inputs.slice_mask) rep.sparse_fraction = inputs.slice_mask->keep_fraction;
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

namespace fit_detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty()) throw FormatError("config key '" + key + "': not a number: '" + v + "'");
  return x;
}

inline int parse_int(const std::string& key, const std::string& v) {
  const double x = parse_double(key, v);
  if (x != std::floor(x)) throw FormatError("config key '" + key + "': not an integer: '" + v + "'");
  return static_cast<int>(x);
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw FormatError("config key '" + key + "': not a boolean: '" + v + "'");
}

}  // namespace fit_detail

/// Applies one key=value setting. Returns false for keys this function does
/// not own (the caller decides whether that is an error).
inline bool apply_fit_setting(FitHyper& h, const std::string& key, const std::string& val) {
  using namespace fit_detail;
  if (key == "n_c" || key == "centerline-cp") h.n_c = parse_int(key, val);
  else if (key == "n_r" || key == "radius-cp") h.n_r = parse_int(key, val);
  else if (key == "n_a" || key == "adjustment-cp") h.n_a = parse_int(key, val);
  else if (key == "radial" || key == "P") h.P = parse_int(key, val);
  else if (key == "sections" || key == "s_mesh") h.s_mesh = static_cast<std::size_t>(parse_int(key, val));
  else if (key == "loss-samples" || key == "s_loss") h.s_loss = static_cast<std::size_t>(parse_int(key, val));
  else if (key == "tau") h.tau = parse_double(key, val);
  else if (key == "margin") h.margin = parse_int(key, val);
  else if (key == "cl-tolerance") h.cl_tolerance = parse_double(key, val);
  else if (key == "threads") h.threads = parse_int(key, val);
  else if (key == "stage4") h.enabled[3] = parse_bool(key, val);
  else if (key.size() > 6 && key.rfind("stage", 0) == 0 && key[5] >= '1' && key[5] <= '4' && key[6] == '-') {
    const auto s = static_cast<std::size_t>(key[5] - '1');
    const std::string field = key.substr(7);
    if (field == "iters") h.stages[s].iterations = parse_int(key, val);
    else if (field == "lr") h.stages[s].learning_rate = parse_double(key, val);
    else if (field == "enable") h.enabled[s] = parse_bool(key, val);
    else return false;
  } else {
    return false;
  }
  return true;
}

}  // namespace vessel

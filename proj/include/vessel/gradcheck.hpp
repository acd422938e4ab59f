#pragma once

// Finite-difference checks of the stage-2 and stage-3 losses on small
// synthetic fixtures.

#include <string>
#include <vector>

#include "vessel/diff.hpp"
#include "vessel/fit.hpp"
#include "vessel/synth.hpp"

namespace vessel {

struct GradcheckOptions {
  std::string fixture = "straight";  // straight | arc
  int size = 32;
  double h = 1e-3;
  double rel_tol = 1e-2;
  double abs_tol = 1e-4;
  double required_fraction = 0.99;
  unsigned long long seed = 0;
  int threads = 1;
};

struct GradcheckRun {
  int stage = 0;
  Axis axis = Axis::X;
  FdReport report;
};

struct GradcheckResult {
  std::vector<GradcheckRun> runs;
  std::size_t n_coordinates = 0;
  std::size_t n_passed = 0;

  double pass_fraction() const {
    return n_coordinates == 0 ? 1.0 : static_cast<double>(n_passed) / static_cast<double>(n_coordinates);
  }
};

struct GradcheckFixture {
  SyntheticCase scase;
  FitInputs inputs;
  Params params;
  ObjectiveContext ctx;
};

/// Evaluation point: initialized params with a deterministic, non-trivial
/// perturbation of every group so no coordinate sits at a symmetric optimum.
inline GradcheckFixture make_gradcheck_fixture(const GradcheckOptions& o) {
  const CaseKind kind = parse_case_kind(o.fixture);
  if (kind != CaseKind::Straight && kind != CaseKind::Arc) throw ArgumentError("gradcheck fixtures are straight and arc");
  GradcheckFixture f;
  f.scase = make_case(kind, {o.size, o.size, o.size}, o.seed);
  f.inputs = {f.scase.segmentation, f.scase.preliminary_centerline, f.scase.endpoints, {}};
  FitHyper hyper;
  hyper.threads = o.threads;
  f.params = init_params(f.inputs, hyper.n_c, hyper.n_r, hyper.P, hyper.s_loss, hyper.n_a);
  for (std::size_t i = 0; i < f.params.centerline_cp.size(); ++i) {
    const double s = static_cast<double>(i);
    f.params.centerline_cp[i] = f.params.centerline_cp[i] + Vec3d{0.3 * std::sin(1.7 * s), 0.3 * std::cos(2.3 * s), 0.1 * std::sin(0.9 * s)};
  }
  for (std::size_t i = 0; i < f.params.radius_cp.size(); ++i) f.params.radius_cp[i] *= 1.0 + 0.08 * std::sin(1.3 * i + 0.4);
  for (std::size_t a = 0; a < f.params.adjustment_cp.size(); ++a)
    for (std::size_t k = 0; k < f.params.adjustment_cp[a].size(); ++k)
      f.params.adjustment_cp[a][k] = 0.2 * std::sin(0.7 * a + 1.1 * k);
  f.ctx = make_context(f.inputs, hyper);
  return f;
}

/// Stage-2 and stage-3 total losses, each on all three slicing axes.
inline GradcheckResult run_gradcheck(const GradcheckOptions& o) {
  const GradcheckFixture f = make_gradcheck_fixture(o);
  GradcheckResult res;
  for (int stage : {2, 3}) {
    const LossWeights w = StageConfig::defaults(stage).weights;
    for (Axis axis : {Axis::X, Axis::Y, Axis::Z}) {
      GradcheckRun run;
      run.stage = stage;
      run.axis = axis;
      run.report = finite_difference_check(
          f.params, [&](const auto& p) { return stage_objective(p, f.ctx, w, axis); }, o.h, o.rel_tol, o.abs_tol);
      res.n_coordinates += run.report.n_coordinates;
      res.n_passed += run.report.n_passed;
      res.runs.push_back(std::move(run));
    }
  }
  return res;
}

}  // namespace vessel

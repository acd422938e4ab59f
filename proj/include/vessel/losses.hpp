#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "vessel/ad.hpp"
#include "vessel/bspline.hpp"
#include "vessel/error.hpp"
#include "vessel/grid.hpp"
#include "vessel/vec.hpp"
#include "vessel/voxelizer.hpp"

namespace vessel {

inline constexpr double kDiceSmoothing = 1e-7;
inline constexpr double kCenterlineTolerance = 0.2;

struct LossWeights {
  double lambda_cl = 0.0;
  double lambda_e = 0.0;
  double lambda_vox = 0.0;
  double lambda_reg = 0.0;

  void validate() const {
    if (lambda_cl < 0 || lambda_e < 0 || lambda_vox < 0 || lambda_reg < 0) {
      throw ArgumentError("loss weights must be non-negative");
    }
    if (lambda_cl == 0 && lambda_e == 0 && lambda_vox == 0 && lambda_reg == 0) {
      throw ArgumentError("at least one loss weight must be positive");
    }
  }
};

namespace loss_detail {

inline void check_same_shape(GridShape a, GridShape b) {
  if (!(a == b)) throw ArgumentError("soft and reference grids have different shapes");
}

// Visits voxel indices allowed by the optional slice mask.
template <class F>
void for_each_masked(GridShape shape, const std::optional<SliceMask>& mask, F&& f) {
  if (!mask) {
    for (std::size_t n = 0; n < shape.count(); ++n) f(n);
    return;
  }
  const int ax = index_of(mask->axis);
  const auto keep = mask->lookup(shape[ax]);
  for (int k = 0; k < shape.nz; ++k)
    for (int j = 0; j < shape.ny; ++j)
      for (int i = 0; i < shape.nx; ++i) {
        const int ijk[3] = {i, j, k};
        if (!keep[static_cast<std::size_t>(ijk[ax])]) continue;
        f(static_cast<std::size_t>(i) +
          static_cast<std::size_t>(shape.nx) * (static_cast<std::size_t>(j) + static_cast<std::size_t>(shape.ny) * k));
      }
}

}  // namespace loss_detail

struct DiceSums {
  double intersection = 0.0;  // sum soft * ref
  double soft = 0.0;
  double ref = 0.0;
};

template <class S>
DiceSums dice_sums(const VoxelGrid<S>& soft, const BinaryGrid& ref, const std::optional<SliceMask>& mask = {}) {
  loss_detail::check_same_shape(soft.shape(), ref.shape());
  DiceSums s;
  loss_detail::for_each_masked(soft.shape(), mask, [&](std::size_t n) {
    const double p = static_cast<double>(soft[n]);
    const double r = ref[n] ? 1.0 : 0.0;
    s.intersection += p * r;
    s.soft += p;
    s.ref += r;
  });
  return s;
}

/// 1 - (2 sum(soft*ref) + eps) / (sum(soft) + sum(ref) + eps).
template <class S>
double dice_loss(const VoxelGrid<S>& soft, const BinaryGrid& ref, const std::optional<SliceMask>& mask = {}) {
  const auto s = dice_sums(soft, ref, mask);
  return 1.0 - (2.0 * s.intersection + kDiceSmoothing) / (s.soft + s.ref + kDiceSmoothing);
}

/// d(dice_loss)/d(soft) per voxel; zero outside the mask.
inline VoxelGrid<double> dice_loss_gradient(const VoxelGrid<double>& soft, const BinaryGrid& ref,
                                            const std::optional<SliceMask>& mask = {}) {
  const auto s = dice_sums(soft, ref, mask);
  const double num = 2.0 * s.intersection + kDiceSmoothing;
  const double den = s.soft + s.ref + kDiceSmoothing;
  VoxelGrid<double> g(soft.shape(), 0.0);
  loss_detail::for_each_masked(soft.shape(), mask, [&](std::size_t n) {
    const double r = ref[n] ? 1.0 : 0.0;
    g[n] = -(2.0 * r * den - num) / (den * den);
  });
  return g;
}

/// Sum of max(0, |pred_i - ref_i| - tol)^2 over index-matched points.
template <class T>
T centerline_loss(const std::vector<Vec3<T>>& pred, const std::vector<Vec3d>& ref, double tol = kCenterlineTolerance) {
  if (pred.size() != ref.size()) {
    throw ArgumentError("centerline loss: " + std::to_string(pred.size()) + " predicted vs " +
                        std::to_string(ref.size()) + " reference points");
  }
  using std::sqrt;
  T total(0.0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const Vec3<T> d = pred[i] - promote<T>(ref[i]);
    const T d2 = squared_norm(d);
    if (value(d2) <= tol * tol) continue;
    const T excess = sqrt(d2) - tol;
    total += excess * excess;
  }
  return total;
}

template <class T>
T endpoint_loss(const Vec3<T>& pred_first, const Vec3<T>& pred_last, const Vec3d& ref_first, const Vec3d& ref_last) {
  return squared_norm(pred_first - promote<T>(ref_first)) + squared_norm(pred_last - promote<T>(ref_last));
}

/// Sum of squared second differences of the sampled centerline.
template <class T>
T curvature_reg(const std::vector<Vec3<T>>& samples) {
  T total(0.0);
  for (const auto& d : second_differences(samples)) total += squared_norm(d);
  return total;
}

template <class T>
struct LossComponents {
  T cl = T(0.0);
  T e = T(0.0);
  T vox = T(0.0);
  T reg = T(0.0);
};

template <class T>
T total_loss(const LossComponents<T>& c, const LossWeights& w) {
  return c.cl * w.lambda_cl + c.e * w.lambda_e + c.vox * w.lambda_vox + c.reg * w.lambda_reg;
}

/// Dice loss of the soft voxelization of `mesh` against `ref`. For ad::Var
/// vertices the result is a tape node whose partials are the analytic vertex
/// gradients from the voxelizer.
template <class T>
T voxel_dice_loss(const TriangleMesh<T>& mesh, const BinaryGrid& ref, const VoxelizeOptions& opts) {
  const Mesh m = mesh_values(mesh);
  SoftVoxelizer vox(m, ref.shape(), opts);
  const double loss = dice_loss(vox.result().grid, ref, opts.mask);
  if (!std::isfinite(loss)) throw NumericError("voxelization loss", "dice loss is not finite");
  if constexpr (std::is_same_v<T, double>) {
    return loss;
  } else {
    const auto vgrad = vox.backward(dice_loss_gradient(vox.result().grid, ref, opts.mask));
    std::vector<ad::Var> inputs;
    std::vector<double> partials;
    inputs.reserve(3 * mesh.vertices.size());
    partials.reserve(3 * mesh.vertices.size());
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
      for (int d = 0; d < 3; ++d) {
        if (!std::isfinite(vgrad[i][d])) throw NumericError("voxelization backward", "non-finite vertex gradient");
        inputs.push_back(mesh.vertices[i][d]);
        partials.push_back(vgrad[i][d]);
      }
    }
    return ad::custom(loss, inputs, partials);
  }
}

}  // namespace vessel

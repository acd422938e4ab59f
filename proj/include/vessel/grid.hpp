#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "vessel/error.hpp"
#include "vessel/vec.hpp"

namespace vessel {

enum class Axis { X = 0, Y = 1, Z = 2 };

inline int index_of(Axis a) { return static_cast<int>(a); }

/// Cycles X -> Y -> Z -> X. The fitting loop advances once per forward pass.
constexpr Axis next_axis(Axis a) {
  switch (a) {
    case Axis::X:
      return Axis::Y;
    case Axis::Y:
      return Axis::Z;
    case Axis::Z:
      return Axis::X;
  }
  return Axis::X;
}

inline std::string to_string(Axis a) {
  switch (a) {
    case Axis::X:
      return "X";
    case Axis::Y:
      return "Y";
    case Axis::Z:
      return "Z";
  }
  return "?";
}

inline Axis parse_axis(const std::string& s) {
  if (s == "X" || s == "x") return Axis::X;
  if (s == "Y" || s == "y") return Axis::Y;
  if (s == "Z" || s == "z") return Axis::Z;
  throw ArgumentError("unknown axis '" + s + "' (expected X, Y or Z)");
}

struct GridShape {
  int nx = 0, ny = 0, nz = 0;

  int operator[](int i) const { return i == 0 ? nx : (i == 1 ? ny : nz); }
  std::size_t count() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(nz);
  }
  bool valid() const { return nx > 0 && ny > 0 && nz > 0; }
  friend bool operator==(const GridShape&, const GridShape&) = default;
};

/// Voxel (i,j,k) has its center at (i+0.5, j+0.5, k+0.5) in voxel units.
inline Vec3d voxel_center(int i, int j, int k) { return {i + 0.5, j + 0.5, k + 0.5}; }

/// Dense 3D grid, x fastest.
template <class T>
class VoxelGrid {
 public:
  VoxelGrid() = default;
  explicit VoxelGrid(GridShape shape, T fill = T{}) : shape_(shape), data_(shape.count(), fill) {
    if (!shape.valid()) throw ArgumentError("grid shape must be positive");
  }
  VoxelGrid(GridShape shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
    if (!shape.valid()) throw ArgumentError("grid shape must be positive");
    if (data_.size() != shape.count()) throw ArgumentError("grid data size does not match shape");
  }

  const GridShape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }

  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(shape_.nx) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(shape_.ny) * static_cast<std::size_t>(k));
  }
  bool contains(int i, int j, int k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < shape_.nx && j < shape_.ny && k < shape_.nz;
  }

  T& operator()(int i, int j, int k) { return data_[index(i, j, k)]; }
  const T& operator()(int i, int j, int k) const { return data_[index(i, j, k)]; }
  T& operator[](std::size_t n) { return data_[n]; }
  const T& operator[](std::size_t n) const { return data_[n]; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  friend bool operator==(const VoxelGrid&, const VoxelGrid&) = default;

 private:
  GridShape shape_;
  std::vector<T> data_;
};

using BinaryGrid = VoxelGrid<std::uint8_t>;

inline std::size_t count_foreground(const BinaryGrid& g) {
  std::size_t n = 0;
  for (auto v : g.data()) n += (v != 0);
  return n;
}

/// Axis-aligned inclusive voxel index range.
struct VoxelBox {
  std::array<int, 3> lo{0, 0, 0};
  std::array<int, 3> hi{-1, -1, -1};

  bool empty() const { return hi[0] < lo[0] || hi[1] < lo[1] || hi[2] < lo[2]; }
  bool contains(int i, int j, int k) const {
    return i >= lo[0] && i <= hi[0] && j >= lo[1] && j <= hi[1] && k >= lo[2] && k <= hi[2];
  }
};

/// Set of labeled slices along one axis, used for sparse supervision.
struct SliceMask {
  Axis axis = Axis::Z;
  double keep_fraction = 1.0;
  std::vector<int> slices;

  std::vector<bool> lookup(int extent) const {
    std::vector<bool> keep(static_cast<std::size_t>(extent), false);
    for (int s : slices) {
      if (s >= 0 && s < extent) keep[static_cast<std::size_t>(s)] = true;
    }
    return keep;
  }
};

}  // namespace vessel

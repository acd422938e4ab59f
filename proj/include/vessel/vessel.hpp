#pragma once

#include "vessel/ad.hpp"
#include "vessel/bspline.hpp"
#include "vessel/diff.hpp"
#include "vessel/error.hpp"
#include "vessel/fit.hpp"
#include "vessel/frames.hpp"
#include "vessel/gradcheck.hpp"
#include "vessel/grid.hpp"
#include "vessel/io.hpp"
#include "vessel/losses.hpp"
#include "vessel/mesh.hpp"
#include "vessel/metrics.hpp"
#include "vessel/params.hpp"
#include "vessel/sdf.hpp"
#include "vessel/synth.hpp"
#include "vessel/vec.hpp"
#include "vessel/voxelizer.hpp"

#pragma once

#include "yamabe/geometry.hpp"

#include <array>

namespace yamabe {

// neighbour of a cell along one grid axis; -1 when it falls outside the box.
// Reflecting axes mirror index -1 onto 0.
long neighbor(const GridSpec& g, const int* ijk, int axis, int offset);
long neighbor2(const GridSpec& g, const int* ijk, int a, int oa, int b, int ob);

// Conservative five/seven point Laplacian in the reduced coordinates.
// Delta u(c) ~ sum_k coef[k] u(nb[k]) - diag u(c); nb[k] = -1 means outside the box.
// Multiplying by GridSpec::weight gives a symmetric operator.
struct LaplaceStencil {
  std::array<long, 10> nb{};
  std::array<double, 10> coef{};
  int count = 0;
  double diag = 0;
};

LaplaceStencil laplace_stencil(const GridSpec& g, long idx);

// central-difference gradient (grid coordinates) of a field, reflecting at the axis,
// zero outside the box
Eigen::VectorXd gradient_at(const GridSpec& g, const Eigen::VectorXd& v, long idx);

// apply the Laplacian with zero values outside the box
Eigen::VectorXd apply_laplacian(const GridSpec& g, const Eigen::VectorXd& v);

}  // namespace yamabe

#pragma once

#include "uent/common.hpp"
#include "uent/special.hpp"

namespace uent {

// Auto switches to the kd-tree above 256 points. Both backends share one
// distance kernel and order neighbors by (distance, index), so results agree
// bit-for-bit and ties resolve to the lexicographically-smallest index set.
enum class KnnBackend { Auto, BruteForce, KdTree };

struct KnnResult {
  Matrix dist;                         // N x k, ascending per row
  std::vector<std::vector<long>> idx;  // matching neighbor indices
};

KnnResult knn_search(const SampleSet& s, int k, Norm p,
                     KnnBackend backend = KnnBackend::Auto);

// eps_i = twice the p-norm distance to the k-th nearest other sample.
Vector knn_radii(const SampleSet& s, int k, Norm p,
                 KnnBackend backend = KnnBackend::Auto);

// eps_{i,j} = 2 max over the k sup-norm neighbors of |x_j - x'_j|.
// Satisfies max_j eps_{i,j} = eps_i under the sup norm.
Matrix marginal_radii(const SampleSet& s, int k,
                      KnnBackend backend = KnnBackend::Auto);

// out[i][j] = min(x_j + w_ij, 1) - max(x_j - w_ij, 0) for samples in the unit
// cube. Coordinates within `tol` of the cube are clamped; beyond it the call
// throws OutOfDomain.
Matrix truncated_lengths(const SampleSet& s, const Matrix& half_widths,
                         double tol = 1e-12);

struct CellGeometry {
  Vector eps;           // N
  Matrix eps_marginal;  // N x d
  Matrix xi;            // N x d, truncation of the eps_i cube
  Matrix zeta;          // N x d, truncation of the per-dimension rectangle
  int k = 1;
};

// Single-pass geometry for the truncated estimators (sup norm throughout).
CellGeometry cell_geometry(const SampleSet& s, int k,
                           KnnBackend backend = KnnBackend::Auto);

}  // namespace uent

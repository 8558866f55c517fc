#pragma once

#include <ostream>
#include <vector>

#include "fsiplate/types.hpp"

namespace fsiplate {

// Compressed row storage throughout; Eigen's RowMajor sparse type already
// keeps (outer offsets, sorted inner indices, values) exactly as needed.
using SparseMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

inline SparseMat from_triplets(Index rows, Index cols,
                               const std::vector<Triplet>& trips) {
  SparseMat a(rows, cols);
  a.setFromTriplets(trips.begin(), trips.end());
  a.makeCompressed();
  return a;
}

// Debug export: one "row col value" line per stored entry.
inline void write_coordinate_format(std::ostream& os, const SparseMat& a) {
  os.precision(17);
  for (Index r = 0; r < a.outerSize(); ++r)
    for (SparseMat::InnerIterator it(a, r); it; ++it)
      os << it.row() << " " << it.col() << " " << it.value() << "\n";
}

// Splitting of a space's global DOFs into free unknowns and Dirichlet-fixed
// entries, with position maps in both directions. Used for the symmetric
// row/column elimination: reduced matrices act on free DOFs only and lift
// blocks carry the fixed values into right-hand sides.
struct DofPartition {
  std::vector<Index> free;      // ascending global indices
  std::vector<Index> fixedidx;  // ascending global indices
  std::vector<Index> to_free;   // global -> free position or -1
  std::vector<Index> to_fixed;  // global -> fixed position or -1

  static DofPartition from_mask(const std::vector<char>& fixed_mask) {
    DofPartition p;
    const Index n = static_cast<Index>(fixed_mask.size());
    p.to_free.assign(n, -1);
    p.to_fixed.assign(n, -1);
    for (Index g = 0; g < n; ++g) {
      if (fixed_mask[g]) {
        p.to_fixed[g] = static_cast<Index>(p.fixedidx.size());
        p.fixedidx.push_back(g);
      } else {
        p.to_free[g] = static_cast<Index>(p.free.size());
        p.free.push_back(g);
      }
    }
    return p;
  }

  Index n_total() const { return static_cast<Index>(to_free.size()); }
  Index n_free() const { return static_cast<Index>(free.size()); }
  Index n_fixed() const { return static_cast<Index>(fixedidx.size()); }

  VecX gather_free(const VecX& full) const {
    VecX v(n_free());
    for (Index i = 0; i < n_free(); ++i) v[i] = full[free[i]];
    return v;
  }
  // Recombine free unknowns and fixed values into a full coefficient vector.
  VecX expand(const VecX& free_values, const VecX& fixed_values) const {
    VecX full(n_total());
    for (Index i = 0; i < n_free(); ++i) full[free[i]] = free_values[i];
    for (Index i = 0; i < n_fixed(); ++i) full[fixedidx[i]] = fixed_values[i];
    return full;
  }
};

// Extract A[row_map, col_map] where the maps send kept indices to their new
// position and dropped indices to -1.
inline SparseMat submatrix(const SparseMat& a, const std::vector<Index>& row_map,
                           Index new_rows, const std::vector<Index>& col_map,
                           Index new_cols) {
  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(a.nonZeros()));
  for (Index r = 0; r < a.outerSize(); ++r) {
    const Index rr = row_map[r];
    if (rr < 0) continue;
    for (SparseMat::InnerIterator it(a, r); it; ++it) {
      const Index cc = col_map[it.col()];
      if (cc >= 0) trips.emplace_back(rr, cc, it.value());
    }
  }
  return from_triplets(new_rows, new_cols, trips);
}

inline std::vector<Index> identity_map(Index n) {
  std::vector<Index> m(n);
  for (Index i = 0; i < n; ++i) m[i] = i;
  return m;
}

// A[free, free] of a square operator.
inline SparseMat reduce(const SparseMat& a, const DofPartition& p) {
  return submatrix(a, p.to_free, p.n_free(), p.to_free, p.n_free());
}
// A[free, fixed]: multiplies Dirichlet values into the free right-hand side.
inline SparseMat lift(const SparseMat& a, const DofPartition& p) {
  return submatrix(a, p.to_free, p.n_free(), p.to_fixed, p.n_fixed());
}
// B[:, free] and B[:, fixed] for rectangular couplings whose rows are kept.
inline SparseMat reduce_cols(const SparseMat& b, const DofPartition& p) {
  return submatrix(b, identity_map(static_cast<Index>(b.rows())),
                   static_cast<Index>(b.rows()), p.to_free, p.n_free());
}
inline SparseMat lift_cols(const SparseMat& b, const DofPartition& p) {
  return submatrix(b, identity_map(static_cast<Index>(b.rows())),
                   static_cast<Index>(b.rows()), p.to_fixed, p.n_fixed());
}

// Triplet accumulator for bordered block systems: sparse blocks, vector
// borders and scalar entries are placed at running offsets, then compressed
// once.
struct BlockBuilder {
  std::vector<Triplet> trips;

  void add_block(Index r0, Index c0, const SparseMat& a, double scale = 1.0) {
    for (Index r = 0; r < a.outerSize(); ++r)
      for (SparseMat::InnerIterator it(a, r); it; ++it)
        trips.emplace_back(r0 + static_cast<Index>(it.row()),
                           c0 + static_cast<Index>(it.col()),
                           scale * it.value());
  }
  void add_column(Index r0, Index c, const VecX& v, double scale = 1.0) {
    for (Index i = 0; i < v.size(); ++i)
      if (v[i] != 0.0) trips.emplace_back(r0 + i, c, scale * v[i]);
  }
  void add_row(Index r, Index c0, const VecX& v, double scale = 1.0) {
    for (Index i = 0; i < v.size(); ++i)
      if (v[i] != 0.0) trips.emplace_back(r, c0 + i, scale * v[i]);
  }
  void add_entry(Index r, Index c, double v) { trips.emplace_back(r, c, v); }

  SparseMat build(Index rows, Index cols) const {
    return from_triplets(rows, cols, trips);
  }
};

}  // namespace fsiplate

// Shared test data: the steelyard weighing scheme.
#pragma once

#include <errprop/linalg.hpp>

namespace fixture {

/// Three weights A, B, C weighed singly and in pairs A+B, B+C, A+C.
inline errprop::Matrix steelyard_design() {
  return errprop::from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 0}, {0, 1, 1}, {1, 0, 1}});
}

/// [AᵀA]⁻¹Aᵀ for the scheme above, in tenths.
inline errprop::Matrix steelyard_solution_map() {
  return errprop::from_rows({{4, -1, -1, 3, -2, 3}, {-1, 4, -1, 3, 3, -2}, {-1, -1, 4, -2, 3, 3}}) /
         10.0;
}

/// Basis of the left null space of the steelyard design (AᵀN = 0), exact in integers.
inline errprop::Matrix steelyard_null_space() {
  return errprop::from_rows({{-1, 0, -1},
                             {-1, -1, 0},
                             {0, -1, -1},
                             {1, 0, 0},
                             {0, 1, 0},
                             {0, 0, 1}});
}

}  // namespace fixture

#pragma once

namespace gkin::tol {

// Exact-algebra checks on O(10) flops of double arithmetic.
inline constexpr double kExactAlgebra = 1e-12;
// Direct-then-inverse collision round trips.
inline constexpr double kRoundTrip = 1e-10;
// Unit angular mass of the collision kernel.
inline constexpr double kKernelNorm = 1e-8;
// Relative slack allowed in the inequality suites.
inline constexpr double kInequality = 1e-9;
// Energy budget closure over a run interval.
inline constexpr double kEnergyBudget = 1e-8;
// |sigma| may deviate from one by at most this much.
inline constexpr double kUnitVector = 1e-12;

}  // namespace gkin::tol

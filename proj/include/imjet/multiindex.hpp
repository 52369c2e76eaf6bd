#pragma once

#include "imjet/common.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace imjet {

double factorial(int k);
std::size_t binomial(int n, int k);

/// Number of multisets of size k drawn from d symbols, C(d+k-1, k).
std::size_t num_multisets(int d, int k);

/// All nondecreasing index tuples of length k over {0..d-1}, in graded-lex order.
std::vector<std::vector<int>> multisets(int d, int k);

/// Position of a nondecreasing tuple in the order produced by multisets(d, k).
std::size_t multiset_rank(std::span<const int> tuple, int d);

/// Exponent vector (counts per symbol) of a nondecreasing tuple.
std::vector<int> exponents_of(std::span<const int> tuple, int d);

/// Number of distinct orderings of the tuple: k! / prod(alpha_i!).
double permutation_count(std::span<const int> tuple, int d);

/// prod(alpha_i!) for the tuple's exponent vector.
double exponent_factorial(std::span<const int> tuple, int d);

/// Simplex lattice {beta / k : |beta| = k}; unisolvent for homogeneous polynomials of degree <= k.
std::vector<Vec> simplex_lattice(int d, int k);

} // namespace imjet

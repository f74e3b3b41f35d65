#pragma once

#include <cstddef>
#include <string_view>

#include "gfs/numerics.hpp"
#include "gfs/prototypes.hpp"

namespace gfs {

enum class EdgeMode { Learnable, Fixed };
enum class Eq10Mode {
  // p'_i = sum_{j != i} S_ij w_ij p_j
  Neighbor,
  // p'_i = (sum_{j != i} S_ij w_ij) p_i, the aggregation printed with p_i in the sum
  Literal,
};

std::string_view to_string(EdgeMode mode);
std::string_view to_string(Eq10Mode mode);
EdgeMode parse_edge_mode(std::string_view text);
Eq10Mode parse_eq10_mode(std::string_view text);

/// N x N learnable edge weights of the between-class subgraph. The diagonal is
/// stored but never read. A frozen matrix never receives gradient steps.
struct EdgeWeightMatrix {
  Matrix weights;
  bool frozen = false;

  std::size_t size() const noexcept { return weights.rows(); }
  bool operator==(const EdgeWeightMatrix&) const = default;
};

// All-ones weights that train.
EdgeWeightMatrix make_learnable_edges(std::size_t num_classes);
// All-ones weights, frozen.
EdgeWeightMatrix make_fixed_edges(std::size_t num_classes);

struct GraphSnapshot {
  Matrix between_sim;   // E_B, zero diagonal
  Matrix between_norm;  // row softmax over j != i, zero diagonal
  Vector within_sim;    // E_W
  Vector within_norm;   // softmax of E_W over classes
};

/// Pairwise cosine similarity of current prototypes, zero diagonal.
/// ZeroNormVector names the offending class.
Matrix between_class_similarities(const Matrix& prototypes);
Matrix between_class_similarities(const PrototypeBank& bank);

/// Per-row softmax over off-diagonal entries. EmptyInput when N < 2.
Matrix normalize_between(const Matrix& sim);

Matrix message_passing(const Matrix& prototypes, const Matrix& norm,
                       const EdgeWeightMatrix& weights, Eq10Mode mode = Eq10Mode::Neighbor);
Matrix message_passing(const PrototypeBank& bank, const Matrix& norm,
                       const EdgeWeightMatrix& weights, Eq10Mode mode = Eq10Mode::Neighbor);

/// cos(previous[i], current[i]) per class.
Vector within_class_similarities(const PrototypeBank& bank);
Vector normalize_within(std::span<const double> within_sim);

/// p''_i = N * S^W_i * current[i]; identity when S^W is uniform.
Matrix self_similarity_prototypes(const Matrix& prototypes, std::span<const double> within_norm);

GraphSnapshot build_graph(const PrototypeBank& bank);

}  // namespace gfs

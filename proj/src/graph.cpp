#include "gfs/graph.hpp"

#include <string>

#include "forward.hpp"
#include "gfs/error.hpp"

namespace gfs {

std::string_view to_string(EdgeMode mode) {
  return mode == EdgeMode::Learnable ? "learnable" : "fixed";
}

std::string_view to_string(Eq10Mode mode) {
  return mode == Eq10Mode::Neighbor ? "default" : "literal";
}

EdgeMode parse_edge_mode(std::string_view text) {
  if (text == "learnable") return EdgeMode::Learnable;
  if (text == "fixed") return EdgeMode::Fixed;
  throw Error(ErrorCode::InvalidConfig, "edge mode '" + std::string(text) + "'");
}

Eq10Mode parse_eq10_mode(std::string_view text) {
  if (text == "default") return Eq10Mode::Neighbor;
  if (text == "literal") return Eq10Mode::Literal;
  throw Error(ErrorCode::InvalidConfig, "eq10 mode '" + std::string(text) + "'");
}

EdgeWeightMatrix make_learnable_edges(std::size_t num_classes) {
  return {Matrix(num_classes, num_classes, 1.0), false};
}

EdgeWeightMatrix make_fixed_edges(std::size_t num_classes) {
  return {Matrix(num_classes, num_classes, 1.0), true};
}

Matrix between_class_similarities(const Matrix& prototypes) {
  return forward::between_similarities(prototypes);
}

Matrix between_class_similarities(const PrototypeBank& bank) {
  return between_class_similarities(bank.current());
}

Matrix normalize_between(const Matrix& sim) { return forward::normalize_between(sim); }

Matrix message_passing(const Matrix& prototypes, const Matrix& norm,
                       const EdgeWeightMatrix& weights, Eq10Mode mode) {
  return forward::message_passing(prototypes, norm, weights.weights, mode);
}

Matrix message_passing(const PrototypeBank& bank, const Matrix& norm,
                       const EdgeWeightMatrix& weights, Eq10Mode mode) {
  return message_passing(bank.current(), norm, weights, mode);
}

Vector within_class_similarities(const PrototypeBank& bank) {
  return forward::within_similarities(bank.previous(), bank.current());
}

Vector normalize_within(std::span<const double> within_sim) { return softmax(within_sim); }

Matrix self_similarity_prototypes(const Matrix& prototypes, std::span<const double> within_norm) {
  return forward::self_similarity_prototypes(prototypes, within_norm);
}

GraphSnapshot build_graph(const PrototypeBank& bank) {
  GraphSnapshot g;
  g.between_sim = between_class_similarities(bank);
  g.between_norm = normalize_between(g.between_sim);
  g.within_sim = within_class_similarities(bank);
  g.within_norm = normalize_within(g.within_sim);
  return g;
}

}  // namespace gfs

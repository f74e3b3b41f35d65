#include "gfs/grad.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "forward.hpp"
#include "gfs/error.hpp"

namespace gfs {

namespace {

struct TermWeights {
  double segmentation = 0.0;
  double contrastive = 0.0;
  double cross_class = 0.0;
  double self_similarity = 0.0;
};

TermWeights term_weights(const TrainConfig& cfg, LossTerm term) {
  switch (term) {
    case LossTerm::Segmentation: return {1.0, 0.0, 0.0, 0.0};
    case LossTerm::Contrastive: return {0.0, 1.0, 0.0, 0.0};
    case LossTerm::CrossClass: return {0.0, 0.0, 1.0, 0.0};
    case LossTerm::SelfSimilarity: return {0.0, 0.0, 0.0, 1.0};
    case LossTerm::Total: break;
  }
  return {1.0, cfg.lambda1, cfg.lambda2, cfg.lambda2};
}

bool edges_trainable(const EdgeWeightMatrix& weights, const TrainConfig& cfg) {
  return !weights.frozen && cfg.edge_mode == EdgeMode::Learnable;
}

// d cos(a, b) / d a = (b/|b| - cos * a/|a|) / |a|, accumulated with a scale.
void accumulate_cosine_grad(std::span<const double> a, std::span<const double> b, double cos,
                            double scale, std::span<double> out) {
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  for (std::size_t k = 0; k < a.size(); ++k) {
    out[k] += scale * (b[k] / nb - cos * a[k] / na) / na;
  }
}

// Backward pass of batch_cross_entropy with respect to the classifier
// prototypes. Adds scale * dL/dQ into grad and returns L.
double cross_entropy_backward(std::span<const Sample> samples, const Matrix& protos,
                              double alpha, double scale, Matrix& grad) {
  const std::size_t n = protos.rows();
  const std::size_t dim = protos.cols();
  std::size_t labeled = 0;
  for (const Sample& s : samples) {
    for (std::size_t i = 0; i < s.labels.pixels(); ++i) {
      labeled += s.labels.label(i) == kIgnoreLabel ? 0 : 1;
    }
  }
  if (labeled == 0) throw Error(ErrorCode::NoLabeledPixels, "batch has no labeled pixels");
  const double inv_count = 1.0 / static_cast<double>(labeled);

  Vector proto_norm(n);
  for (std::size_t c = 0; c < n; ++c) {
    proto_norm[c] = l2_norm(protos.row(c));
    if (proto_norm[c] < kNormFloor) {
      throw Error(ErrorCode::ZeroNormVector, "classifier prototype " + std::to_string(c));
    }
  }

  // dL/dq_c = alpha / |q_c| * (sum_px g_c f^ - (sum_px g_c cos_c) q^_c)
  Matrix feature_acc(n, dim, 0.0);
  Vector cos_acc(n, 0.0);
  Vector cos(n), logits(n);
  double loss = 0.0;
  for (const Sample& s : samples) {
    require_matching_shape(s.features, s.labels);
    for (std::size_t i = 0; i < s.features.pixels(); ++i) {
      const std::int32_t y = s.labels.label(i);
      if (y == kIgnoreLabel) continue;
      const auto f = s.features.pixel(i);
      const double fn = l2_norm(f);
      if (fn < kNormFloor) {
        throw Error(ErrorCode::ZeroNormVector, "feature at pixel " + std::to_string(i));
      }
      for (std::size_t c = 0; c < n; ++c) {
        cos[c] = dot(f, protos.row(c)) / (fn * proto_norm[c]);
        logits[c] = alpha * cos[c];
      }
      const Vector p = softmax(logits);
      loss += log_sum_exp(logits) - logits[static_cast<std::size_t>(y)];
      for (std::size_t c = 0; c < n; ++c) {
        const double g = (p[c] - (static_cast<std::size_t>(y) == c ? 1.0 : 0.0)) * inv_count;
        axpy(g / fn, f, feature_acc.row(c));
        cos_acc[c] += g * cos[c];
      }
    }
  }
  for (std::size_t c = 0; c < n; ++c) {
    const auto q = protos.row(c);
    auto out = grad.row(c);
    const double factor = scale * alpha / proto_norm[c];
    for (std::size_t k = 0; k < dim; ++k) {
      out[k] += factor * (feature_acc(c, k) - cos_acc[c] * q[k] / proto_norm[c]);
    }
  }
  return loss * inv_count;
}

double contrastive_backward(const PrototypeBank& bank, double scale, bool flip,
                            Matrix& grad) {
  const Matrix& p = bank.current();
  const std::size_t n = p.rows();
  const std::size_t dim = p.cols();
  const double d_w = within_class_distance(bank);
  const double d_b = between_class_distance(bank);
  if (d_b < kDenominatorFloor) {
    throw Error(ErrorCode::DegenerateDenominator, "between-class distance collapsed");
  }
  Vector column_sum(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) axpy(1.0, p.row(i), column_sum);

  const double sign = flip ? -1.0 : 1.0;
  const double inv_db = 1.0 / d_b;
  const double ratio_db2 = d_w / (d_b * d_b);
  for (std::size_t i = 0; i < n; ++i) {
    const auto pi = p.row(i);
    const auto prev = bank.previous_prototype(i);
    auto out = grad.row(i);
    for (std::size_t k = 0; k < dim; ++k) {
      const double dw_grad = bank.is_base(i) ? 2.0 * (pi[k] - prev[k]) : 0.0;
      const double db_grad = 4.0 * (static_cast<double>(n) * pi[k] - column_sum[k]);
      out[k] += sign * scale * (dw_grad * inv_db - ratio_db2 * db_grad);
    }
  }
  return d_w / d_b;
}

// Softmax backward restricted to the off-diagonal entries of each row.
Matrix row_softmax_backward(const Matrix& s, const Matrix& ds) {
  const std::size_t n = s.rows();
  Matrix de(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double inner = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) inner += s(i, j) * ds(i, j);
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) de(i, j) = s(i, j) * (ds(i, j) - inner);
    }
  }
  return de;
}

double cross_class_backward(std::span<const Sample> samples, const PrototypeBank& bank,
                            const EdgeWeightMatrix& weights, const TrainConfig& cfg,
                            double scale, Matrix& grad_protos, Matrix* grad_weights) {
  const Matrix& p = bank.current();
  const std::size_t n = p.rows();
  const std::size_t dim = p.cols();
  const Matrix& w = weights.weights;
  const Matrix sim = between_class_similarities(p);
  const Matrix norm = normalize_between(sim);
  const Matrix enhanced = message_passing(p, norm, weights, cfg.eq10_mode);

  Matrix g_enh(n, dim, 0.0);
  const double loss = cross_entropy_backward(samples, enhanced, cfg.alpha, 1.0, g_enh);

  Matrix d_norm(n, n, 0.0);
  if (cfg.eq10_mode == Eq10Mode::Neighbor) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double gp = dot(g_enh.row(i), p.row(j));
        axpy(scale * norm(i, j) * w(i, j), g_enh.row(i), grad_protos.row(j));
        if (grad_weights) (*grad_weights)(i, j) += scale * norm(i, j) * gp;
        d_norm(i, j) = w(i, j) * gp;
      }
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      double coeff = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) coeff += norm(i, j) * w(i, j);
      }
      axpy(scale * coeff, g_enh.row(i), grad_protos.row(i));
      const double d_coeff = dot(g_enh.row(i), p.row(i));
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        if (grad_weights) (*grad_weights)(i, j) += scale * norm(i, j) * d_coeff;
        d_norm(i, j) = w(i, j) * d_coeff;
      }
    }
  }

  const Matrix d_sim = row_softmax_backward(norm, d_norm);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || d_sim(i, j) == 0.0) continue;
      accumulate_cosine_grad(p.row(i), p.row(j), sim(i, j), scale * d_sim(i, j),
                             grad_protos.row(i));
      accumulate_cosine_grad(p.row(j), p.row(i), sim(i, j), scale * d_sim(i, j),
                             grad_protos.row(j));
    }
  }
  return loss;
}

double self_similarity_backward(std::span<const Sample> samples, const PrototypeBank& bank,
                                double alpha, double scale, Matrix& grad) {
  const Matrix& p = bank.current();
  const std::size_t n = p.rows();
  const double nd = static_cast<double>(n);
  const Vector e_w = within_class_similarities(bank);
  const Vector s_w = normalize_within(e_w);
  const Matrix scaled = self_similarity_prototypes(p, s_w);

  Matrix g_scaled(n, p.cols(), 0.0);
  const double loss = cross_entropy_backward(samples, scaled, alpha, 1.0, g_scaled);

  Vector d_s(n);
  double inner = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    axpy(scale * nd * s_w[i], g_scaled.row(i), grad.row(i));
    d_s[i] = nd * dot(g_scaled.row(i), p.row(i));
    inner += s_w[i] * d_s[i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double d_e = s_w[i] * (d_s[i] - inner);
    if (d_e == 0.0) continue;
    // E_W(i) = cos(previous_i, current_i); only current_i is a parameter.
    accumulate_cosine_grad(p.row(i), bank.previous_prototype(i), e_w[i], scale * d_e,
                           grad.row(i));
  }
  return loss;
}

}  // namespace

void TrainConfig::validate() const {
  if (steps < 0) throw Error(ErrorCode::InvalidConfig, "steps must be >= 0");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorCode::InvalidConfig, "learning rate must be finite and >= 0");
  }
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorCode::InvalidConfig, "alpha must be positive");
  }
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0) || !std::isfinite(lambda1) ||
      !std::isfinite(lambda2)) {
    throw Error(ErrorCode::InvalidConfig, "lambdas must be finite and >= 0");
  }
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw Error(ErrorCode::GammaOutOfRange, "gamma " + std::to_string(gamma));
  }
}

std::string_view to_string(LossTerm term) {
  switch (term) {
    case LossTerm::Segmentation: return "L_s";
    case LossTerm::Contrastive: return "L_C";
    case LossTerm::CrossClass: return "L_B";
    case LossTerm::SelfSimilarity: return "L_W";
    case LossTerm::Total: return "total";
  }
  return "?";
}

GradientBundle analytic_gradient(std::span<const Sample> samples, const PrototypeBank& bank,
                                 const EdgeWeightMatrix& weights, const TrainConfig& cfg,
                                 LossTerm term, GradientFault fault) {
  const std::size_t n = bank.num_classes();
  if (weights.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "edge weights do not match the bank");
  }
  const TermWeights tw = term_weights(cfg, term);
  GradientBundle out{Matrix(n, bank.dim(), 0.0), Matrix(n, n, 0.0), 0.0};
  Matrix* d_weights = edges_trainable(weights, cfg) ? &out.d_weights : nullptr;

  if (tw.contrastive != 0.0) {
    out.loss_at_point += tw.contrastive *
        contrastive_backward(bank, tw.contrastive,
                             fault == GradientFault::FlipContrastiveSign, out.d_protos);
  }
  if (tw.segmentation != 0.0) {
    out.loss_at_point += tw.segmentation *
        cross_entropy_backward(samples, bank.current(), cfg.alpha, tw.segmentation,
                               out.d_protos);
  }
  if (tw.cross_class != 0.0) {
    out.loss_at_point += tw.cross_class *
        cross_class_backward(samples, bank, weights, cfg, tw.cross_class, out.d_protos,
                             d_weights);
  }
  if (tw.self_similarity != 0.0) {
    out.loss_at_point += tw.self_similarity *
        self_similarity_backward(samples, bank, cfg.alpha, tw.self_similarity, out.d_protos);
  }
  return out;
}

double evaluate_objective(std::span<const Sample> samples, const PrototypeBank& bank,
                          const EdgeWeightMatrix& weights, const TrainConfig& cfg,
                          LossTerm term) {
  switch (term) {
    case LossTerm::Segmentation: return segmentation_loss(samples, bank, cfg.alpha);
    case LossTerm::Contrastive: return class_contrastive_loss(bank);
    case LossTerm::CrossClass:
      return cross_class_similarity_loss(samples, bank, weights, cfg.alpha, cfg.eq10_mode);
    case LossTerm::SelfSimilarity: return self_similarity_loss(samples, bank, cfg.alpha);
    case LossTerm::Total: break;
  }
  return total_loss(samples, bank, weights, cfg.loss_config()).total;
}

namespace {

using Wide = forward::Quad;
using WideMatrix = BasicMatrix<Wide>;

Wide wide_objective(std::span<const Sample> samples, const forward::State<Wide>& st,
                    const TrainConfig& cfg, LossTerm term) {
  const Wide alpha = cfg.alpha;
  switch (term) {
    case LossTerm::Segmentation: return forward::segmentation(samples, st, alpha);
    case LossTerm::Contrastive:
      return forward::contrastive(st.current, st.previous, st.base_count);
    case LossTerm::CrossClass: return forward::cross_class(samples, st, alpha, cfg.eq10_mode);
    case LossTerm::SelfSimilarity: return forward::self_similarity(samples, st, alpha);
    case LossTerm::Total: break;
  }
  Wide total = forward::segmentation(samples, st, alpha);
  if (cfg.lambda1 != 0.0) {
    total += Wide(cfg.lambda1) * forward::contrastive(st.current, st.previous, st.base_count);
  }
  if (cfg.lambda2 != 0.0) {
    total += Wide(cfg.lambda2) * (forward::cross_class(samples, st, alpha, cfg.eq10_mode) +
                                  forward::self_similarity(samples, st, alpha));
  }
  return total;
}

}  // namespace

GradientBundle finite_difference_gradient(std::span<const Sample> samples,
                                          const PrototypeBank& bank,
                                          const EdgeWeightMatrix& weights,
                                          const TrainConfig& cfg, double h, LossTerm term) {
  if (!(h > 0.0)) throw Error(ErrorCode::InvalidConfig, "finite-difference step must be > 0");
  const std::size_t n = bank.num_classes();
  GradientBundle out{Matrix(n, bank.dim(), 0.0), Matrix(n, n, 0.0),
                     evaluate_objective(samples, bank, weights, cfg, term)};

  // Differences are taken in extended precision so cancellation noise stays
  // far below the comparison floor even where the true gradient is zero.
  WideMatrix cur = WideMatrix::cast(bank.current());
  const WideMatrix prev = WideMatrix::cast(bank.previous());
  WideMatrix w = WideMatrix::cast(weights.weights);
  const forward::State<Wide> st{cur, prev, bank.base_count(), w};
  const Wide step = h;

  auto central = [&](Wide& x) {
    const Wide x0 = x;
    x = x0 + step;
    const Wide up = wide_objective(samples, st, cfg, term);
    x = x0 - step;
    const Wide down = wide_objective(samples, st, cfg, term);
    x = x0;
    return static_cast<double>((up - down) / (Wide(2) * step));
  };

  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t k = 0; k < bank.dim(); ++k) out.d_protos(c, k) = central(cur(c, k));
  }
  if (edges_trainable(weights, cfg)) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j) out.d_weights(i, j) = central(w(i, j));
      }
    }
  }
  return out;
}

GradientDiscrepancy compare_gradients(const GradientBundle& analytic,
                                      const GradientBundle& numeric) {
  GradientDiscrepancy worst;
  auto scan = [&worst](const Matrix& a, const Matrix& b, bool in_weights) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
      throw Error(ErrorCode::DimensionMismatch, "gradient shapes differ");
    }
    for (std::size_t r = 0; r < a.rows(); ++r) {
      for (std::size_t c = 0; c < a.cols(); ++c) {
        const double x = a(r, c);
        const double y = b(r, c);
        const double denom = std::max({std::abs(x), std::abs(y), 1e-8});
        const double err = std::abs(x - y) / denom;
        if (err > worst.max_relative_error || !std::isfinite(err)) {
          worst = {std::isfinite(err) ? err : INFINITY, in_weights, r, c};
        }
      }
    }
  };
  scan(analytic.d_protos, numeric.d_protos, false);
  scan(analytic.d_weights, numeric.d_weights, true);
  return worst;
}

LossReport train_step(std::span<const Sample> samples, PrototypeBank& bank,
                      EdgeWeightMatrix& weights, const TrainConfig& cfg) {
  const LossReport report = total_loss(samples, bank, weights, cfg.loss_config());
  const GradientBundle g = analytic_gradient(samples, bank, weights, cfg);
  const double lr = cfg.learning_rate;
  if (edges_trainable(weights, cfg)) {
    auto& w = weights.weights.data();
    const auto& dw = g.d_weights.data();
    for (std::size_t k = 0; k < w.size(); ++k) w[k] -= lr * dw[k];
  }
  if (cfg.train_prototypes) {
    for (std::size_t c = 0; c < bank.num_classes(); ++c) {
      auto p = bank.prototype(c);
      const auto dp = g.d_protos.row(c);
      for (std::size_t k = 0; k < p.size(); ++k) p[k] -= lr * dp[k];
    }
  }
  return report;
}

}  // namespace gfs

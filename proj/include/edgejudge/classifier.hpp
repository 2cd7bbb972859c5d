#pragma once

#include <iosfwd>
#include <utility>

#include "edgejudge/preprocess.hpp"
#include "edgejudge/types.hpp"

namespace edgejudge::classifier {

struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Per-feature mean/std fitted on training rows only. Columns with
/// std < epsilon keep scale 1 so constant features pass through.
struct StandardizationStats {
  Vector mean;
  Vector scale;  // divisor per column, >= epsilon guard applied
  static constexpr double kEpsilon = 1e-12;

  static StandardizationStats fit(const Matrix& rows);
  static StandardizationStats identity(int dims);
  Matrix apply(const Matrix& rows) const;
  Vector apply(const Vector& row) const;
};

struct Hyperparams {
  double lambda = 1.0;         // L2 strength on weights (bias unregularized)
  double learning_rate = 0.1;  // initial step, halved by backtracking
  double tolerance = 1e-6;     // gradient infinity-norm stop
  int max_iters = 5000;
  bool standardize = true;
};

struct ModelWeights {
  preprocess::FeatureConfig config;
  Vector weights;  // in standardized feature space
  double bias = 0;
  StandardizationStats stats;
  Hyperparams hyper;
  preprocess::FeatureLayout layout;
};

/// Mean logistic loss + (lambda/2)*||w||^2 and its analytic gradient.
/// X rows are already standardized.
std::pair<double, Vector> loss_and_gradient(const Vector& weights, double bias,
                                            const Matrix& X,
                                            const Eigen::VectorXi& y,
                                            double lambda);

/// Full-batch gradient descent from zero with backtracking; deterministic.
ModelWeights train(const preprocess::FeatureMatrix& features,
                   const Hyperparams& hyper = {});

struct Prediction {
  double probability;
  int label;  // 1 iff probability >= 0.5
};

Prediction predict(const ModelWeights& model, const preprocess::FeatureVector& x);
Prediction predict_row(const ModelWeights& model, const Vector& raw_row);

/// Structured-text serialization, round-trip exact to full precision.
void write_model(std::ostream& out, const ModelWeights& model);
ModelWeights parse_model(std::istream& in);

}  // namespace edgejudge::classifier

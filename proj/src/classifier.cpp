#include "edgejudge/classifier.hpp"

#include "edgejudge/ingest.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace edgejudge::classifier {

using preprocess::FeaturePart;

StandardizationStats StandardizationStats::fit(const Matrix& rows) {
  StandardizationStats stats;
  const double n = static_cast<double>(rows.rows());
  stats.mean = rows.colwise().mean();
  Vector var = (rows.rowwise() - stats.mean.transpose()).array().square().colwise().sum() / n;
  stats.scale = var.array().sqrt();
  for (int i = 0; i < stats.scale.size(); ++i)
    if (stats.scale(i) < kEpsilon) stats.scale(i) = 1.0;
  return stats;
}

StandardizationStats StandardizationStats::identity(int dims) {
  StandardizationStats stats;
  stats.mean = Vector::Zero(dims);
  stats.scale = Vector::Ones(dims);
  return stats;
}

Matrix StandardizationStats::apply(const Matrix& rows) const {
  return (rows.rowwise() - mean.transpose()).array().rowwise() /
         scale.transpose().array();
}

Vector StandardizationStats::apply(const Vector& row) const {
  return (row - mean).array() / scale.array();
}

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// log(1 + e^z) without overflow
double softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

}  // namespace

std::pair<double, Vector> loss_and_gradient(const Vector& weights, double bias,
                                            const Matrix& X,
                                            const Eigen::VectorXi& y,
                                            double lambda) {
  const int n = static_cast<int>(X.rows());
  const Vector z = X * weights + Vector::Constant(n, bias);
  const Vector yd = y.cast<double>();

  double loss = 0;
  Vector p(n);
  for (int i = 0; i < n; ++i) {
    loss += softplus(z(i)) - yd(i) * z(i);
    p(i) = sigmoid(z(i));
  }
  loss = loss / n + 0.5 * lambda * weights.squaredNorm();

  Vector gradient(weights.size() + 1);
  const Vector residual = p - yd;
  gradient.head(weights.size()) = X.transpose() * residual / n + lambda * weights;
  gradient(weights.size()) = residual.mean();
  return {loss, gradient};
}

ModelWeights train(const preprocess::FeatureMatrix& features,
                   const Hyperparams& hyper) {
  const auto& y = features.labels;
  const int n = static_cast<int>(y.size());
  int positives = 0;
  for (int i = 0; i < n; ++i) positives += y(i);
  if (positives == 0 || positives == n)
    throw TrainingError("degenerate training labels: only one class present");

  ModelWeights model;
  model.config = features.config;
  model.layout = features.layout;
  model.hyper = hyper;
  model.stats = hyper.standardize
                    ? StandardizationStats::fit(features.rows)
                    : StandardizationStats::identity(static_cast<int>(features.rows.cols()));
  const Matrix X = model.stats.apply(features.rows);

  const int d = static_cast<int>(X.cols());
  Vector w = Vector::Zero(d);
  double b = 0;
  auto [loss, gradient] = loss_and_gradient(w, b, X, y, hyper.lambda);

  for (int iter = 0; iter < hyper.max_iters; ++iter) {
    if (gradient.lpNorm<Eigen::Infinity>() < hyper.tolerance) break;

    double step = hyper.learning_rate;
    for (;;) {
      Vector w_trial = w - step * gradient.head(d);
      double b_trial = b - step * gradient(d);
      auto [loss_trial, grad_trial] =
          loss_and_gradient(w_trial, b_trial, X, y, hyper.lambda);
      if (loss_trial <= loss || step < 1e-12) {
        w = std::move(w_trial);
        b = b_trial;
        loss = loss_trial;
        gradient = std::move(grad_trial);
        break;
      }
      step /= 2;
    }
  }

  if (!w.allFinite() || !std::isfinite(b))
    throw TrainingError("training diverged to non-finite weights");
  model.weights = std::move(w);
  model.bias = b;
  return model;
}

Prediction predict_row(const ModelWeights& model, const Vector& raw_row) {
  if (raw_row.size() != model.weights.size())
    throw ValidationError("feature length " + std::to_string(raw_row.size()) +
                          " does not match model dimension " +
                          std::to_string(model.weights.size()));
  const double z = model.weights.dot(model.stats.apply(raw_row)) + model.bias;
  const double p = sigmoid(z);
  return {p, p >= 0.5 ? 1 : 0};
}

Prediction predict(const ModelWeights& model, const preprocess::FeatureVector& x) {
  if (x.config != model.config || !(x.layout == model.layout))
    throw ValidationError("feature layout does not match model config " +
                          preprocess::to_string(model.config));
  return predict_row(model, x.values);
}

namespace {

void write_vector(std::ostream& out, const char* key, const Vector& v) {
  out << key;
  for (int i = 0; i < v.size(); ++i) out << ' ' << ingest::format_real(v(i));
  out << '\n';
}

Vector read_vector(std::istream& in, const std::string& expected_key, int dims) {
  std::string key;
  in >> key;
  if (key != expected_key)
    throw ParseError("model file: expected '" + expected_key + "', got '" + key + "'");
  Vector v(dims);
  for (int i = 0; i < dims; ++i)
    if (!(in >> v(i))) throw ParseError("model file: truncated " + expected_key);
  return v;
}

}  // namespace

void write_model(std::ostream& out, const ModelWeights& model) {
  out << "model v1\n";
  out << "config " << preprocess::to_string(model.config) << '\n';
  out << "hyper " << ingest::format_real(model.hyper.lambda) << ' '
      << ingest::format_real(model.hyper.learning_rate) << ' '
      << ingest::format_real(model.hyper.tolerance) << ' '
      << model.hyper.max_iters << ' ' << (model.hyper.standardize ? 1 : 0) << '\n';
  out << "layout " << model.layout.parts.size() << '\n';
  for (const auto& p : model.layout.parts)
    out << "part " << (p.kind == FeaturePart::Kind::Pose ? "pose" : "ang") << ' '
        << p.frames << ' ' << ingest::format_real(p.fps) << '\n';
  out << "bias " << ingest::format_real(model.bias) << '\n';
  write_vector(out, "mean", model.stats.mean);
  write_vector(out, "scale", model.stats.scale);
  write_vector(out, "weights", model.weights);
}

ModelWeights parse_model(std::istream& in) {
  std::string tok, version;
  in >> tok >> version;
  if (tok != "model" || version != "v1")
    throw ParseError("model file: bad header");

  ModelWeights model;
  std::string config_name;
  in >> tok >> config_name;
  if (tok != "config") throw ParseError("model file: expected config");
  model.config = preprocess::feature_config_from_string(config_name);

  int standardize = 1;
  in >> tok >> model.hyper.lambda >> model.hyper.learning_rate >>
      model.hyper.tolerance >> model.hyper.max_iters >> standardize;
  if (tok != "hyper") throw ParseError("model file: expected hyper");
  model.hyper.standardize = standardize != 0;

  size_t n_parts = 0;
  in >> tok >> n_parts;
  if (tok != "layout") throw ParseError("model file: expected layout");
  for (size_t i = 0; i < n_parts; ++i) {
    std::string kind;
    FeaturePart part{};
    in >> tok >> kind >> part.frames >> part.fps;
    if (tok != "part") throw ParseError("model file: expected part");
    if (kind == "pose") part.kind = FeaturePart::Kind::Pose;
    else if (kind == "ang") part.kind = FeaturePart::Kind::Angle;
    else throw ParseError("model file: unknown part kind '" + kind + "'");
    model.layout.parts.push_back(part);
  }

  in >> tok >> model.bias;
  if (tok != "bias") throw ParseError("model file: expected bias");
  const int dims = model.layout.size();
  model.stats.mean = read_vector(in, "mean", dims);
  model.stats.scale = read_vector(in, "scale", dims);
  model.weights = read_vector(in, "weights", dims);
  if (!model.weights.allFinite())
    throw ValidationError("model file: non-finite weights");
  return model;
}

}  // namespace edgejudge::classifier

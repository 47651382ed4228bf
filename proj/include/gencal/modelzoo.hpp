#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "gencal/calibration.hpp"
#include "gencal/datagen.hpp"
#include "gencal/glm.hpp"
#include "gencal/spline.hpp"

namespace gencal {

enum class ModelId { model1, model2, model3 };

/// One term of a model formula; covariates are 0-based (x1 -> 0).
struct Term {
  enum class Kind { main, interaction, smooth };
  Kind kind = Kind::main;
  std::vector<int> vars;

  std::string label() const;
  friend bool operator==(const Term&, const Term&) = default;
};

/// Poisson / log prediction models fitted to the training sample:
///   model-1: x1 + x2 + x3 + x4 + x5   (correctly specified)
///   model-2: x1 + x3 + x1:x3 + s(x5)  (overfit-prone)
///   model-3: x2                       (underfit)
struct ModelSpec {
  ModelId id = ModelId::model1;
  std::vector<Term> terms;
  int spline_knots = 5;
  int spline_degree = 3;

  static ModelSpec make(ModelId id);
  std::string name() const;
};

struct ModelFit {
  ModelSpec spec;
  GlmFit glm;
  /// Basis for the smooth term, fixed at training time.
  std::optional<SplineBasis> basis;
};

/// Design matrix for `spec` on covariates X. The smooth term uses `basis`
/// with its first column dropped against the intercept.
DesignMatrix model_design(const ModelSpec& spec, const Eigen::MatrixXd& X,
                          const SplineBasis* basis);

ModelFit fit_model(const ModelSpec& spec, const SimDataset& train,
                   const GlmControl& control = {});

Eigen::VectorXd predict_model(const ModelFit& fit, const Eigen::MatrixXd& X);

/// Poisson / log PredictionSet of the fitted model on the validation rows.
PredictionSet predict_validation(const ModelFit& fit, const SimDataset& valid);

/// PredictionSet whose predictions are the true means lambda.
PredictionSet true_mean_predictions(const SimDataset& valid);

}  // namespace gencal

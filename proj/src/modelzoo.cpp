#include "gencal/modelzoo.hpp"

#include <stdexcept>

namespace gencal {

std::string Term::label() const {
  auto var = [](int v) { return "x" + std::to_string(v + 1); };
  switch (kind) {
    case Kind::main: return var(vars.at(0));
    case Kind::interaction: return var(vars.at(0)) + ":" + var(vars.at(1));
    case Kind::smooth: return "s(" + var(vars.at(0)) + ")";
  }
  return "?";
}

ModelSpec ModelSpec::make(ModelId id) {
  using K = Term::Kind;
  ModelSpec s;
  s.id = id;
  switch (id) {
    case ModelId::model1:
      s.terms = {{K::main, {0}}, {K::main, {1}}, {K::main, {2}}, {K::main, {3}}, {K::main, {4}}};
      break;
    case ModelId::model2:
      s.terms = {{K::main, {0}}, {K::main, {2}}, {K::interaction, {0, 2}}, {K::smooth, {4}}};
      break;
    case ModelId::model3:
      s.terms = {{K::main, {1}}};
      break;
  }
  return s;
}

std::string ModelSpec::name() const {
  switch (id) {
    case ModelId::model1: return "model-1";
    case ModelId::model2: return "model-2";
    case ModelId::model3: return "model-3";
  }
  return "?";
}

namespace {

const Term* smooth_term(const ModelSpec& spec) {
  for (const auto& t : spec.terms) {
    if (t.kind == Term::Kind::smooth) return &t;
  }
  return nullptr;
}

}  // namespace

DesignMatrix model_design(const ModelSpec& spec, const Eigen::MatrixXd& X,
                          const SplineBasis* basis) {
  const Eigen::Index n = X.rows();
  std::vector<Eigen::VectorXd> cols;
  std::vector<std::string> names;
  for (const auto& t : spec.terms) {
    switch (t.kind) {
      case Term::Kind::main:
        cols.push_back(X.col(t.vars[0]));
        names.push_back(t.label());
        break;
      case Term::Kind::interaction:
        cols.push_back(X.col(t.vars[0]).cwiseProduct(X.col(t.vars[1])));
        names.push_back(t.label());
        break;
      case Term::Kind::smooth: {
        if (basis == nullptr) throw ValidationError("model_design: smooth term needs a basis");
        const Eigen::MatrixXd B = basis->evaluate(X.col(t.vars[0]));
        for (Eigen::Index j = 1; j < B.cols(); ++j) {
          cols.push_back(B.col(j));
          names.push_back(basis->column_names()[j]);
        }
        break;
      }
    }
  }
  Eigen::MatrixXd M(n, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) M.col(static_cast<Eigen::Index>(j)) = cols[j];
  return DesignMatrix::with_intercept(M, std::move(names));
}

ModelFit fit_model(const ModelSpec& spec, const SimDataset& train, const GlmControl& control) {
  ModelFit fit;
  fit.spec = spec;
  try {
    if (const Term* s = smooth_term(spec)) {
      fit.basis = build_spline_basis(train.X.col(s->vars[0]), spec.spline_knots,
                                     spec.spline_degree, s->label())
                      .basis;
    }
    const DesignMatrix X = model_design(spec, train.X, fit.basis ? &*fit.basis : nullptr);
    fit.glm = fit_glm(train.y, X, FamilySpec(FamilyKind::poisson), LinkSpec(LinkKind::log),
                      std::nullopt, std::nullopt, control);
  } catch (const NumericalError& e) {
    throw NumericalError(spec.name() + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(spec.name() + ": " + e.what());
  }
  return fit;
}

Eigen::VectorXd predict_model(const ModelFit& fit, const Eigen::MatrixXd& X) {
  const DesignMatrix D = model_design(fit.spec, X, fit.basis ? &*fit.basis : nullptr);
  return predict_glm(fit.glm, D);
}

PredictionSet predict_validation(const ModelFit& fit, const SimDataset& valid) {
  return make_prediction_set(valid.y, predict_model(fit, valid.X),
                             FamilySpec(FamilyKind::poisson), LinkSpec(LinkKind::log));
}

PredictionSet true_mean_predictions(const SimDataset& valid) {
  return make_prediction_set(valid.y, valid.lambda, FamilySpec(FamilyKind::poisson),
                             LinkSpec(LinkKind::log));
}

}  // namespace gencal

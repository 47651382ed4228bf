#pragma once

#include <optional>
#include <string>
#include <utility>

#include "gencal/calibration.hpp"

namespace gencal {

struct PlotSpec {
  int width = 480;
  int height = 480;
  /// Shared x/y limits; computed from the data when absent.
  std::optional<std::pair<double, double>> limits;
  std::string x_label = "Predicted value";
  std::string y_label = "Empirical average";
  std::string title;  ///< defaults to the assessment label

  std::string diagonal_dash = "2,4";  ///< dotted ideal line
  std::string glm_dash = "8,5";       ///< dashed GLM curve
  std::string curve_color = "#000000";
  std::string band_fill = "#c8c8c8";
  std::string histogram_fill = "#7f7f7f";
};

/// Calibration plot as a standalone SVG 1.1 document: dotted diagonal,
/// dashed GLM curve, solid loess curve over a grey pointwise band, binned
/// points, and a histogram of predictions along the bottom tenth.
/// Output depends only on the inputs. Throws ValidationError when the
/// assessment has no binned curve.
std::string render_svg(const CalibrationAssessment& assessment, const PlotSpec& spec = {});

struct SummaryTexts {
  std::string json;
  std::string curves_csv;  ///< grid,glm_curve,flex,flex_lo,flex_hi
  std::string binned_csv;  ///< mean_pred,mean_obs,count
};

/// Machine-readable summaries at full double precision. Missing values are
/// JSON null / CSV NA.
SummaryTexts export_summary(const CalibrationAssessment& assessment);

/// "%.2f" with negative zero printed as 0.00.
std::string format_fixed2(double v);

}  // namespace gencal

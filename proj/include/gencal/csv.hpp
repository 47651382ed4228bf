#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <string_view>

namespace gencal {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// Outcome / prediction columns read from a `y,mu_hat` CSV.
struct PredictionColumns {
  Eigen::VectorXd y;
  Eigen::VectorXd mu_hat;
};

/// Parses CSV text with a header containing `y` and `mu_hat` (other columns
/// are ignored). Throws ValidationError naming the offending line.
PredictionColumns parse_prediction_csv(std::string_view text);

/// `y,mu_hat` CSV text, LF line endings.
std::string prediction_csv(const Eigen::Ref<const Eigen::VectorXd>& y,
                           const Eigen::Ref<const Eigen::VectorXd>& mu_hat);

/// Whole-file I/O; failures throw IoError.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace gencal

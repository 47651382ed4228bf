#include "gencal/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "gencal/error.hpp"

namespace gencal {

std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    std::string_view f = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
    while (!f.empty() && (f.front() == ' ' || f.front() == '"')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '"')) f.remove_suffix(1);
    out.push_back(f);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_number(std::string_view field, std::size_t line, const char* column) {
  double v = 0.0;
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size() || !std::isfinite(v)) {
    throw ValidationError("line " + std::to_string(line) + ": column '" + column +
                          "' is not a finite number: '" + std::string(field) + "'");
  }
  return v;
}

}  // namespace

PredictionColumns parse_prediction_csv(std::string_view text) {
  std::vector<double> ys, mus;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  long y_col = -1, mu_col = -1;
  std::size_t n_cols = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (y_col < 0) {
      for (std::size_t j = 0; j < fields.size(); ++j) {
        if (fields[j] == "y") y_col = static_cast<long>(j);
        if (fields[j] == "mu_hat") mu_col = static_cast<long>(j);
      }
      if (y_col < 0 || mu_col < 0) {
        throw ValidationError("line " + std::to_string(line_no) +
                              ": header must contain columns 'y' and 'mu_hat'");
      }
      n_cols = fields.size();
      continue;
    }
    if (fields.size() != n_cols) {
      throw ValidationError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(n_cols) + " fields, found " +
                            std::to_string(fields.size()));
    }
    ys.push_back(parse_number(fields[y_col], line_no, "y"));
    mus.push_back(parse_number(fields[mu_col], line_no, "mu_hat"));
  }
  if (y_col < 0) throw ValidationError("prediction file is empty");
  PredictionColumns out;
  out.y = Eigen::Map<Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
  out.mu_hat = Eigen::Map<Eigen::VectorXd>(mus.data(), static_cast<Eigen::Index>(mus.size()));
  return out;
}

std::string prediction_csv(const Eigen::Ref<const Eigen::VectorXd>& y,
                           const Eigen::Ref<const Eigen::VectorXd>& mu_hat) {
  if (y.size() != mu_hat.size()) throw ValidationError("prediction_csv: length mismatch");
  std::string out = "y,mu_hat\n";
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    out += format_double(y[i]);
    out += ',';
    out += format_double(mu_hat[i]);
    out += '\n';
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace gencal

#include <doctest.h>

#include <cmath>
#include <json.hpp>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "gencal/calibration.hpp"
#include "gencal/datagen.hpp"
#include "gencal/modelzoo.hpp"
#include "gencal/report.hpp"
#include "gencal/rng.hpp"

using namespace gencal;

namespace {

// Minimal well-formedness check: balanced tags, quoted attributes.
bool well_formed(const std::string& s) {
  std::vector<std::string> stack;
  std::size_t pos = 0;
  while ((pos = s.find('<', pos)) != std::string::npos) {
    const std::size_t end = s.find('>', pos);
    if (end == std::string::npos) return false;
    const std::string tag = s.substr(pos + 1, end - pos - 1);
    pos = end + 1;
    if (tag.empty()) return false;
    if (tag[0] == '?' || tag[0] == '!') continue;
    if (std::count(tag.begin(), tag.end(), '"') % 2 != 0) return false;
    if (tag[0] == '/') {
      if (stack.empty() || stack.back() != tag.substr(1)) return false;
      stack.pop_back();
      continue;
    }
    if (tag.back() == '/') continue;
    stack.push_back(tag.substr(0, tag.find(' ')));
  }
  return stack.empty();
}

std::string path_of(const std::string& svg, const std::string& cls) {
  const std::string key = "class=\"" + cls + "\" d=\"";
  const auto p = svg.find(key);
  if (p == std::string::npos) return {};
  const auto start = p + key.size();
  return svg.substr(start, svg.find('"', start) - start);
}

std::vector<std::pair<double, double>> points(const std::string& d) {
  std::vector<std::pair<double, double>> out;
  const std::regex re(R"(([-0-9.]+),([-0-9.]+))");
  for (std::sregex_iterator it(d.begin(), d.end(), re), e; it != e; ++it) {
    out.emplace_back(std::stod((*it)[1]), std::stod((*it)[2]));
  }
  return out;
}

CalibrationAssessment poisson_assessment(std::uint64_t seed) {
  Rng rng(seed);
  const int n = 800;
  Eigen::VectorXd y(n), mu(n);
  for (int i = 0; i < n; ++i) {
    mu[i] = std::exp(0.4 * rng.normal());
    y[i] = static_cast<double>(rng.poisson(mu[i]));
  }
  return assess(make_prediction_set(y, mu, FamilySpec(FamilyKind::poisson)), {}, "test");
}

}  // namespace

TEST_CASE("SVG structure") {
  const CalibrationAssessment a = poisson_assessment(1);
  const std::string svg = render_svg(a);
  CHECK(well_formed(svg));
  for (const char* cls : {"class=\"band\"", "class=\"histogram\"", "class=\"diagonal\"",
                          "class=\"glm-curve\"", "class=\"flexible-curve\"", "class=\"binned\"",
                          "class=\"slope\"", "class=\"intercept\""}) {
    CHECK(svg.find(cls) != std::string::npos);
  }
  CHECK(svg.find("stroke-dasharray=\"2,4\"") != std::string::npos);
  CHECK(svg.find("stroke-dasharray=\"8,5\"") != std::string::npos);
  CHECK(svg == render_svg(a));
}

TEST_CASE("property: plotted coordinates are finite and inside the view box") {
  const CalibrationAssessment a = poisson_assessment(2);
  const std::string svg = render_svg(a);
  const std::regex num_attr(R"((?:\bx|\by|cx|cy|x1|x2|y1|y2)=\"([^\"]+)\")");
  for (std::sregex_iterator it(svg.begin(), svg.end(), num_attr), e; it != e; ++it) {
    const double v = std::stod((*it)[1]);
    CHECK(std::isfinite(v));
    CHECK(v >= 0.0);
    CHECK(v <= 480.0);
  }
  for (const char* cls : {"glm-curve", "flexible-curve", "diagonal"}) {
    for (const auto& [x, y] : points(path_of(svg, cls))) {
      CHECK(x >= 0.0);
      CHECK(x <= 480.0);
      CHECK(y >= 0.0);
      CHECK(y <= 480.0);
    }
  }
}

TEST_CASE("identity assessment overlays the diagonal") {
  Rng rng(3);
  Eigen::VectorXd mu(300);
  for (auto& v : mu) v = 1.0 + rng.uniform();
  const CalibrationAssessment a =
      assess(make_prediction_set(mu, mu, FamilySpec(FamilyKind::gaussian)), {}, "identity");
  REQUIRE(a.glm_curve.has_value());
  const std::string svg = render_svg(a);
  const auto diag = points(path_of(svg, "diagonal"));
  REQUIRE(diag.size() == 2);
  const double sum = diag[0].first + diag[0].second;
  const auto curve = points(path_of(svg, "glm-curve"));
  REQUIRE(curve.size() == 101);
  for (const auto& [x, y] : curve) CHECK(std::abs(x + y - sum) < 0.5);
}

TEST_CASE("annotation text matches the slope on the demo model-1") {
  SimConfig c;
  c.n_population = 100000;
  const SimData d = generate(c);
  const ModelFit fit = fit_model(ModelSpec::make(ModelId::model1), d.train);
  const CalibrationAssessment a = assess(predict_validation(fit, d.valid), {}, "model-1");
  const std::string svg = render_svg(a);
  CHECK(svg.find("Calibration slope: " + format_fixed2(a.slope->zeta)) != std::string::npos);
  CHECK(svg.find("Calibration intercept: " + format_fixed2(a.intercept->alpha_c)) != std::string::npos);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", a.slope->zeta);
  CHECK(format_fixed2(a.slope->zeta) == buf);
}

TEST_CASE("fixed formatting") {
  CHECK(format_fixed2(-0.001) == "0.00");
  CHECK(format_fixed2(1.005) == "1.00");
  CHECK(format_fixed2(0.987) == "0.99");
}

TEST_CASE("summary round-trip and CSV shapes") {
  const CalibrationAssessment a = poisson_assessment(4);
  const SummaryTexts t = export_summary(a);
  const nlohmann::json j = nlohmann::json::parse(t.json);
  CHECK(j["slope"].get<double>() == a.slope->zeta);
  CHECK(j["slope_se"].get<double>() == a.slope->zeta_se);
  CHECK(j["intercept_citl"].get<double>() == a.intercept->alpha_c);
  CHECK(j["alpha_unconstrained"].get<double>() == a.slope->alpha);
  CHECK(j["n"].get<int>() == 800);
  CHECK(j["flexible"]["span"].get<double>() == 0.75);
  REQUIRE(j["binned"].size() == a.binned->bins.size());
  for (std::size_t b = 0; b < a.binned->bins.size(); ++b) {
    CHECK(j["binned"][b]["mean_pred"].get<double>() == a.binned->bins[b].mean_predicted);
    CHECK(j["binned"][b]["mean_obs"].get<double>() == a.binned->bins[b].mean_observed);
  }

  CHECK(std::count(t.curves_csv.begin(), t.curves_csv.end(), '\n') == a.grid.size() + 1);
  std::istringstream in(t.curves_csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "grid,glm_curve,flex,flex_lo,flex_hi");
  std::getline(in, line);
  CHECK(std::stod(line.substr(0, line.find(','))) == a.grid[0]);

  std::istringstream bins(t.binned_csv);
  std::getline(bins, line);
  CHECK(line == "mean_pred,mean_obs,count");
  std::size_t total = 0;
  while (std::getline(bins, line)) total += std::stoul(line.substr(line.rfind(',') + 1));
  CHECK(total == 800);
}

TEST_CASE("missing components render as NA and null") {
  Eigen::VectorXd y(20), mu = Eigen::VectorXd::Constant(20, 1.0);
  for (int i = 0; i < 20; ++i) y[i] = i % 3;
  const CalibrationAssessment a = assess(make_prediction_set(y, mu, FamilySpec(FamilyKind::poisson)));
  const SummaryTexts t = export_summary(a);
  const nlohmann::json j = nlohmann::json::parse(t.json);
  CHECK(j["slope"].is_null());
  CHECK(!j["intercept_citl"].is_null());
  CHECK(j["status"]["slope"].get<std::string>() != "ok");
}

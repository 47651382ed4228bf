#include "gencal/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <limits>

#include "gencal/csv.hpp"
#include "gencal/error.hpp"

namespace gencal {

std::string format_fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s(buf);
  if (s == "-0.00") s = "0.00";
  return s;
}

namespace {

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Frame {
  double left, top, size;
  double lo, hi;

  double x(double v) const { return left + (v - lo) / (hi - lo) * size; }
  double y(double v) const { return top + size - (v - lo) / (hi - lo) * size; }
};

std::pair<double, double> data_limits(const CalibrationAssessment& a) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  auto take = [&](double v) {
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  };
  auto take_all = [&](const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) take(v[i]);
  };
  take_all(a.grid);
  if (a.glm_curve) take_all(*a.glm_curve);
  if (a.flexible) {
    take_all(a.flexible->fitted);
    take_all(a.flexible->lower);
    take_all(a.flexible->upper);
  }
  if (a.binned) {
    for (const auto& b : a.binned->bins) {
      take(b.mean_predicted);
      take(b.mean_observed);
    }
  }
  for (double e : a.histogram.edges) take(e);
  if (!(lo < hi)) {
    lo = std::isfinite(lo) ? lo - 0.5 : 0.0;
    hi = lo + 1.0;
  }
  const double pad = 0.02 * (hi - lo);
  return {lo - pad, hi + pad};
}

std::string polyline_path(const Frame& f, const Eigen::VectorXd& xs, const Eigen::VectorXd& ys) {
  std::string d;
  for (Eigen::Index i = 0; i < xs.size(); ++i) {
    d += i == 0 ? "M" : " L";
    d += px(f.x(xs[i])) + "," + px(f.y(ys[i]));
  }
  return d;
}

}  // namespace

std::string render_svg(const CalibrationAssessment& a, const PlotSpec& spec) {
  if (!a.binned) throw ValidationError("render_svg: assessment has no binned curve");
  if (spec.width < 100 || spec.height < 100) throw ValidationError("render_svg: plot too small");

  auto [lo, hi] = spec.limits.value_or(data_limits(a));
  if (spec.limits) {
    const auto [dlo, dhi] = data_limits(a);
    lo = std::min(lo, dlo);
    hi = std::max(hi, dhi);
  }
  const double margin_left = 64, margin_right = 16, margin_top = 36, margin_bottom = 52;
  const double size = std::min(spec.width - margin_left - margin_right,
                               spec.height - margin_top - margin_bottom);
  const Frame f{margin_left, margin_top, size, lo, hi};
  const std::string title = spec.title.empty() ? a.label : spec.title;

  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
       std::to_string(spec.width) + "\" height=\"" + std::to_string(spec.height) +
       "\" viewBox=\"0 0 " + std::to_string(spec.width) + " " + std::to_string(spec.height) +
       "\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"" + std::to_string(spec.width) + "\" height=\"" +
       std::to_string(spec.height) + "\" fill=\"#ffffff\"/>\n";
  if (!title.empty()) {
    s += "<text class=\"title\" x=\"" + px(f.left + size / 2) + "\" y=\"20\" font-family=\"sans-serif\" "
         "font-size=\"14\" text-anchor=\"middle\">" + escape(title) + "</text>\n";
  }

  // Axes and ticks.
  s += "<g class=\"axes\" stroke=\"#000000\" fill=\"none\" stroke-width=\"1\">\n";
  s += "<rect x=\"" + px(f.left) + "\" y=\"" + px(f.top) + "\" width=\"" + px(size) +
       "\" height=\"" + px(size) + "\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = lo + (hi - lo) * k / 4.0;
    s += "<line x1=\"" + px(f.x(v)) + "\" y1=\"" + px(f.top + size) + "\" x2=\"" + px(f.x(v)) +
         "\" y2=\"" + px(f.top + size + 5) + "\"/>\n";
    s += "<line x1=\"" + px(f.left - 5) + "\" y1=\"" + px(f.y(v)) + "\" x2=\"" + px(f.left) +
         "\" y2=\"" + px(f.y(v)) + "\"/>\n";
  }
  s += "</g>\n";
  s += "<g class=\"tick-labels\" font-family=\"sans-serif\" font-size=\"10\" fill=\"#000000\">\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = lo + (hi - lo) * k / 4.0;
    char lab[32];
    std::snprintf(lab, sizeof lab, "%.3g", std::fabs(v) < 1e-12 ? 0.0 : v);
    s += "<text x=\"" + px(f.x(v)) + "\" y=\"" + px(f.top + size + 17) +
         "\" text-anchor=\"middle\">" + lab + "</text>\n";
    s += "<text x=\"" + px(f.left - 8) + "\" y=\"" + px(f.y(v) + 3) + "\" text-anchor=\"end\">" +
         lab + "</text>\n";
  }
  s += "</g>\n";
  s += "<text class=\"x-label\" x=\"" + px(f.left + size / 2) + "\" y=\"" +
       px(f.top + size + 38) + "\" font-family=\"sans-serif\" font-size=\"12\" "
       "text-anchor=\"middle\">" + escape(spec.x_label) + "</text>\n";
  s += "<text class=\"y-label\" x=\"16\" y=\"" + px(f.top + size / 2) +
       "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
       px(f.top + size / 2) + ")\">" + escape(spec.y_label) + "</text>\n";

  if (a.flexible) {
    const auto& fl = *a.flexible;
    std::string pts;
    for (Eigen::Index i = 0; i < fl.grid.size(); ++i) {
      pts += (pts.empty() ? "" : " ") + px(f.x(fl.grid[i])) + "," + px(f.y(fl.upper[i]));
    }
    for (Eigen::Index i = fl.grid.size() - 1; i >= 0; --i) {
      pts += " " + px(f.x(fl.grid[i])) + "," + px(f.y(fl.lower[i]));
    }
    s += "<polygon class=\"band\" points=\"" + pts + "\" fill=\"" + spec.band_fill +
         "\" stroke=\"none\"/>\n";
  }

  // Histogram strip in the bottom tenth of the plot area.
  {
    std::size_t peak = 1;
    for (auto c : a.histogram.counts) peak = std::max(peak, c);
    const double strip = 0.1 * size;
    s += "<g class=\"histogram\" fill=\"" + spec.histogram_fill + "\" stroke=\"none\">\n";
    for (std::size_t b = 0; b < a.histogram.counts.size(); ++b) {
      if (a.histogram.counts[b] == 0) continue;
      const double x0 = f.x(a.histogram.edges[b]);
      const double x1 = f.x(a.histogram.edges[b + 1]);
      const double h = strip * static_cast<double>(a.histogram.counts[b]) / static_cast<double>(peak);
      s += "<rect x=\"" + px(x0) + "\" y=\"" + px(f.top + size - h) + "\" width=\"" +
           px(std::max(x1 - x0, 0.0)) + "\" height=\"" + px(h) + "\"/>\n";
    }
    s += "</g>\n";
  }

  s += "<path class=\"diagonal\" d=\"M" + px(f.x(lo)) + "," + px(f.y(lo)) + " L" + px(f.x(hi)) +
       "," + px(f.y(hi)) + "\" fill=\"none\" stroke=\"" + spec.curve_color +
       "\" stroke-width=\"1\" stroke-dasharray=\"" + spec.diagonal_dash + "\"/>\n";
  if (a.glm_curve) {
    s += "<path class=\"glm-curve\" d=\"" + polyline_path(f, a.grid, *a.glm_curve) +
         "\" fill=\"none\" stroke=\"" + spec.curve_color +
         "\" stroke-width=\"1.5\" stroke-dasharray=\"" + spec.glm_dash + "\"/>\n";
  }
  if (a.flexible) {
    s += "<path class=\"flexible-curve\" d=\"" +
         polyline_path(f, a.flexible->grid, a.flexible->fitted) + "\" fill=\"none\" stroke=\"" +
         spec.curve_color + "\" stroke-width=\"1.5\"/>\n";
  }
  s += "<g class=\"binned\" fill=\"none\" stroke=\"" + spec.curve_color + "\">\n";
  for (const auto& b : a.binned->bins) {
    s += "<circle cx=\"" + px(f.x(b.mean_predicted)) + "\" cy=\"" + px(f.y(b.mean_observed)) +
         "\" r=\"3\"/>\n";
  }
  s += "</g>\n";

  const std::string slope = a.slope ? format_fixed2(a.slope->zeta) : "NA";
  const std::string intercept = a.intercept ? format_fixed2(a.intercept->alpha_c) : "NA";
  s += "<g class=\"annotation\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#000000\">\n";
  s += "<text class=\"slope\" x=\"" + px(f.left + 8) + "\" y=\"" + px(f.top + 16) +
       "\">Calibration slope: " + slope + "</text>\n";
  s += "<text class=\"intercept\" x=\"" + px(f.left + 8) + "\" y=\"" + px(f.top + 32) +
       "\">Calibration intercept: " + intercept + "</text>\n";
  s += "</g>\n";
  s += "</svg>\n";
  return s;
}

SummaryTexts export_summary(const CalibrationAssessment& a) {
  using nlohmann::ordered_json;
  auto num = [](std::optional<double> v) -> ordered_json {
    return v && std::isfinite(*v) ? ordered_json(*v) : ordered_json(nullptr);
  };
  ordered_json doc;
  doc["label"] = a.label;
  doc["family"] = std::string(a.family.name());
  doc["link"] = std::string(a.link.name());
  doc["n"] = a.n;
  doc["clamped_count"] = a.clamped_count;
  doc["slope"] = num(a.slope ? std::optional(a.slope->zeta) : std::nullopt);
  doc["slope_se"] = num(a.slope ? std::optional(a.slope->zeta_se) : std::nullopt);
  doc["intercept_citl"] = num(a.intercept ? std::optional(a.intercept->alpha_c) : std::nullopt);
  doc["intercept_se"] = num(a.intercept ? std::optional(a.intercept->se) : std::nullopt);
  doc["alpha_unconstrained"] = num(a.slope ? std::optional(a.slope->alpha) : std::nullopt);
  doc["alpha_unconstrained_se"] = num(a.slope ? std::optional(a.slope->alpha_se) : std::nullopt);
  doc["min_prediction"] = a.min_prediction;
  doc["max_prediction"] = a.max_prediction;

  ordered_json conv;
  conv["slope"] = a.slope ? ordered_json{{"converged", a.slope->fit.converged},
                                         {"iterations", a.slope->fit.iterations}}
                          : ordered_json(nullptr);
  conv["intercept"] = a.intercept ? ordered_json{{"converged", a.intercept->fit.converged},
                                                 {"iterations", a.intercept->fit.iterations}}
                                  : ordered_json(nullptr);
  doc["convergence"] = conv;

  doc["flexible"] = {{"method", "loess"},
                     {"span", a.options.span},
                     {"degree", a.options.degree},
                     {"level", a.options.level},
                     {"interval", "gaussian"},
                     {"z", num(a.flexible ? std::optional(a.flexible->z) : std::nullopt)}};
  doc["grid_points"] = a.grid.size();

  ordered_json bins = ordered_json::array();
  if (a.binned) {
    for (const auto& b : a.binned->bins) {
      bins.push_back({{"mean_pred", b.mean_predicted}, {"mean_obs", b.mean_observed}, {"count", b.count}});
    }
  }
  doc["binned"] = bins;
  doc["histogram"] = {{"edges", a.histogram.edges}, {"counts", a.histogram.counts}};

  ordered_json status;
  for (const auto& [name, st] : a.status) status[name] = st.ok ? "ok" : st.error;
  doc["status"] = status;
  doc["warnings"] = a.warnings;

  SummaryTexts out;
  out.json = doc.dump(2) + "\n";

  out.curves_csv = "grid,glm_curve,flex,flex_lo,flex_hi\n";
  for (Eigen::Index i = 0; i < a.grid.size(); ++i) {
    out.curves_csv += format_double(a.grid[i]);
    out.curves_csv += ',' + (a.glm_curve ? format_double((*a.glm_curve)[i]) : "NA");
    if (a.flexible) {
      out.curves_csv += ',' + format_double(a.flexible->fitted[i]) + ',' +
                        format_double(a.flexible->lower[i]) + ',' +
                        format_double(a.flexible->upper[i]);
    } else {
      out.curves_csv += ",NA,NA,NA";
    }
    out.curves_csv += '\n';
  }

  out.binned_csv = "mean_pred,mean_obs,count\n";
  if (a.binned) {
    for (const auto& b : a.binned->bins) {
      out.binned_csv += format_double(b.mean_predicted) + ',' + format_double(b.mean_observed) +
                        ',' + std::to_string(b.count) + '\n';
    }
  }
  return out;
}

}  // namespace gencal

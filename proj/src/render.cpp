#include "perfolab/render.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace perfolab {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct Style {
  const char* cls;
  const char* css;
};

constexpr Style kDb{"db", "fill:#d9c7ef;fill-opacity:0.35;stroke:#6a3d9a;stroke-dasharray:2,2;stroke-width:1"};
constexpr Style kLambda{"lambda", "fill:none;stroke:#ff7f00;stroke-dasharray:6,3;stroke-width:1.2"};
constexpr Style kBad{"bad", "fill:#e31a1c;stroke:#99000d;stroke-width:0.8"};
constexpr Style kGood{"good", "fill:#1f78b4;stroke:#08306b;stroke-width:0.8"};
constexpr Style kHole{"hole", "fill:#737373;stroke:#252525;stroke-width:0.8"};

}  // namespace

std::string render_slice(const MarkedRealization& r, const CoveringResult* cov, double offset, double width_px) {
  if (!(width_px > 0.0)) throw ConfigError("render width must be positive");
  const int d = r.dim();
  const double e = r.domain.bounding_half_width();
  const double scale = width_px / (2.0 * e);
  const bool in_domain = d < 3 || std::abs(offset) < e;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width_px) << "\" height=\"" << num(width_px)
     << "\" viewBox=\"0 0 " << num(width_px) << ' ' << num(width_px) << "\">\n";
  os << "<style>\n";
  for (const Style& s : {kDb, kLambda, kBad, kGood, kHole}) os << '.' << s.cls << '{' << s.css << "}\n";
  os << "</style>\n";
  os << "<rect class=\"frame\" x=\"0\" y=\"0\" width=\"" << num(width_px) << "\" height=\"" << num(width_px)
     << "\" style=\"fill:white;stroke:black;stroke-width:1\"/>\n";
  if (r.domain.kind == DomainKind::ball && d >= 2 && in_domain) {
    const double rr = std::sqrt(std::max(0.0, e * e - (d >= 3 ? (d - 2) * offset * offset : 0.0)));
    os << "<circle class=\"frame\" cx=\"" << num(width_px / 2) << "\" cy=\"" << num(width_px / 2) << "\" r=\""
       << num(rr * scale) << "\" style=\"fill:none;stroke:black;stroke-dasharray:4,4\"/>\n";
  }

  auto emit = [&](const Ball& b, const Style& s) {
    double off2 = 0.0;
    for (int k = 2; k < d; ++k) off2 += (b.center[k] - offset) * (b.center[k] - offset);
    if (off2 >= b.radius * b.radius) return;
    const double rr = std::sqrt(b.radius * b.radius - off2);
    const double cx = (b.center[0] + e) * scale;
    const double cy = (e - (d >= 2 ? b.center[1] : 0.0)) * scale;
    os << "<circle class=\"" << s.cls << "\" cx=\"" << num(cx) << "\" cy=\"" << num(cy) << "\" r=\""
       << num(rr * scale) << "\"/>\n";
  };

  if (in_domain && !r.points.empty()) {
    const HoleSystem h = holes(r);
    if (cov) {
      auto check = [&](std::size_t i) {
        if (i >= h.balls.size()) throw ConfigError("covering refers to hole " + std::to_string(i) + " not in the scene");
      };
      for (std::size_t i : cov->good) check(i);
      for (const auto& [i, k] : cov->assignment) check(i);
      for (const auto& [k, fam] : cov->families)
        for (const auto& m : fam) check(m.index);
      const DerivedSets s = derived_sets(*cov, h);
      os << "<g id=\"d_bad\">\n";
      for (const Ball& b : s.d_bad) emit(b, kDb);
      os << "</g>\n<g id=\"lambda_balls\">\n";
      for (const Ball& b : s.h_bar_bad) emit(b, kLambda);
      os << "</g>\n<g id=\"bad_holes\">\n";
      for (const Ball& b : s.h_bad) emit(b, kBad);
      os << "</g>\n<g id=\"good_holes\">\n";
      for (const Ball& b : s.h_good) emit(b, kGood);
      os << "</g>\n";
    } else {
      os << "<g id=\"holes\">\n";
      for (const Ball& b : h.balls) emit(b, kHole);
      os << "</g>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace perfolab

#ifndef CONICAM_TOOLS_SVG_HPP
#define CONICAM_TOOLS_SVG_HPP

// Minimal SVG 1.1 writer. Elements are emitted in insertion order with fixed
// three-decimal coordinates so output is byte-stable.

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace conicam::svg {

inline std::string num(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("svg: non-finite coordinate");
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s(buf);
  if (s == "-0.000") s = "0.000";
  return s;
}

inline std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
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

struct Style {
  std::string stroke = "black";
  std::string fill = "none";
  double width = 1.0;
  std::string dash;
};

class Document {
 public:
  Document(double width, double height) : width_(width), height_(height) {}

  void begin_group(const std::string& id) {
    body_ << "<g id=\"" << escape(id) << "\">\n";
  }
  void end_group() { body_ << "</g>\n"; }

  void line(const std::string& id, double x1, double y1, double x2, double y2,
            const Style& s) {
    body_ << "<line id=\"" << escape(id) << "\" x1=\"" << num(x1) << "\" y1=\""
          << num(y1) << "\" x2=\"" << num(x2) << "\" y2=\"" << num(y2) << "\""
          << attrs(s) << "/>\n";
  }

  void circle(const std::string& id, double cx, double cy, double r,
              const Style& s) {
    body_ << "<circle id=\"" << escape(id) << "\" cx=\"" << num(cx)
          << "\" cy=\"" << num(cy) << "\" r=\"" << num(r) << "\"" << attrs(s)
          << "/>\n";
  }

  /// Polyline or closed polygon through the given points.
  void path(const std::string& id, const std::vector<std::pair<double, double>>& pts,
            bool closed, const Style& s) {
    if (pts.empty()) return;
    body_ << "<path id=\"" << escape(id) << "\" d=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      body_ << (i ? " L" : "M") << num(pts[i].first) << "," << num(pts[i].second);
    }
    if (closed) body_ << " Z";
    body_ << "\"" << attrs(s) << "/>\n";
  }

  void text(const std::string& id, double x, double y, const std::string& label,
            double size = 12.0, const std::string& anchor = "start") {
    body_ << "<text id=\"" << escape(id) << "\" x=\"" << num(x) << "\" y=\""
          << num(y) << "\" font-family=\"sans-serif\" font-size=\"" << num(size)
          << "\" text-anchor=\"" << anchor << "\">" << escape(label)
          << "</text>\n";
  }

  std::string str() const {
    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\""
        << num(width_) << "\" height=\"" << num(height_) << "\" viewBox=\"0 0 "
        << num(width_) << " " << num(height_) << "\">\n"
        << body_.str() << "</svg>\n";
    return out.str();
  }

 private:
  static std::string attrs(const Style& s) {
    std::string a = " stroke=\"" + s.stroke + "\" fill=\"" + s.fill +
                     "\" stroke-width=\"" + num(s.width) + "\"";
    if (!s.dash.empty()) a += " stroke-dasharray=\"" + s.dash + "\"";
    return a;
  }

  double width_;
  double height_;
  std::ostringstream body_;
};

}  // namespace conicam::svg

#endif  // CONICAM_TOOLS_SVG_HPP

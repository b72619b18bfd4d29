#include "gvhoi/timeline_svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace gvhoi {

namespace {

std::string color(int cls) {
  static const char* palette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1",
                                  "#ff9da7", "#9c755f", "#bab0ac", "#17becf", "#bcbd22", "#8c564b", "#7f7f7f"};
  constexpr int n = sizeof(palette) / sizeof(palette[0]);
  return palette[cls % n];
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void write_timeline_svg(std::ostream& os, const std::string& title, const std::vector<TimelineRow>& rows,
                        const std::vector<std::string>& class_names, const std::string& provenance) {
  const double label_w = 140.0, bar_w = 800.0, row_h = 18.0, gap = 6.0, top = 30.0;
  std::size_t frames = 1;
  for (const auto& r : rows) frames = std::max(frames, r.frames.size());
  const double fw = bar_w / static_cast<double>(frames);
  const double legend_y = top + static_cast<double>(rows.size()) * (row_h + gap) + 10.0;
  const double height = legend_y + 20.0 * std::ceil(static_cast<double>(class_names.size()) / 4.0) + 10.0;
  char buf[256];
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<!-- " << escape(provenance) << " -->\n";
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" font-family=\"sans-serif\" "
                "font-size=\"11\">\n",
                label_w + bar_w + 20.0, height);
  os << buf;
  os << "<text x=\"4\" y=\"16\" font-size=\"13\">" << escape(title) << "</text>\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double y = top + static_cast<double>(r) * (row_h + gap);
    std::snprintf(buf, sizeof buf, "<text x=\"4\" y=\"%.1f\">", y + row_h - 5.0);
    os << buf << escape(rows[r].label) << "</text>\n";
    const auto& f = rows[r].frames;
    std::size_t t = 0;
    while (t < f.size()) {
      std::size_t u = t;
      while (u < f.size() && f[u] == f[t]) ++u;
      if (f[t] >= 0) {
        std::snprintf(buf, sizeof buf, "<rect x=\"%.2f\" y=\"%.1f\" width=\"%.2f\" height=\"%.1f\" fill=\"%s\"/>\n",
                      label_w + fw * static_cast<double>(t), y, fw * static_cast<double>(u - t), row_h,
                      color(f[t]).c_str());
        os << buf;
      }
      t = u;
    }
  }
  for (std::size_t c = 0; c < class_names.size(); ++c) {
    const double x = 4.0 + static_cast<double>(c % 4) * 200.0;
    const double y = legend_y + static_cast<double>(c / 4) * 20.0;
    std::snprintf(buf, sizeof buf, "<rect x=\"%.1f\" y=\"%.1f\" width=\"12\" height=\"12\" fill=\"%s\"/>", x, y,
                  color(static_cast<int>(c)).c_str());
    os << buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\">", x + 16.0, y + 10.0);
    os << buf << escape(class_names[c]) << "</text>\n";
  }
  os << "</svg>\n";
}

}  // namespace gvhoi

#include "embeval/plots.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "embeval/error.hpp"
#include "embeval/results_io.hpp"

namespace embeval {

std::string plot_label(double v) {
  std::string s = fmt::format("{:.4f}", v);
  while (s.back() == '0') s.pop_back();
  if (s.back() == '.') s.pop_back();
  if (s == "-0") s = "0";
  return s;
}

namespace {

std::string escape(std::string_view text) {
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

class Svg {
 public:
  Svg(double w, double h) {
    body_ = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
        "viewBox=\"0 0 {0} {1}\" font-family=\"sans-serif\" font-size=\"11\">\n"
        "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
        w, h);
  }

  void raw(const std::string& s) { body_ += s; }

  void text(double x, double y, std::string_view s, std::string_view anchor = "middle",
            std::string_view cls = "", double rotate = 0.0) {
    std::string attrs = fmt::format("x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"{}\"", x, y, anchor);
    if (!cls.empty()) attrs += fmt::format(" class=\"{}\"", cls);
    if (rotate != 0.0) attrs += fmt::format(" transform=\"rotate({} {:.1f} {:.1f})\"", rotate, x, y);
    body_ += fmt::format("<text {}>{}</text>\n", attrs, escape(s));
  }

  void line(double x1, double y1, double x2, double y2, std::string_view stroke,
            std::string_view extra = "") {
    body_ += fmt::format(
        "<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" stroke=\"{}\" {}/>\n", x1,
        y1, x2, y2, stroke, extra);
  }

  void rect(double x, double y, double w, double h, std::string_view fill, std::string_view cls) {
    body_ += fmt::format(
        "<rect class=\"{}\" x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" "
        "fill=\"{}\"/>\n",
        cls, x, y, w, h, fill);
  }

  std::string finish() const { return body_ + "</svg>\n"; }

 private:
  std::string body_;
};

PlotFiles files(const std::filesystem::path& dir, const std::string& stem) {
  return {dir / (stem + ".svg"), dir / (stem + ".csv")};
}

}  // namespace

PlotFiles plot_deltas(const std::vector<DeltaSummary>& deltas, double pair_scale,
                      const std::filesystem::path& dir, const std::string& stem) {
  struct Bar {
    std::string encoder;
    std::string series;
    std::string label;
    double value;
  };
  std::vector<Bar> bars;
  for (const auto& d : deltas) {
    if (d.transfer_pp) bars.push_back({d.encoder, "transfer", plot_label(*d.transfer_pp), 0});
    if (d.pair_pp) bars.push_back({d.encoder, "pair", plot_label(*d.pair_pp), 0});
  }
  if (bars.empty()) throw Error("plot_deltas: nothing to plot");
  for (auto& b : bars) b.value = std::stod(b.label);

  const std::string scale = plot_label(pair_scale);
  std::string csv = "encoder,series,scale,delta_pp\n";
  for (const auto& b : bars) {
    csv += fmt::format("{},{},{},{}\n", csv_field(b.encoder), b.series,
                       b.series == "pair" ? scale : "1", b.label);
  }

  double lo = 0.0, hi = 0.0;
  for (const auto& b : bars) {
    lo = std::min(lo, b.value);
    hi = std::max(hi, b.value);
  }
  if (hi - lo <= 0.0) hi = lo + 1.0;
  const double bar_w = 24.0, gap = 10.0, left = 40.0, top = 40.0, plot_h = 240.0;
  const double width = left * 2 + static_cast<double>(bars.size()) * (bar_w + gap);
  const double height = top + plot_h + 130.0;
  auto y_of = [&](double v) { return top + (hi - v) / (hi - lo) * plot_h; };

  Svg svg(width, height);
  svg.text(width / 2, 20, "normalized minus standard (pp)");
  const double zero = y_of(0.0);
  double x = left;
  for (const auto& b : bars) {
    const double y = y_of(b.value);
    const char* fill = b.series == "pair" ? "#d95f02" : "#1b9e77";
    svg.rect(x, std::min(y, zero), bar_w, std::abs(zero - y), fill, "bar");
    svg.text(x + bar_w / 2, b.value >= 0 ? y - 4 : y + 12, b.label, "middle", "value");
    svg.text(x + bar_w / 2, top + plot_h + 12, b.encoder, "end", "", -60);
    x += bar_w + gap;
  }
  svg.line(left - 5, zero, x, zero, "black");
  const bool any_pair = std::any_of(bars.begin(), bars.end(), [](const Bar& b) { return b.series == "pair"; });
  const bool any_transfer = std::any_of(bars.begin(), bars.end(), [](const Bar& b) { return b.series == "transfer"; });
  double ly = height - 12;
  if (any_transfer) {
    svg.rect(left, ly - 9, 10, 10, "#1b9e77", "legend");
    svg.text(left + 14, ly, "transfer tasks", "start");
    ly -= 14;
  }
  if (any_pair) {
    svg.rect(left, ly - 9, 10, 10, "#d95f02", "legend");
    svg.text(left + 14, ly, pair_scale == 1.0 ? "sentence pairs" : "sentence pairs x" + scale,
             "start");
  }

  const auto out = files(dir, stem);
  write_text(out.csv, csv);
  write_text(out.svg, svg.finish());
  return out;
}

PlotFiles plot_sweep(const SizeSweep& sweep, const std::filesystem::path& dir,
                     const std::string& stem) {
  if (sweep.curve.empty()) throw Error("plot_sweep: nothing to plot");
  struct Pt {
    std::size_t size;
    std::string label;
    double value;
  };
  std::vector<Pt> curve;
  for (const auto& p : sweep.curve) {
    const auto l = plot_label(p.mean_score);
    curve.push_back({p.size, l, std::stod(l)});
  }
  std::vector<Pt> refs;
  std::string csv = "series,size,score\n";
  for (const auto& p : curve) csv += fmt::format("mean,{},{}\n", p.size, p.label);
  for (const auto& r : sweep.references) {
    const auto l = plot_label(r.mean_score);
    refs.push_back({r.size, l, std::stod(l)});
    csv += fmt::format("{},{},{}\n", csv_field(r.encoder), r.size, l);
  }

  double lo = curve.front().value, hi = lo;
  for (const auto* set : {&curve, &refs}) {
    for (const auto& p : *set) {
      lo = std::min(lo, p.value);
      hi = std::max(hi, p.value);
    }
  }
  if (hi - lo <= 0.0) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.1 * (hi - lo);
  lo -= pad;
  hi += pad;
  const double xmin = static_cast<double>(curve.front().size);
  double xmax = static_cast<double>(curve.back().size);
  if (xmax <= xmin) xmax = xmin + 1.0;
  const double left = 60, right = 170, top = 40, plot_w = 420, plot_h = 260;
  auto x_of = [&](double s) {
    return curve.size() == 1 ? left + plot_w / 2 : left + (s - xmin) / (xmax - xmin) * plot_w;
  };
  auto y_of = [&](double v) { return top + (hi - v) / (hi - lo) * plot_h; };

  Svg svg(left + plot_w + right, top + plot_h + 60);
  svg.text(left + plot_w / 2, 20, "mean score against embedding size");
  svg.line(left, top + plot_h, left + plot_w, top + plot_h, "black");
  svg.line(left, top, left, top + plot_h, "black");
  svg.text(left + plot_w / 2, top + plot_h + 44, "embedding size");

  std::string path;
  for (const auto& p : curve) {
    path += fmt::format("{}{:.1f},{:.1f}", path.empty() ? "" : " ",
                        x_of(static_cast<double>(p.size)), y_of(p.value));
  }
  svg.raw(fmt::format("<polyline class=\"curve\" points=\"{}\" fill=\"none\" stroke=\"#1b9e77\" "
                      "stroke-width=\"2\"/>\n",
                      path));
  for (const auto& p : curve) {
    const double x = x_of(static_cast<double>(p.size));
    const double y = y_of(p.value);
    svg.raw(fmt::format("<circle class=\"point\" cx=\"{:.1f}\" cy=\"{:.1f}\" r=\"3\" "
                        "fill=\"#1b9e77\"/>\n",
                        x, y));
    svg.text(x, y - 7, p.label, "middle", "value");
    svg.text(x, top + plot_h + 16, std::to_string(p.size), "middle", "value");
  }
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const double y = y_of(refs[i].value);
    svg.line(left, y, left + plot_w, y, "#7570b3", "stroke-dasharray=\"4 3\" class=\"reference\"");
    svg.text(left + plot_w + 6, y + 4,
             fmt::format("{} ({}d): {}", sweep.references[i].encoder, refs[i].size, refs[i].label),
             "start", "value");
  }

  const auto out = files(dir, stem);
  write_text(out.csv, csv);
  write_text(out.svg, svg.finish());
  return out;
}

PlotFiles plot_heatmap(const CorrelationReport& report, const std::filesystem::path& dir,
                       const std::string& stem) {
  if (report.transfer.empty() || report.probing.empty()) {
    throw Error("plot_heatmap: nothing to plot");
  }
  auto label = [](const std::optional<double>& v) { return v ? plot_label(*v) : std::string(); };
  auto color = [](const std::optional<double>& v) -> std::string {
    if (!v) return "#dddddd";
    const double t = std::clamp(*v, -1.0, 1.0);
    const int fade = static_cast<int>(std::lround(255.0 * (1.0 - std::abs(t))));
    return t >= 0 ? fmt::format("rgb(255,{0},{0})", fade) : fmt::format("rgb({0},{0},255)", fade);
  };

  std::string csv = "row,column,rho\n";
  for (std::size_t t = 0; t < report.transfer.size(); ++t) {
    for (std::size_t p = 0; p < report.probing.size(); ++p) {
      csv += fmt::format("{},{},{}\n", csv_field(report.transfer[t]), csv_field(report.probing[p]),
                         label(report.rho[t][p]));
    }
  }
  for (std::size_t p = 0; p < report.probing.size(); ++p) {
    csv += fmt::format("average,{},{}\n", csv_field(report.probing[p]),
                       label(report.probing_average[p]));
  }
  csv += fmt::format("average,all,{}\n", label(report.grand_mean));

  const double cell = 60, left = 130, top = 120;
  const double width = std::max(left + cell * static_cast<double>(report.probing.size()) + 20,
                                left + 260.0);
  const double height = top + cell * static_cast<double>(report.transfer.size() + 1) + 40;
  Svg svg(width, height);
  svg.text(left, 20, "Spearman correlation, transfer x probing", "start");
  for (std::size_t p = 0; p < report.probing.size(); ++p) {
    svg.text(left + cell * (static_cast<double>(p) + 0.5), top - 8, report.probing[p], "start", "",
             -60);
  }
  auto draw_row = [&](std::size_t r, const std::string& name,
                      const std::vector<std::optional<double>>& values, const char* cls) {
    const double y = top + cell * static_cast<double>(r);
    svg.text(left - 6, y + cell / 2 + 4, name, "end");
    for (std::size_t p = 0; p < values.size(); ++p) {
      const double x = left + cell * static_cast<double>(p);
      svg.rect(x, y, cell, cell, color(values[p]), cls);
      svg.text(x + cell / 2, y + cell / 2 + 4, values[p] ? label(values[p]) : "n/a", "middle",
               values[p] ? "value" : "");
    }
  };
  for (std::size_t t = 0; t < report.transfer.size(); ++t) {
    draw_row(t, report.transfer[t], report.rho[t], "cell");
  }
  draw_row(report.transfer.size(), "average", report.probing_average, "average");
  svg.text(left, height - 14,
           report.grand_mean ? "grand mean " + label(report.grand_mean) : "grand mean n/a", "start",
           report.grand_mean ? "value" : "");

  const auto out = files(dir, stem);
  write_text(out.csv, csv);
  write_text(out.svg, svg.finish());
  return out;
}

}  // namespace embeval

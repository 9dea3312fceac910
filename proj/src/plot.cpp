#include "adasim/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace adasim {

Color series_color(int index) {
  static const Color palette[] = {
      {31, 119, 180}, {255, 127, 14}, {44, 160, 44}, {214, 39, 40}, {148, 103, 189},
  };
  return palette[index % (sizeof(palette) / sizeof(palette[0]))];
}

namespace {

constexpr Color kBlack{0, 0, 0};
constexpr Color kGrid{225, 225, 225};
constexpr Color kWhite{255, 255, 255};

struct Axes {
  int x0, y0, x1, y1;  // plot rectangle, y grows downward
  double xmin, xmax, ymin, ymax;

  int px(double x) const {
    return x0 + static_cast<int>(std::lround((x - xmin) / (xmax - xmin) * (x1 - x0)));
  }
  int py(double y) const {
    return y1 - static_cast<int>(std::lround((y - ymin) / (ymax - ymin) * (y1 - y0)));
  }
};

std::string format_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

// Round tick spacing to 1/2/5 times a power of ten.
double nice_step(double span, int target_ticks) {
  const double raw = span / std::max(1, target_ticks);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (raw <= m * mag) return m * mag;
  return 10.0 * mag;
}

void draw_frame(ImageRGB& img, const Axes& ax, const std::string& title,
                const std::string& xlabel, const std::string& ylabel, bool x_grid = true) {
  draw_text(img, (img.width - text_width(title)) / 2, 8, title, kBlack);
  draw_text(img, (img.width - text_width(xlabel)) / 2, img.height - 14, xlabel, kBlack);
  draw_text(img, 6, ax.y0 - 14, ylabel, kBlack);

  const double ystep = nice_step(ax.ymax - ax.ymin, 6);
  for (double v = std::ceil(ax.ymin / ystep) * ystep; v <= ax.ymax + 1e-12; v += ystep) {
    const int y = ax.py(v);
    draw_line(img, ax.x0, y, ax.x1, y, kGrid);
    const std::string label = format_tick(v);
    draw_text(img, ax.x0 - 6 - text_width(label), y - 3, label, kBlack);
  }
  if (x_grid) {
    const double xstep = nice_step(ax.xmax - ax.xmin, 8);
    for (double v = std::ceil(ax.xmin / xstep) * xstep; v <= ax.xmax + 1e-12; v += xstep) {
      const int x = ax.px(v);
      draw_line(img, x, ax.y0, x, ax.y1, kGrid);
      const std::string label = format_tick(v);
      draw_text(img, x - text_width(label) / 2, ax.y1 + 6, label, kBlack);
    }
  }
  draw_line(img, ax.x0, ax.y0, ax.x0, ax.y1, kBlack);
  draw_line(img, ax.x0, ax.y1, ax.x1, ax.y1, kBlack);
}

void draw_legend(ImageRGB& img, const Axes& ax, const std::vector<std::string>& labels) {
  int w = 0;
  for (const std::string& l : labels) w = std::max(w, text_width(l));
  const int x = ax.x1 - w - 26;
  int y = ax.y0 + 6;
  for (size_t s = 0; s < labels.size(); ++s) {
    fill_rect(img, x, y + 1, x + 14, y + 5, series_color(static_cast<int>(s)));
    draw_text(img, x + 20, y, labels[s], kBlack);
    y += 12;
  }
}

}  // namespace

void plot_lines(const std::string& path, const std::string& title, const std::string& xlabel,
                const std::string& ylabel, const std::vector<PlotSeries>& series, int width,
                int height) {
  if (series.empty()) throw std::invalid_argument("plot_lines: no series");
  ImageRGB img(width, height);
  Axes ax{64, 28, width - 20, height - 44, 0, 1, 0, 1};

  ax.xmin = ax.ymin = std::numeric_limits<double>::infinity();
  ax.xmax = ax.ymax = -std::numeric_limits<double>::infinity();
  for (const PlotSeries& s : series)
    for (size_t i = 0; i < s.x.size(); ++i) {
      const double b = s.band.empty() ? 0.0 : s.band[i];
      ax.xmin = std::min(ax.xmin, s.x[i]);
      ax.xmax = std::max(ax.xmax, s.x[i]);
      ax.ymin = std::min(ax.ymin, s.y[i] - b);
      ax.ymax = std::max(ax.ymax, s.y[i] + b);
    }
  if (!(ax.xmax > ax.xmin)) ax.xmax = ax.xmin + 1;
  const double pad = 0.07 * (ax.ymax - ax.ymin + 1e-9);
  ax.ymin -= pad;
  ax.ymax += pad;

  draw_frame(img, ax, title, xlabel, ylabel);

  for (size_t s = 0; s < series.size(); ++s) {
    const PlotSeries& ps = series[s];
    const Color c = series_color(static_cast<int>(s));
    const Color band_c = mix(kWhite, c, 0.25);
    if (!ps.band.empty()) {
      for (size_t i = 0; i + 1 < ps.x.size(); ++i) {
        const int xa = ax.px(ps.x[i]), xb = ax.px(ps.x[i + 1]);
        for (int x = xa; x <= xb; ++x) {
          const double t = xb > xa ? static_cast<double>(x - xa) / (xb - xa) : 0.0;
          const double lo = (1 - t) * (ps.y[i] - ps.band[i]) + t * (ps.y[i + 1] - ps.band[i + 1]);
          const double hi = (1 - t) * (ps.y[i] + ps.band[i]) + t * (ps.y[i + 1] + ps.band[i + 1]);
          for (int y = ax.py(hi); y <= ax.py(lo); ++y) {
            const Color prev = img.get(x, y);
            // Keep grid/axes visible underneath by mixing instead of painting.
            img.set(x, y, mix(prev, band_c, 0.6));
          }
        }
      }
    }
    for (size_t i = 0; i + 1 < ps.x.size(); ++i) {
      draw_line(img, ax.px(ps.x[i]), ax.py(ps.y[i]), ax.px(ps.x[i + 1]), ax.py(ps.y[i + 1]), c);
      draw_line(img, ax.px(ps.x[i]), ax.py(ps.y[i]) + 1, ax.px(ps.x[i + 1]),
                ax.py(ps.y[i + 1]) + 1, c);
    }
    for (size_t i = 0; i < ps.x.size(); ++i)
      fill_rect(img, ax.px(ps.x[i]) - 2, ax.py(ps.y[i]) - 2, ax.px(ps.x[i]) + 2,
                ax.py(ps.y[i]) + 2, c);
  }

  std::vector<std::string> labels;
  for (const PlotSeries& s : series) labels.push_back(s.label);
  draw_legend(img, ax, labels);
  write_png(img, path);
}

void plot_bars(const std::string& path, const std::string& title, const std::string& ylabel,
               const std::vector<std::string>& group_labels,
               const std::vector<std::string>& series_labels,
               const std::vector<std::vector<double>>& values, int width, int height) {
  if (values.size() != series_labels.size())
    throw std::invalid_argument("plot_bars: series/values mismatch");
  const int n_groups = static_cast<int>(group_labels.size());
  const int n_series = static_cast<int>(series_labels.size());

  ImageRGB img(width, height);
  Axes ax{64, 28, width - 20, height - 44, 0, static_cast<double>(n_groups), 0, 1};
  ax.ymin = 0.0;
  ax.ymax = 0.0;
  for (const auto& row : values)
    for (double v : row)
      if (std::isfinite(v)) {
        ax.ymin = std::min(ax.ymin, v);
        ax.ymax = std::max(ax.ymax, v);
      }
  if (ax.ymax == ax.ymin) ax.ymax = ax.ymin + 1;
  const double pad = 0.1 * (ax.ymax - ax.ymin);
  if (ax.ymin < 0) ax.ymin -= pad;
  ax.ymax += pad;

  draw_frame(img, ax, title, "", ylabel, /*x_grid=*/false);

  const double group_w = static_cast<double>(ax.x1 - ax.x0) / std::max(1, n_groups);
  const double bar_w = group_w / (n_series + 1);
  const int y_zero = ax.py(0.0);
  for (int g = 0; g < n_groups; ++g) {
    for (int s = 0; s < n_series; ++s) {
      const double v = values[s][g];
      if (!std::isfinite(v)) continue;
      const int xa = ax.x0 + static_cast<int>(g * group_w + (s + 0.5) * bar_w);
      const int xb = xa + static_cast<int>(bar_w) - 2;
      fill_rect(img, xa, std::min(y_zero, ax.py(v)), xb, std::max(y_zero, ax.py(v)),
                series_color(s));
    }
    const int cx = ax.x0 + static_cast<int>((g + 0.5) * group_w);
    draw_text(img, cx - text_width(group_labels[g]) / 2, ax.y1 + 6, group_labels[g], kBlack);
  }
  draw_line(img, ax.x0, y_zero, ax.x1, y_zero, kBlack);
  draw_legend(img, ax, series_labels);
  write_png(img, path);
}

void plot_heatmap(const std::string& path, const std::string& title, int nx, int ny,
                  const std::vector<double>& values, const std::vector<char>& mask, int cell) {
  if (static_cast<int>(values.size()) != nx * ny)
    throw std::invalid_argument("plot_heatmap: value count does not match the grid");
  const int top = 22;
  ImageRGB img(nx * cell, ny * cell + top, {16, 16, 24});
  draw_text(img, 4, 6, title, kWhite);

  double vmax = 0.0;
  for (double v : values) vmax = std::max(vmax, v);
  const double denom = std::log1p(vmax > 0 ? vmax : 1.0);

  const Color cold{30, 30, 60}, warm{255, 140, 0}, hot{255, 255, 220}, wall{90, 100, 120};
  for (int y = 0; y < ny; ++y) {
    for (int x = 0; x < nx; ++x) {
      const int i = y * nx + x;
      Color c = cold;
      if (!mask.empty() && mask[i]) {
        c = wall;
      } else if (values[i] > 0.0) {
        const double t = std::log1p(values[i]) / denom;
        c = t < 0.5 ? mix(cold, warm, t * 2) : mix(warm, hot, (t - 0.5) * 2);
      }
      // Image rows run top-down; world y grows upward.
      fill_rect(img, x * cell, top + (ny - 1 - y) * cell, x * cell + cell - 1,
                top + (ny - 1 - y) * cell + cell - 1, c);
    }
  }
  write_png(img, path);
}

}  // namespace adasim

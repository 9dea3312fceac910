#pragma once

#include <string>
#include <vector>

#include "adasim/image.hpp"

namespace adasim {

// Fixed qualitative palette (cycled when there are more series).
Color series_color(int index);

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> band;  // half-width around y (e.g. std); empty = no band
};

// Line plot with optional shaded bands and a legend.
void plot_lines(const std::string& path, const std::string& title, const std::string& xlabel,
                const std::string& ylabel, const std::vector<PlotSeries>& series, int width = 800,
                int height = 500);

/// Grouped bar chart: one cluster per group, one bar per series within it.
// NaN values leave a gap (absent bar).
void plot_bars(const std::string& path, const std::string& title, const std::string& ylabel,
               const std::vector<std::string>& group_labels,
               const std::vector<std::string>& series_labels,
               const std::vector<std::vector<double>>& values,  // [series][group]
               int width = 800, int height = 500);

// Top-down heat map of per-cell scalar values (row-major, ny rows of nx),
// scaled by `cell` pixels per cell, with an optional mask drawn on top (e.g.
// the occupied footprint). Values are log-scaled into a dark-to-bright ramp.
void plot_heatmap(const std::string& path, const std::string& title, int nx, int ny,
                  const std::vector<double>& values, const std::vector<char>& mask = {},
                  int cell = 6);

}  // namespace adasim

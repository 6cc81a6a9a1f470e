#ifndef LIDARTRAJ_PLOT_H_
#define LIDARTRAJ_PLOT_H_

#include <span>
#include <string>
#include <vector>

#include "lidartraj/box.h"
#include "lidartraj/geometry.h"
#include "lidartraj/metrics.h"

namespace lidartraj {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

// Polyline chart with axes, ticks and a legend. Deterministic text.
std::string SvgLineChart(std::span<const Series> series, const std::string& title,
                         const std::string& x_label, const std::string& y_label);

struct ScatterLayer {
  std::string name;
  std::vector<Vec3> points;  // only x and y are drawn
  std::string color;
};

// Bird's-eye scatter of point layers plus box outlines (green labels, red
// detections), square aspect.
std::string SvgBevScatter(std::span<const ScatterLayer> layers, std::span<const Box3D> labels,
                          std::span<const Detection> detections, const std::string& title);

// Long-format CSV: series,x,y.
std::string SeriesCsv(std::span<const Series> series);

Series PrSeries(const std::string& name, const ApResult& result);

}  // namespace lidartraj

#endif  // LIDARTRAJ_PLOT_H_

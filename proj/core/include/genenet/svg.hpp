// Tiny SVG scatter writer for embeddings/projections colored by class.

#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "genenet/cancer_type.hpp"

namespace genenet {

// Plots the first two columns of coords; one fixed color per cancer type.
void write_scatter_svg(const Eigen::MatrixXd& coords,
                       const std::vector<CancerType>& labels,
                       const std::string& title, const std::string& path,
                       int width = 760, int height = 560);

}  // namespace genenet

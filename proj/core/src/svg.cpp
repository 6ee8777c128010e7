#include "genenet/svg.hpp"

#include <fstream>
#include <stdexcept>

namespace genenet {

namespace {

const char* type_color(CancerType t) {
  switch (t) {
    case CancerType::BRCA: return "#e6b400";
    case CancerType::COAD: return "#2ca02c";
    case CancerType::KIRC: return "#17becf";
    case CancerType::LUAD: return "#9467bd";
    case CancerType::PRAD: return "#1f77b4";
  }
  return "#000000";
}

}  // namespace

void write_scatter_svg(const Eigen::MatrixXd& coords,
                       const std::vector<CancerType>& labels,
                       const std::string& title, const std::string& path,
                       int width, int height) {
  if (coords.cols() < 2) throw std::invalid_argument("scatter needs >= 2 columns");
  if (static_cast<Eigen::Index>(labels.size()) != coords.rows()) {
    throw std::invalid_argument("labels/coords size mismatch");
  }
  const double margin = 44.0;
  double xmin = coords.col(0).minCoeff(), xmax = coords.col(0).maxCoeff();
  double ymin = coords.col(1).minCoeff(), ymax = coords.col(1).maxCoeff();
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) ymax = ymin + 1.0;
  const double sx = (width - 2 * margin) / (xmax - xmin);
  const double sy = (height - 2 * margin) / (ymax - ymin);

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << margin << "\" y=\"24\" font-family=\"sans-serif\" "
         "font-size=\"15\">"
      << title << "</text>\n";
  for (Eigen::Index i = 0; i < coords.rows(); ++i) {
    const double px = margin + (coords(i, 0) - xmin) * sx;
    const double py = height - margin - (coords(i, 1) - ymin) * sy;
    out << "<circle cx=\"" << px << "\" cy=\"" << py
        << "\" r=\"2.6\" fill=\"" << type_color(labels[i]) << "\" fill-opacity=\"0.72\"/>\n";
  }
  double lx = width - margin - 86.0;
  double ly = margin;
  for (CancerType t : all_cancer_types()) {
    out << "<circle cx=\"" << lx << "\" cy=\"" << ly << "\" r=\"4\" fill=\""
        << type_color(t) << "\"/>\n"
        << "<text x=\"" << lx + 10 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << to_string(t)
        << "</text>\n";
    ly += 18.0;
  }
  out << "</svg>\n";
}

}  // namespace genenet

#pragma once

#include "svmrk/elasticity.hpp"
#include "svmrk/image.hpp"
#include "svmrk/quadrature.hpp"
#include "svmrk/rk.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace svmrk {

/// Shortest round-trip decimal form of a double.
std::string format_number(double v);

/// Columns x, (y,) role, score, support, then the normal on interface rows only.
void write_nodeset_csv(const NodeSet& nodes, const std::filesystem::path& path);

/// Columns i, j, x, y, score over the pixel centroids.
void write_score_grid_csv(const ImageGrid& img, const std::vector<double>& scores, const std::filesystem::path& path);

/// Columns x, y, tag, ux, uy, exx, eyy, gxy, sxx, syy, sxy.
void write_fields_csv(const std::vector<FieldSample>& fields, const std::filesystem::path& path);

/// Legacy-VTK ASCII polygons with the material tag per cell, plus strains when given.
void write_cells_vtk(const SmoothingCellComplex& cells, const std::filesystem::path& path,
                     const std::vector<FieldSample>* fields = nullptr);

/// Legacy-VTK ASCII point cloud with displacement, strain and stress.
void write_points_vtk(const std::vector<FieldSample>& fields, const std::filesystem::path& path);

}  // namespace svmrk

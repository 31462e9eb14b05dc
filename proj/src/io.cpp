#include "svmrk/io.hpp"

#include <charconv>
#include <fstream>

namespace svmrk {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  return out;
}

void close_out(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

}  // namespace

std::string format_number(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void write_nodeset_csv(const NodeSet& nodes, const std::filesystem::path& path) {
  auto out = open_out(path);
  const bool two = nodes.dim == 2;
  out << (two ? "x,y,role,score,support,nx,ny\n" : "x,role,score,support,nx\n");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    out << format_number(nodes.x[i](0)) << ',';
    if (two) out << format_number(nodes.x[i](1)) << ',';
    out << to_string(nodes.role[i]) << ',' << format_number(nodes.score[i]) << ',' << format_number(nodes.support[i]);
    if (nodes.role[i] == NodeRole::Interface) {
      out << ',' << format_number(nodes.normal[i](0));
      if (two) out << ',' << format_number(nodes.normal[i](1));
    } else {
      out << (two ? ",," : ",");
    }
    out << '\n';
  }
  close_out(out, path);
}

void write_score_grid_csv(const ImageGrid& img, const std::vector<double>& scores, const std::filesystem::path& path) {
  if (scores.size() != img.size()) throw Error("one score per pixel required");
  auto out = open_out(path);
  out << "i,j,x,y,score\n";
  std::size_t k = 0;
  for (int j = 0; j < img.extent[1]; ++j) {
    for (int i = 0; i < img.extent[0]; ++i, ++k) {
      const Vec2 c = img.centroid(i, j);
      out << i << ',' << j << ',' << format_number(c(0)) << ',' << format_number(c(1)) << ','
          << format_number(scores[k]) << '\n';
    }
  }
  close_out(out, path);
}

void write_fields_csv(const std::vector<FieldSample>& fields, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "x,y,tag,ux,uy,exx,eyy,gxy,sxx,syy,sxy\n";
  for (const auto& f : fields) {
    out << format_number(f.x(0)) << ',' << format_number(f.x(1)) << ',' << f.tag << ',' << format_number(f.u(0)) << ','
        << format_number(f.u(1));
    for (int k = 0; k < 3; ++k) out << ',' << format_number(f.strain(k));
    for (int k = 0; k < 3; ++k) out << ',' << format_number(f.stress(k));
    out << '\n';
  }
  close_out(out, path);
}

void write_cells_vtk(const SmoothingCellComplex& cx, const std::filesystem::path& path,
                     const std::vector<FieldSample>* fields) {
  if (fields && fields->size() != cx.cells.size()) throw Error("one field sample per cell required");
  auto out = open_out(path);
  std::size_t npts = 0, nidx = 0;
  for (const auto& c : cx.cells) {
    npts += c.polygon.size();
    nidx += c.polygon.size() + 1;
  }
  out << "# vtk DataFile Version 3.0\nsmoothing cells\nASCII\nDATASET POLYDATA\n";
  out << "POINTS " << npts << " double\n";
  for (const auto& c : cx.cells) {
    for (const auto& p : c.polygon) out << format_number(p(0)) << ' ' << format_number(p(1)) << " 0\n";
  }
  out << "POLYGONS " << cx.cells.size() << ' ' << nidx << '\n';
  std::size_t base = 0;
  for (const auto& c : cx.cells) {
    out << c.polygon.size();
    for (std::size_t k = 0; k < c.polygon.size(); ++k) out << ' ' << base + k;
    out << '\n';
    base += c.polygon.size();
  }
  out << "CELL_DATA " << cx.cells.size() << "\nSCALARS tag int 1\nLOOKUP_TABLE default\n";
  for (const auto& c : cx.cells) out << c.tag << '\n';
  if (fields) {
    const char* names[] = {"exx", "eyy", "gxy"};
    for (int k = 0; k < 3; ++k) {
      out << "SCALARS " << names[k] << " double 1\nLOOKUP_TABLE default\n";
      for (const auto& f : *fields) out << format_number(f.strain(k)) << '\n';
    }
  }
  close_out(out, path);
}

void write_points_vtk(const std::vector<FieldSample>& fields, const std::filesystem::path& path) {
  auto out = open_out(path);
  const std::size_t n = fields.size();
  out << "# vtk DataFile Version 3.0\nfield samples\nASCII\nDATASET POLYDATA\n";
  out << "POINTS " << n << " double\n";
  for (const auto& f : fields) out << format_number(f.x(0)) << ' ' << format_number(f.x(1)) << " 0\n";
  out << "VERTICES " << n << ' ' << 2 * n << '\n';
  for (std::size_t i = 0; i < n; ++i) out << "1 " << i << '\n';
  out << "POINT_DATA " << n << "\nSCALARS tag int 1\nLOOKUP_TABLE default\n";
  for (const auto& f : fields) out << f.tag << '\n';
  out << "VECTORS u double\n";
  for (const auto& f : fields) out << format_number(f.u(0)) << ' ' << format_number(f.u(1)) << " 0\n";
  const char* names[] = {"exx", "eyy", "gxy", "sxx", "syy", "sxy"};
  for (int k = 0; k < 6; ++k) {
    out << "SCALARS " << names[k] << " double 1\nLOOKUP_TABLE default\n";
    for (const auto& f : fields) out << format_number(k < 3 ? f.strain(k) : f.stress(k - 3)) << '\n';
  }
  close_out(out, path);
}

}  // namespace svmrk

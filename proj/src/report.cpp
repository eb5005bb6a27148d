#include "metaemb/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace metaemb {

std::string format_rho(double rho_scaled) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", rho_scaled);
  return buf;
}

namespace {

std::string format_delta(double delta) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.2f", delta);
  return buf;
}

std::string render_table(const Grid& grid,
                         const std::vector<std::vector<std::string>>& cells) {
  std::size_t label_w = 5;  // "table"
  for (const auto& row : grid.rows) label_w = std::max(label_w, row.label.size());
  std::vector<std::size_t> col_w(grid.datasets.size());
  for (std::size_t c = 0; c < grid.datasets.size(); ++c) {
    col_w[c] = grid.datasets[c].size();
    for (const auto& row : cells) col_w[c] = std::max(col_w[c], row[c].size());
  }

  std::ostringstream out;
  auto pad_left = [&](const std::string& s, std::size_t w) {
    for (std::size_t i = s.size(); i < w; ++i) out << ' ';
    out << s;
  };
  out << "table";
  for (std::size_t i = 5; i < label_w; ++i) out << ' ';
  for (std::size_t c = 0; c < grid.datasets.size(); ++c) {
    out << "  ";
    pad_left(grid.datasets[c], col_w[c]);
  }
  out << '\n';
  for (std::size_t r = 0; r < grid.rows.size(); ++r) {
    out << grid.rows[r].label;
    for (std::size_t i = grid.rows[r].label.size(); i < label_w; ++i) out << ' ';
    for (std::size_t c = 0; c < grid.datasets.size(); ++c) {
      out << "  ";
      pad_left(cells[r][c], col_w[c]);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace

std::string render_grid_text(const Grid& grid) {
  std::vector<std::vector<std::string>> cells;
  cells.reserve(grid.rows.size());
  for (const auto& row : grid.rows) {
    std::vector<std::string> line;
    line.reserve(row.cells.size());
    for (const auto& cell : row.cells)
      line.push_back(cell.ok ? format_rho(cell.rho_scaled) : cell.error);
    cells.push_back(std::move(line));
  }
  return render_table(grid, cells);
}

std::string render_grid_kv(const Grid& grid) {
  std::ostringstream out;
  for (const auto& row : grid.rows) {
    for (std::size_t c = 0; c < row.cells.size(); ++c) {
      const GridCell& cell = row.cells[c];
      out << "table=" << row.label << " dataset=" << grid.datasets[c];
      if (cell.ok) {
        out << " rho=" << format_rho(cell.rho_scaled)
            << " scored=" << cell.pairs_scored << " total=" << cell.pairs_total;
        if (cell.reference) {
          out << " ref=" << format_rho(*cell.reference)
              << " delta=" << format_delta(cell.rho_scaled - *cell.reference);
        }
      } else {
        out << " error=" << cell.error;
      }
      out << '\n';
    }
  }
  return out.str();
}

std::string render_delta_text(const Grid& grid) {
  bool any = false;
  for (const auto& row : grid.rows)
    for (const auto& cell : row.cells)
      if (cell.reference) any = true;
  if (!any) return "";

  std::vector<std::vector<std::string>> cells;
  cells.reserve(grid.rows.size());
  for (const auto& row : grid.rows) {
    std::vector<std::string> line;
    for (const auto& cell : row.cells) {
      if (cell.ok && cell.reference)
        line.push_back(format_delta(cell.rho_scaled - *cell.reference));
      else
        line.push_back("-");
    }
    cells.push_back(std::move(line));
  }
  return render_table(grid, cells);
}

}  // namespace metaemb

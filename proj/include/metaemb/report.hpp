#pragma once

#include <optional>
#include <string>
#include <vector>

namespace metaemb {

struct GridCell {
  bool ok = false;
  double rho_scaled = 0.0;
  std::size_t pairs_scored = 0;
  std::size_t pairs_total = 0;
  std::string error;  // short category when !ok (e.g. coverage)
  std::optional<double> reference;
};

struct GridRow {
  std::string label;   // table name as reported
  std::string method;  // structured fields for reference lookups
  std::string loss;
  std::string target;
  std::vector<GridCell> cells;  // one per dataset, in grid order
};

struct Grid {
  std::vector<std::string> datasets;
  std::vector<GridRow> rows;
};

// Aligned-column text table; failed cells render their error category.
std::string render_grid_text(const Grid& grid);

// One machine-readable record per cell:
//   table=<label> dataset=<name> rho=<x.xx> scored=<n> total=<n>
// plus ` ref=<x.xx> delta=<+x.xx>` when a reference is present, or
//   table=<label> dataset=<name> error=<category>
std::string render_grid_kv(const Grid& grid);

// Delta table (score minus reference); blank cells where no reference.
// Empty string when the grid carries no references at all.
std::string render_delta_text(const Grid& grid);

std::string format_rho(double rho_scaled);  // fixed 2 decimals

}  // namespace metaemb

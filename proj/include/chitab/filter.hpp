#pragma once

#include <string>
#include <vector>

#include "chitab/annotation.hpp"
#include "chitab/geometry.hpp"

namespace chitab {

struct FilterConfig {
    double coverage_threshold = 0.90;
    int min_covered_columns = 2;
    double containment_eps = 0.5;  // px
};

// A spanning header cell that survived the coverage filter.
struct HeaderCell {
    BBox box;
    std::string text;
    std::vector<int> covered_columns;  // sorted ascending
};

// Indices of columns covered at >= coverage_threshold by the cell.
// Columns must be sorted by x_min. Zero-width columns are skipped and
// recorded; a non-contiguous result is flagged as annotation noise.
std::vector<int> covered_columns(const BBox& cell, const std::vector<BBox>& columns,
                                 const FilterConfig& cfg, Diagnostics& diag);

// The table's column boxes, sorted by x_min.
std::vector<BBox> table_columns(const EnrichedTable& table);

// Spanning cells covering >= min_covered_columns columns, as HeaderCells
// with aggregated text, in reading order.
std::vector<HeaderCell> qualifying_spanners(const EnrichedTable& table,
                                            const FilterConfig& cfg, Diagnostics& diag);

// True iff some pair (upper, lower) has the lower directly below with the
// upper horizontally containing it.
bool has_vertical_dependency(const std::vector<HeaderCell>& cells, double eps);

bool is_complex(const EnrichedTable& table, const FilterConfig& cfg, Diagnostics& diag);

}  // namespace chitab

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "chitab/filter.hpp"

namespace chitab {

struct HeaderNode {
    HeaderCell cell;
    int parent = -1;              // index into HeaderForest::nodes, -1 for roots
    std::vector<int> children;    // ordered by x_min
    std::vector<int> value_columns;
};

struct HeaderForest {
    std::vector<HeaderNode> nodes;  // in reading order
    std::vector<int> roots;
};

std::vector<HeaderCell> sort_reading_order(std::vector<HeaderCell> cells);

// Nearest valid parent above the child, or nullopt. Candidates must precede
// the child in reading order. A valid parent lies above, horizontally
// contains the child, is strictly wider, and sits within half the child's
// height of it.
std::optional<std::size_t> find_parent(const HeaderCell& child,
                                       const std::vector<HeaderCell>& candidates, double eps);

HeaderForest build_forest(std::vector<HeaderCell> cells, const std::vector<BBox>& columns,
                          const FilterConfig& cfg, Diagnostics& diag);

// Debug/inspection format: {table_id, nodes:[{id, text, bbox, parent_id,
// children, value_columns}]}.
std::string forest_to_json(const std::string& table_id, const HeaderForest& forest);

}  // namespace chitab

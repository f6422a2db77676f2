#include "chitab/filter.hpp"

#include <algorithm>

namespace chitab {

std::vector<int> covered_columns(const BBox& cell, const std::vector<BBox>& columns,
                                 const FilterConfig& cfg, Diagnostics& diag) {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(columns.size()); i++) {
        if (!(columns[i].width() > 0.0)) {
            diag.rejected_boxes++;
            diag.note("zero-width column #" + std::to_string(i));
            continue;
        }
        if (h_overlap_fraction(cell, columns[i]) >= cfg.coverage_threshold) {
            out.push_back(i);
        }
    }
    for (std::size_t k = 1; k < out.size(); k++) {
        if (out[k] != out[k - 1] + 1) {
            diag.noncontiguous_coverage++;
            diag.note("non-contiguous column coverage");
            break;
        }
    }
    return out;
}

std::vector<BBox> table_columns(const EnrichedTable& table) {
    std::vector<BBox> cols;
    for (const auto& e : table.elements) {
        if (e.kind == ElementKind::Column) cols.push_back(e.box);
    }
    std::sort(cols.begin(), cols.end(),
              [](const BBox& a, const BBox& b) { return a.x_min < b.x_min; });
    return cols;
}

std::vector<HeaderCell> qualifying_spanners(const EnrichedTable& table,
                                            const FilterConfig& cfg, Diagnostics& diag) {
    std::vector<BBox> columns = table_columns(table);
    std::vector<HeaderCell> kept;
    std::vector<BBox> kept_boxes;
    for (std::size_t e = 0; e < table.elements.size(); e++) {
        if (table.elements[e].kind != ElementKind::SpanningCell) continue;
        std::vector<int> covered = covered_columns(table.elements[e].box, columns, cfg, diag);
        if (static_cast<int>(covered.size()) < cfg.min_covered_columns) continue;
        HeaderCell cell;
        cell.box = table.elements[e].box;
        if (auto it = table.element_text.find(e); it != table.element_text.end()) {
            cell.text = it->second;
        }
        cell.covered_columns = std::move(covered);
        kept_boxes.push_back(cell.box);
        kept.push_back(std::move(cell));
    }
    std::vector<std::size_t> order = reading_order_boxes(kept_boxes);
    std::vector<HeaderCell> out;
    out.reserve(kept.size());
    for (std::size_t i : order) out.push_back(std::move(kept[i]));
    return out;
}

bool has_vertical_dependency(const std::vector<HeaderCell>& cells, double eps) {
    for (std::size_t u = 0; u < cells.size(); u++) {
        for (std::size_t l = 0; l < cells.size(); l++) {
            if (u == l) continue;
            const BBox& upper = cells[u].box;
            const BBox& lower = cells[l].box;
            if (upper.y_max <= lower.y_min + eps && h_contains(upper, lower, eps)) {
                return true;
            }
        }
    }
    return false;
}

bool is_complex(const EnrichedTable& table, const FilterConfig& cfg, Diagnostics& diag) {
    std::vector<HeaderCell> cells = qualifying_spanners(table, cfg, diag);
    if (cells.size() < 2) return false;
    return has_vertical_dependency(cells, cfg.containment_eps);
}

}  // namespace chitab

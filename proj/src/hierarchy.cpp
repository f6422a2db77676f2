#include "chitab/hierarchy.hpp"

#include <algorithm>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace chitab {

std::vector<HeaderCell> sort_reading_order(std::vector<HeaderCell> cells) {
    std::vector<BBox> boxes;
    boxes.reserve(cells.size());
    for (const auto& c : cells) boxes.push_back(c.box);
    std::vector<std::size_t> order = reading_order_boxes(boxes);
    std::vector<HeaderCell> out;
    out.reserve(cells.size());
    for (std::size_t i : order) out.push_back(std::move(cells[i]));
    return out;
}

std::optional<std::size_t> find_parent(const HeaderCell& child,
                                       const std::vector<HeaderCell>& candidates, double eps) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < candidates.size(); i++) {
        const BBox& c = candidates[i].box;
        const BBox& ch = child.box;
        if (!(c.y_max <= ch.y_min + eps)) continue;
        if (!h_contains(c, ch, eps)) continue;
        if (!(c.width() > ch.width())) continue;
        // Boxes of stacked header cells often overlap by sub-pixel amounts.
        double gap = std::max(0.0, ch.y_min - c.y_max);
        if (!(gap < 0.5 * ch.height())) continue;
        if (!best) {
            best = i;
            continue;
        }
        const BBox& b = candidates[*best].box;
        if (c.y_max > b.y_max) {
            best = i;  // nearest above
        } else if (c.y_max == b.y_max && c.width() < b.width()) {
            best = i;  // most specific
        }
        // Remaining ties fall to the earlier reading-order index, already held.
    }
    return best;
}

HeaderForest build_forest(std::vector<HeaderCell> cells, const std::vector<BBox>& columns,
                          const FilterConfig& cfg, Diagnostics& diag) {
    cells = sort_reading_order(std::move(cells));
    HeaderForest forest;
    forest.nodes.reserve(cells.size());
    std::vector<HeaderCell> earlier;
    for (std::size_t i = 0; i < cells.size(); i++) {
        HeaderNode node;
        node.cell = cells[i];
        node.value_columns = covered_columns(cells[i].box, columns, cfg, diag);
        auto parent = find_parent(cells[i], earlier, cfg.containment_eps);
        if (parent) {
            node.parent = static_cast<int>(*parent);
            forest.nodes[*parent].children.push_back(static_cast<int>(i));
        } else {
            forest.roots.push_back(static_cast<int>(i));
        }
        forest.nodes.push_back(std::move(node));
        earlier.push_back(cells[i]);
    }

    for (auto& node : forest.nodes) {
        std::sort(node.children.begin(), node.children.end(), [&](int a, int b) {
            return forest.nodes[a].cell.box.x_min < forest.nodes[b].cell.box.x_min;
        });
    }

    // Parents always precede children in reading order, so cycles cannot
    // form; assert anyway.
    for (std::size_t i = 0; i < forest.nodes.size(); i++) {
        if (forest.nodes[i].parent >= static_cast<int>(i)) {
            throw std::logic_error("build_forest: parent does not precede child");
        }
    }

    // Soft structural checks; violations are annotation noise, not errors.
    for (std::size_t i = 0; i < forest.nodes.size(); i++) {
        const auto& node = forest.nodes[i];
        if (node.parent >= 0) {
            const auto& pcols = forest.nodes[node.parent].value_columns;
            bool subset = std::includes(pcols.begin(), pcols.end(),
                                        node.value_columns.begin(), node.value_columns.end());
            if (!subset) diag.note("child value_columns not a subset of parent's");
        }
        for (std::size_t a = 0; a < node.children.size(); a++) {
            for (std::size_t b = a + 1; b < node.children.size(); b++) {
                const auto& ca = forest.nodes[node.children[a]].value_columns;
                const auto& cb = forest.nodes[node.children[b]].value_columns;
                std::vector<int> common;
                std::set_intersection(ca.begin(), ca.end(), cb.begin(), cb.end(),
                                      std::back_inserter(common));
                if (!common.empty()) diag.note("sibling value_columns overlap");
            }
        }
    }
    return forest;
}

std::string forest_to_json(const std::string& table_id, const HeaderForest& forest) {
    nlohmann::ordered_json j;
    j["table_id"] = table_id;
    j["nodes"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < forest.nodes.size(); i++) {
        const auto& n = forest.nodes[i];
        nlohmann::ordered_json nj;
        nj["id"] = i;
        nj["text"] = n.cell.text;
        nj["bbox"] = {n.cell.box.x_min, n.cell.box.y_min, n.cell.box.x_max, n.cell.box.y_max};
        if (n.parent >= 0) {
            nj["parent_id"] = n.parent;
        } else {
            nj["parent_id"] = nullptr;
        }
        nj["children"] = n.children;
        nj["value_columns"] = n.value_columns;
        j["nodes"].push_back(std::move(nj));
    }
    return j.dump();
}

}  // namespace chitab

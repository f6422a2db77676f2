#include "chitab/annotation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <numeric>

#include <nlohmann/json.hpp>

namespace chitab {

using ordered_json = nlohmann::ordered_json;

std::string split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Valid: return "valid";
        case Split::Test: return "test";
    }
    return "?";
}

std::optional<Split> split_from_name(std::string_view name) {
    if (name == "train") return Split::Train;
    if (name == "valid" || name == "val") return Split::Valid;
    if (name == "test") return Split::Test;
    return std::nullopt;
}

std::string element_kind_name(ElementKind k) {
    switch (k) {
        case ElementKind::Row: return "table row";
        case ElementKind::Column: return "table column";
        case ElementKind::ColumnHeader: return "table column header";
        case ElementKind::ProjectedRowHeader: return "table projected row header";
        case ElementKind::SpanningCell: return "table spanning cell";
        case ElementKind::Table: return "table";
    }
    return "?";
}

static std::optional<ElementKind> kind_from_label(std::string_view label) {
    if (label == "table row") return ElementKind::Row;
    if (label == "table column") return ElementKind::Column;
    if (label == "table column header") return ElementKind::ColumnHeader;
    if (label == "table projected row header") return ElementKind::ProjectedRowHeader;
    if (label == "table spanning cell") return ElementKind::SpanningCell;
    if (label == "table") return ElementKind::Table;
    return std::nullopt;
}

void Diagnostics::merge(const Diagnostics& other) {
    skipped_labels += other.skipped_labels;
    rejected_boxes += other.rejected_boxes;
    dropped_empty_words += other.dropped_empty_words;
    orphan_words += other.orphan_words;
    noncontiguous_coverage += other.noncontiguous_coverage;
    messages.insert(messages.end(), other.messages.begin(), other.messages.end());
}

namespace {

std::string trim(std::string_view s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string decode_entities(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size();) {
        if (s[i] == '&') {
            std::string_view rest = s.substr(i);
            if (rest.starts_with("&amp;")) { out += '&'; i += 5; continue; }
            if (rest.starts_with("&lt;")) { out += '<'; i += 4; continue; }
            if (rest.starts_with("&gt;")) { out += '>'; i += 4; continue; }
            if (rest.starts_with("&quot;")) { out += '"'; i += 6; continue; }
            if (rest.starts_with("&apos;")) { out += '\''; i += 6; continue; }
        }
        out += s[i++];
    }
    return out;
}

// Inner text of the first <tag>...</tag> inside xml[from, to).
// Returns nullopt when the open tag is absent; throws when it is unclosed.
std::optional<std::string_view> tag_text(std::string_view xml, std::string_view tag,
                                         std::size_t from, std::size_t to) {
    std::string open = "<" + std::string(tag) + ">";
    std::string close = "</" + std::string(tag) + ">";
    std::size_t b = xml.find(open, from);
    if (b == std::string_view::npos || b >= to) return std::nullopt;
    std::size_t content = b + open.size();
    std::size_t e = xml.find(close, content);
    if (e == std::string_view::npos || e > to) {
        throw ParseError("unclosed <" + std::string(tag) + ">", b);
    }
    return xml.substr(content, e - content);
}

std::optional<double> parse_number(std::string_view s) {
    std::string t = trim(s);
    if (t.empty()) return std::nullopt;
    char* end = nullptr;
    double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

}  // namespace

std::vector<StructElement> parse_structure(std::string_view xml, Diagnostics& diag) {
    std::vector<StructElement> out;
    std::size_t pos = 0;
    while (true) {
        std::size_t obj = xml.find("<object>", pos);
        if (obj == std::string_view::npos) break;
        std::size_t obj_end = xml.find("</object>", obj);
        if (obj_end == std::string_view::npos) {
            throw ParseError("unclosed <object>", obj);
        }
        auto name = tag_text(xml, "name", obj, obj_end);
        if (!name) {
            throw ParseError("<object> without <name>", obj);
        }
        std::string label = trim(decode_entities(*name));
        auto kind = kind_from_label(label);
        if (!kind) {
            diag.skipped_labels++;
            diag.note("skipped unknown label: " + label);
            pos = obj_end + 9;
            continue;
        }
        std::size_t bnd = xml.find("<bndbox>", obj);
        if (bnd == std::string_view::npos || bnd >= obj_end) {
            throw ParseError("<object> without <bndbox>", obj);
        }
        auto x1 = tag_text(xml, "xmin", bnd, obj_end);
        auto y1 = tag_text(xml, "ymin", bnd, obj_end);
        auto x2 = tag_text(xml, "xmax", bnd, obj_end);
        auto y2 = tag_text(xml, "ymax", bnd, obj_end);
        if (!x1 || !y1 || !x2 || !y2) {
            throw ParseError("incomplete <bndbox>", bnd);
        }
        auto vx1 = parse_number(*x1), vy1 = parse_number(*y1);
        auto vx2 = parse_number(*x2), vy2 = parse_number(*y2);
        if (!vx1 || !vy1 || !vx2 || !vy2) {
            diag.rejected_boxes++;
            diag.note("rejected non-numeric bndbox for label: " + label);
        } else {
            BBox box{*vx1, *vy1, *vx2, *vy2};
            if (!box.valid()) {
                diag.rejected_boxes++;
                diag.note("rejected inverted/non-finite bndbox for label: " + label);
            } else {
                out.push_back({*kind, box});
            }
        }
        pos = obj_end + 9;
    }
    return out;
}

std::vector<Word> parse_words(std::string_view json_text, Diagnostics& diag) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(e.what(), e.byte);
    }
    if (!doc.is_array()) {
        throw ParseError("word annotation root is not an array", 0);
    }
    std::vector<Word> out;
    for (const auto& entry : doc) {
        if (!entry.is_object() || !entry.contains("text") || !entry.contains("bbox") ||
            !entry["bbox"].is_array() || entry["bbox"].size() != 4) {
            diag.rejected_boxes++;
            diag.note("rejected malformed word entry");
            continue;
        }
        std::string text = trim(entry["text"].get<std::string>());
        if (text.empty()) {
            diag.dropped_empty_words++;
            continue;
        }
        double c[4];
        bool ok = true;
        for (int i = 0; i < 4; i++) {
            if (!entry["bbox"][i].is_number()) { ok = false; break; }
            c[i] = entry["bbox"][i].get<double>();
            if (!std::isfinite(c[i])) ok = false;
        }
        BBox box{c[0], c[1], c[2], c[3]};
        if (!ok || !box.valid()) {
            diag.rejected_boxes++;
            diag.note("rejected word with bad bbox: " + text);
            continue;
        }
        out.push_back({std::move(text), box});
    }
    return out;
}

std::vector<std::size_t> reading_order_boxes(const std::vector<BBox>& boxes) {
    std::vector<std::size_t> idx(boxes.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return boxes[a].center_y() < boxes[b].center_y();
    });

    // Chain consecutive (by center) boxes into lines.
    std::vector<std::vector<std::size_t>> lines;
    for (std::size_t i : idx) {
        bool same_line = false;
        if (!lines.empty()) {
            std::size_t prev = lines.back().back();
            double dy = boxes[i].center_y() - boxes[prev].center_y();
            double h = std::min(boxes[i].height(), boxes[prev].height());
            same_line = dy < 0.5 * h;
        }
        if (same_line) {
            lines.back().push_back(i);
        } else {
            lines.push_back({i});
        }
    }

    for (auto& line : lines) {
        std::sort(line.begin(), line.end());  // input order as tie base
        std::stable_sort(line.begin(), line.end(), [&](std::size_t a, std::size_t b) {
            return boxes[a].x_min < boxes[b].x_min;
        });
    }
    std::stable_sort(lines.begin(), lines.end(), [&](const auto& a, const auto& b) {
        double ta = boxes[a.front()].y_min;
        double tb = boxes[b.front()].y_min;
        for (std::size_t i : a) ta = std::min(ta, boxes[i].y_min);
        for (std::size_t i : b) tb = std::min(tb, boxes[i].y_min);
        return ta < tb;
    });

    std::vector<std::size_t> out;
    out.reserve(boxes.size());
    for (const auto& line : lines)
        for (std::size_t i : line) out.push_back(i);
    return out;
}

std::vector<std::size_t> reading_order(const std::vector<Word>& words) {
    std::vector<BBox> boxes;
    boxes.reserve(words.size());
    for (const auto& w : words) boxes.push_back(w.box);
    return reading_order_boxes(boxes);
}

std::map<std::size_t, std::vector<std::size_t>> assign_words(
    const std::vector<StructElement>& elements, const std::vector<Word>& words,
    Diagnostics& diag) {
    std::vector<std::size_t> order = reading_order(words);
    std::vector<std::size_t> rank(words.size());
    for (std::size_t r = 0; r < order.size(); r++) rank[order[r]] = r;

    std::map<std::size_t, std::vector<std::size_t>> out;
    std::vector<bool> assigned(words.size(), false);
    for (std::size_t e = 0; e < elements.size(); e++) {
        std::vector<std::size_t> hits;
        for (std::size_t w = 0; w < words.size(); w++) {
            if (intersects(elements[e].box, words[w].box)) {
                hits.push_back(w);
                assigned[w] = true;
            }
        }
        if (hits.empty()) continue;
        std::sort(hits.begin(), hits.end(),
                  [&](std::size_t a, std::size_t b) { return rank[a] < rank[b]; });
        out.emplace(e, std::move(hits));
    }
    for (std::size_t w = 0; w < words.size(); w++) {
        if (!assigned[w]) diag.orphan_words++;
    }
    return out;
}

EnrichedTable enrich(std::string table_id, Split split, std::string image_name,
                     std::vector<StructElement> elements, std::vector<Word> words,
                     Diagnostics& diag) {
    EnrichedTable t;
    t.table_id = std::move(table_id);
    t.split = split;
    t.image_name = std::move(image_name);
    t.elements = std::move(elements);
    t.words = std::move(words);
    t.assignments = assign_words(t.elements, t.words, diag);
    for (const auto& [e, ws] : t.assignments) {
        std::string text;
        for (std::size_t w : ws) {
            if (!text.empty()) text += ' ';
            text += t.words[w].text;
        }
        t.element_text.emplace(e, std::move(text));
    }
    return t;
}

static ordered_json bbox_json(const BBox& b) {
    return ordered_json::array({b.x_min, b.y_min, b.x_max, b.y_max});
}

static BBox bbox_from_json(const nlohmann::json& j) {
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

std::string serialize_enriched(const EnrichedTable& t) {
    ordered_json j;
    j["table_id"] = t.table_id;
    j["split"] = split_name(t.split);
    j["image_name"] = t.image_name;
    j["elements"] = ordered_json::array();
    for (const auto& e : t.elements) {
        ordered_json ej;
        ej["kind"] = element_kind_name(e.kind);
        ej["bbox"] = bbox_json(e.box);
        j["elements"].push_back(std::move(ej));
    }
    j["words"] = ordered_json::array();
    for (const auto& w : t.words) {
        ordered_json wj;
        wj["text"] = w.text;
        wj["bbox"] = bbox_json(w.box);
        j["words"].push_back(std::move(wj));
    }
    return j.dump();
}

EnrichedTable deserialize_enriched(std::string_view json_text) {
    nlohmann::json j = nlohmann::json::parse(json_text);
    std::vector<StructElement> elements;
    for (const auto& ej : j["elements"]) {
        auto kind = kind_from_label(ej["kind"].get<std::string>());
        if (!kind) throw ParseError("unknown element kind in enriched table", 0);
        elements.push_back({*kind, bbox_from_json(ej["bbox"])});
    }
    std::vector<Word> words;
    for (const auto& wj : j["words"]) {
        words.push_back({wj["text"].get<std::string>(), bbox_from_json(wj["bbox"])});
    }
    auto split = split_from_name(j["split"].get<std::string>());
    if (!split) throw ParseError("unknown split in enriched table", 0);
    Diagnostics diag;
    return enrich(j["table_id"].get<std::string>(), *split,
                  j["image_name"].get<std::string>(), std::move(elements), std::move(words),
                  diag);
}

}  // namespace chitab

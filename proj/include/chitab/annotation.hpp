#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chitab/geometry.hpp"

namespace chitab {

enum class Split { Train, Valid, Test };

std::string split_name(Split s);
std::optional<Split> split_from_name(std::string_view name);

enum class ElementKind { Row, Column, ColumnHeader, ProjectedRowHeader, SpanningCell, Table };

std::string element_kind_name(ElementKind k);

struct Word {
    std::string text;
    BBox box;
};

struct StructElement {
    ElementKind kind;
    BBox box;
};

// Non-fatal per-file defects, accumulated while parsing one table.
struct Diagnostics {
    int skipped_labels = 0;
    int rejected_boxes = 0;
    int dropped_empty_words = 0;
    int orphan_words = 0;
    int noncontiguous_coverage = 0;
    std::vector<std::string> messages;

    void note(std::string msg) { messages.push_back(std::move(msg)); }
    bool clean() const {
        return skipped_labels == 0 && rejected_boxes == 0 && dropped_empty_words == 0 &&
               orphan_words == 0 && noncontiguous_coverage == 0;
    }
    void merge(const Diagnostics& other);
};

// Fatal parse failure; offset is the byte position where scanning stopped.
class ParseError : public std::runtime_error {
public:
    ParseError(std::string msg, std::size_t byte_offset)
        : std::runtime_error(std::move(msg)), offset_(byte_offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

// PASCAL-VOC-like structure annotation: repeated <object> entries carrying
// a <name> label and a <bndbox> with xmin/ymin/xmax/ymax.
std::vector<StructElement> parse_structure(std::string_view xml, Diagnostics& diag);

// JSON array of {"bbox": [x1,y1,x2,y2], "text": "..."}; extra fields ignored.
std::vector<Word> parse_words(std::string_view json_text, Diagnostics& diag);

// Top-to-bottom, left-to-right. Two boxes share a line iff their vertical
// centers differ by less than half the smaller box height.
std::vector<std::size_t> reading_order_boxes(const std::vector<BBox>& boxes);
std::vector<std::size_t> reading_order(const std::vector<Word>& words);

// Word -> element assignment by positive-area intersection. Multi-assignment
// across rows/columns/cells is expected. Lists come back in reading order.
std::map<std::size_t, std::vector<std::size_t>> assign_words(
    const std::vector<StructElement>& elements, const std::vector<Word>& words,
    Diagnostics& diag);

struct EnrichedTable {
    std::string table_id;
    Split split = Split::Train;
    std::string image_name;
    std::vector<StructElement> elements;
    std::vector<Word> words;
    std::map<std::size_t, std::vector<std::size_t>> assignments;
    std::map<std::size_t, std::string> element_text;
};

EnrichedTable enrich(std::string table_id, Split split, std::string image_name,
                     std::vector<StructElement> elements, std::vector<Word> words,
                     Diagnostics& diag);

std::string serialize_enriched(const EnrichedTable& table);
EnrichedTable deserialize_enriched(std::string_view json_text);

}  // namespace chitab

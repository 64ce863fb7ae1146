#pragma once

#include "ipfsel/dataset.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ipfsel {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    static CsvTable parse(std::istream& in);
    static CsvTable read(const std::string& path);
    Index column(const std::string& name) const;  // -1 if absent
};

bool is_missing(const std::string& cell) noexcept;

enum class ColumnRole { continuous, categorical, binary };

struct ColumnRule {
    std::string name;    // exact column name, or
    std::string prefix;  // every column starting with this prefix
    ColumnRole role = ColumnRole::continuous;
    std::optional<std::string> reference;
    int modality = 1;
};

// Per-column roles and modality assignment. Exact names win over prefixes,
// prefixes over the fallback rule.
struct ClinicalSchema {
    std::string response = "y";
    std::optional<std::string> response_positive;  // level coded as 1; else y must be 0/1
    std::vector<ColumnRule> columns;
    std::optional<ColumnRule> fallback;

    static ClinicalSchema from_json_text(const std::string& text);
    static ClinicalSchema load(const std::string& path);
    const ColumnRule* rule_for(const std::string& column) const;
};

// Column encoding learned from a table: dummy indicators for categorical
// levels except the reference, pass-through otherwise.
class TableEncoder {
public:
    static TableEncoder learn(const CsvTable& table, const ClinicalSchema& schema);

    // Encodes complete rows; rows with a missing cell are dropped and
    // counted. Unknown categorical levels are an error.
    Dataset encode(const CsvTable& table, Index* dropped = nullptr) const;

    const std::vector<std::string>& feature_names() const noexcept { return names_; }

private:
    struct Source {
        std::string column;
        ColumnRole role;
        std::optional<std::string> reference;
        std::vector<std::string> levels;  // non-reference levels, one output each
        int modality;
    };
    ClinicalSchema schema_;
    std::vector<Source> sources_;  // ordered by modality, then table order
    std::vector<std::string> names_;
    std::vector<Index> modality_sizes_;
};

struct Ingested {
    Dataset dataset;
    Index rows_dropped = 0;
    TableEncoder encoder;
};

Ingested ingest_table(const CsvTable& table, const ClinicalSchema& schema);

} // namespace ipfsel

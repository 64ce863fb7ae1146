#include "ipfsel/table.hpp"

#include "ipfsel/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace ipfsel {

using nlohmann::json;

namespace {

std::vector<std::string> split_record(const std::string& line, std::istream& in) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    std::string buf = line;
    for (std::size_t i = 0;; ++i) {
        if (i == buf.size()) {
            if (quoted) {
                // Quoted field spanning lines.
                std::string more;
                if (!std::getline(in, more)) fail(ErrorKind::invalid_input, "unterminated quoted CSV field");
                buf += '\n';
                buf += more;
            } else {
                break;
            }
        }
        const char c = buf[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < buf.size() && buf[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(std::move(cur));
    return out;
}

bool parse_double(const std::string& s, double& v) {
    const char* b = s.data();
    const char* e = b + s.size();
    while (b < e && *b == ' ') ++b;
    while (e > b && e[-1] == ' ') --e;
    if (b < e && *b == '+') ++b;
    auto r = std::from_chars(b, e, v);
    return r.ec == std::errc() && r.ptr == e;
}

ColumnRole parse_role(const std::string& s) {
    if (s == "continuous") return ColumnRole::continuous;
    if (s == "categorical") return ColumnRole::categorical;
    if (s == "binary") return ColumnRole::binary;
    fail(ErrorKind::invalid_input, "unknown column role '" + s + "'");
}

ColumnRule parse_rule(const json& j) {
    require(j.is_object(), "schema column entries must be objects");
    ColumnRule r;
    if (j.contains("name")) r.name = j.at("name").get<std::string>();
    if (j.contains("prefix")) r.prefix = j.at("prefix").get<std::string>();
    if (j.contains("role")) r.role = parse_role(j.at("role").get<std::string>());
    if (j.contains("reference") && !j.at("reference").is_null()) {
        const auto& ref = j.at("reference");
        r.reference = ref.is_string() ? ref.get<std::string>() : ref.dump();
    }
    if (j.contains("modality")) r.modality = j.at("modality").get<int>();
    require(r.modality >= 1, "modality numbers start at 1");
    require(r.role != ColumnRole::categorical || r.reference.has_value(),
            "categorical column '" + r.name + r.prefix + "' needs a reference level");
    return r;
}

} // namespace

bool is_missing(const std::string& cell) noexcept {
    return cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan" || cell == "?" || cell == "null";
}

CsvTable CsvTable::parse(std::istream& in) {
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) fail(ErrorKind::invalid_input, "CSV input is empty");
    t.header = split_record(line, in);
    std::set<std::string> seen;
    for (const auto& h : t.header) require(seen.insert(h).second, "duplicate CSV column '" + h + "'");
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto rec = split_record(line, in);
        if (rec.size() != t.header.size())
            fail(ErrorKind::invalid_input, "CSV line " + std::to_string(lineno) + " has " +
                                               std::to_string(rec.size()) + " fields, expected " +
                                               std::to_string(t.header.size()));
        t.rows.push_back(std::move(rec));
    }
    return t;
}

CsvTable CsvTable::read(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::invalid_input, "cannot open '" + path + "' for reading");
    return parse(in);
}

Index CsvTable::column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<Index>(it - header.begin());
}

ClinicalSchema ClinicalSchema::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorKind::invalid_input, std::string("schema is not valid JSON: ") + e.what());
    }
    try {
        require(j.is_object(), "schema must be a JSON object");
        ClinicalSchema s;
        if (j.contains("response")) s.response = j.at("response").get<std::string>();
        if (j.contains("response_positive")) {
            const auto& v = j.at("response_positive");
            s.response_positive = v.is_string() ? v.get<std::string>() : v.dump();
        }
        if (j.contains("columns")) {
            const auto& cols = j.at("columns");
            if (cols.is_array()) {
                for (const auto& c : cols) s.columns.push_back(parse_rule(c));
            } else {
                // {"age": {...}, ...} form
                require(cols.is_object(), "schema 'columns' must be an array or object");
                for (auto it = cols.begin(); it != cols.end(); ++it) {
                    json c = it.value();
                    c["name"] = it.key();
                    s.columns.push_back(parse_rule(c));
                }
            }
        }
        for (const auto& c : s.columns)
            require(!c.name.empty() != !c.prefix.empty(), "each schema column needs exactly one of name/prefix");
        if (j.contains("default")) s.fallback = parse_rule(j.at("default"));
        return s;
    } catch (const json::exception& e) {
        fail(ErrorKind::invalid_input, std::string("malformed schema: ") + e.what());
    }
}

ClinicalSchema ClinicalSchema::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::invalid_input, "cannot open schema '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

const ColumnRule* ClinicalSchema::rule_for(const std::string& column) const {
    for (const auto& c : columns)
        if (!c.name.empty() && c.name == column) return &c;
    const ColumnRule* best = nullptr;
    for (const auto& c : columns)
        if (!c.prefix.empty() && column.rfind(c.prefix, 0) == 0 &&
            (!best || c.prefix.size() > best->prefix.size()))
            best = &c;
    if (best) return best;
    return fallback ? &*fallback : nullptr;
}

TableEncoder TableEncoder::learn(const CsvTable& table, const ClinicalSchema& schema) {
    TableEncoder enc;
    enc.schema_ = schema;
    require(table.column(schema.response) >= 0, "response column '" + schema.response + "' not in table");
    for (const auto& c : schema.columns)
        if (!c.name.empty())
            require(table.column(c.name) >= 0, "schema column '" + c.name + "' not in table");

    // Levels are learned from the rows that survive listwise deletion.
    std::vector<char> complete(table.rows.size(), 1);
    std::vector<std::pair<Index, const ColumnRule*>> used;
    for (Index k = 0; k < static_cast<Index>(table.header.size()); ++k) {
        const std::string& name = table.header[static_cast<std::size_t>(k)];
        if (name == schema.response) continue;
        const ColumnRule* rule = schema.rule_for(name);
        if (!rule) fail(ErrorKind::invalid_input, "schema does not cover column '" + name + "'");
        used.emplace_back(k, rule);
    }
    const Index ycol = table.column(schema.response);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        if (is_missing(table.rows[r][static_cast<std::size_t>(ycol)])) complete[r] = 0;
        for (const auto& [k, rule] : used)
            if (is_missing(table.rows[r][static_cast<std::size_t>(k)])) complete[r] = 0;
    }

    std::map<int, std::vector<Source>> by_modality;
    for (const auto& [k, rule] : used) {
        Source s;
        s.column = table.header[static_cast<std::size_t>(k)];
        s.role = rule->role;
        s.reference = rule->reference;
        s.modality = rule->modality;
        if (rule->role != ColumnRole::continuous) {
            std::set<std::string> levels;
            for (std::size_t r = 0; r < table.rows.size(); ++r)
                if (complete[r]) levels.insert(table.rows[r][static_cast<std::size_t>(k)]);
            if (rule->role == ColumnRole::categorical) {
                require(levels.count(*rule->reference) > 0,
                        "reference level '" + *rule->reference + "' of column '" + s.column +
                            "' does not occur in the data");
                for (const auto& l : levels)
                    if (l != *rule->reference) s.levels.push_back(l);
            } else if (rule->reference) {
                require(levels.size() <= 2, "binary column '" + s.column + "' has more than two levels");
                require(levels.count(*rule->reference) > 0,
                        "reference level '" + *rule->reference + "' of column '" + s.column +
                            "' does not occur in the data");
                for (const auto& l : levels)
                    if (l != *rule->reference) s.levels.push_back(l);
            }
        }
        by_modality[s.modality].push_back(std::move(s));
    }
    for (auto& [m, sources] : by_modality) {
        Index count = 0;
        for (auto& s : sources) {
            if (s.role == ColumnRole::categorical) {
                for (const auto& l : s.levels) enc.names_.push_back(s.column + "=" + l);
                count += static_cast<Index>(s.levels.size());
            } else {
                enc.names_.push_back(s.column);
                ++count;
            }
            enc.sources_.push_back(std::move(s));
        }
        require(count > 0, "modality " + std::to_string(m) + " encodes to zero columns");
        enc.modality_sizes_.push_back(count);
    }
    require(!enc.sources_.empty(), "schema selects no feature columns");
    return enc;
}

Dataset TableEncoder::encode(const CsvTable& table, Index* dropped) const {
    const Index ycol = table.column(schema_.response);
    require(ycol >= 0, "response column '" + schema_.response + "' not in table");
    std::vector<Index> cols;
    for (const auto& s : sources_) {
        const Index k = table.column(s.column);
        require(k >= 0, "column '" + s.column + "' not in table");
        cols.push_back(k);
    }
    std::vector<std::size_t> keep;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        bool ok = !is_missing(row[static_cast<std::size_t>(ycol)]);
        for (Index k : cols) ok = ok && !is_missing(row[static_cast<std::size_t>(k)]);
        if (ok) keep.push_back(r);
    }
    if (dropped) *dropped = static_cast<Index>(table.rows.size() - keep.size());
    if (keep.empty()) fail(ErrorKind::invalid_input, "no complete rows remain after removing missing data");

    const auto n = static_cast<Index>(keep.size());
    const auto p = static_cast<Index>(names_.size());
    Eigen::VectorXd y(n);
    Eigen::MatrixXd x(n, p);
    for (Index i = 0; i < n; ++i) {
        const std::string& cell = table.rows[keep[static_cast<std::size_t>(i)]][static_cast<std::size_t>(ycol)];
        if (schema_.response_positive) {
            y[i] = cell == *schema_.response_positive ? 1.0 : 0.0;
        } else {
            double v;
            require(parse_double(cell, v) && (v == 0.0 || v == 1.0),
                    "response value '" + cell + "' is not 0/1 (set response_positive for labels)");
            y[i] = v;
        }
    }
    Index out = 0;
    for (std::size_t s = 0; s < sources_.size(); ++s) {
        const Source& src = sources_[s];
        const auto k = static_cast<std::size_t>(cols[s]);
        if (src.role == ColumnRole::categorical) {
            for (std::size_t l = 0; l < src.levels.size(); ++l) {
                for (Index i = 0; i < n; ++i) {
                    const std::string& cell = table.rows[keep[static_cast<std::size_t>(i)]][k];
                    if (l == 0 && cell != *src.reference &&
                        std::find(src.levels.begin(), src.levels.end(), cell) == src.levels.end())
                        fail(ErrorKind::invalid_input,
                             "unknown level '" + cell + "' in column '" + src.column + "'");
                    x(i, out) = cell == src.levels[l] ? 1.0 : 0.0;
                }
                ++out;
            }
            continue;
        }
        for (Index i = 0; i < n; ++i) {
            const std::string& cell = table.rows[keep[static_cast<std::size_t>(i)]][k];
            if (src.role == ColumnRole::binary && src.reference) {
                if (cell != *src.reference && (src.levels.empty() || cell != src.levels[0]))
                    fail(ErrorKind::invalid_input,
                         "unknown level '" + cell + "' in column '" + src.column + "'");
                x(i, out) = cell == *src.reference ? 0.0 : 1.0;
                continue;
            }
            double v;
            if (!parse_double(cell, v))
                fail(ErrorKind::invalid_input, "non-numeric value '" + cell + "' in column '" + src.column + "'");
            if (src.role == ColumnRole::binary)
                require(v == 0.0 || v == 1.0, "binary column '" + src.column + "' must be 0/1");
            x(i, out) = v;
        }
        ++out;
    }
    return make_dataset(std::move(y), std::move(x), modality_sizes_, names_);
}

Ingested ingest_table(const CsvTable& table, const ClinicalSchema& schema) {
    Ingested out{Dataset{}, 0, TableEncoder::learn(table, schema)};
    out.dataset = out.encoder.encode(table, &out.rows_dropped);
    return out;
}

} // namespace ipfsel

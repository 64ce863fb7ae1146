#include "doctest.h"

#include "ipfsel/error.hpp"
#include "ipfsel/table.hpp"

#include <sstream>

using namespace ipfsel;

namespace {

CsvTable csv(const std::string& text) {
    std::istringstream in(text);
    return CsvTable::parse(in);
}

const char* clinical_schema = R"({
  "response": "pcr",
  "columns": [
    {"name": "age", "role": "continuous", "modality": 1},
    {"name": "nodal", "role": "categorical", "reference": "N0", "modality": 1},
    {"name": "tumor", "role": "categorical", "reference": "T1", "modality": 1},
    {"name": "grade", "role": "categorical", "reference": 1, "modality": 1},
    {"name": "er", "role": "binary", "reference": "negative", "modality": 1},
    {"name": "pr", "role": "binary", "modality": 1},
    {"prefix": "g_", "role": "continuous", "modality": 2}
  ]
})";

std::string clinical_csv() {
    std::string s = "pcr,g_1,age,nodal,tumor,grade,er,pr,g_2\n";
    const char* nodal[] = {"N0", "N1", "N2", "N3"};
    const char* tumor[] = {"T1", "T2", "T3", "T4"};
    for (int i = 0; i < 16; ++i) {
        s += std::to_string(i % 2) + "," + std::to_string(0.1 * i) + "," + std::to_string(40 + i) + "," +
             nodal[i % 4] + "," + tumor[(i / 4) % 4] + "," + std::to_string(1 + i % 3) + "," +
             (i % 3 == 0 ? "positive" : "negative") + "," + std::to_string(i % 2 == 0 ? 1 : 0) + "," +
             std::to_string(-0.2 * i) + "\n";
    }
    return s;
}

} // namespace

TEST_CASE("CSV parsing") {
    const auto t = csv("a,\"b,c\",d\r\n1,\"x \"\"q\"\"\",3\r\n\n4,,NA\n");
    REQUIRE(t.header.size() == 3);
    CHECK(t.header[1] == "b,c");
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0][1] == "x \"q\"");
    CHECK(t.rows[0][2] == "3");
    CHECK(is_missing(t.rows[1][1]));
    CHECK(is_missing(t.rows[1][2]));
    CHECK(t.column("d") == 2);
    CHECK(t.column("zz") == -1);
    CHECK_THROWS_AS(csv("a,b\n1\n"), Error);
    CHECK_THROWS_AS(csv("a,a\n1,2\n"), Error);
    CHECK_THROWS_AS(csv(""), Error);
}

TEST_CASE("clinical encoding with reference levels") {
    const auto schema = ClinicalSchema::from_json_text(clinical_schema);
    const auto ing = ingest_table(csv(clinical_csv()), schema);
    const Dataset& d = ing.dataset;
    CHECK(ing.rows_dropped == 0);
    CHECK(d.n() == 16);
    // 1 + 3 + 3 + 2 + 1 + 1 clinical columns, then the two genes.
    REQUIRE(d.modality_sizes == std::vector<Index>{11, 2});
    const std::vector<std::string> names{"age",     "nodal=N1", "nodal=N2", "nodal=N3", "tumor=T2",
                                         "tumor=T3", "tumor=T4", "grade=2",  "grade=3",  "er",
                                         "pr",      "g_1",      "g_2"};
    CHECK(d.feature_names == names);
    for (Index i = 0; i < 16; ++i) {
        CHECK(d.y[i] == i % 2);
        CHECK(d.x(i, 0) == 40 + i);
        CHECK(d.x(i, 1) == (i % 4 == 1 ? 1.0 : 0.0));
        CHECK(d.x(i, 3) == (i % 4 == 3 ? 1.0 : 0.0));
        CHECK(d.x(i, 7) == (i % 3 == 1 ? 1.0 : 0.0));
        CHECK(d.x(i, 9) == (i % 3 == 0 ? 1.0 : 0.0));
        CHECK(d.x(i, 11) == doctest::Approx(0.1 * i));
        const double nodal_sum = d.x(i, 1) + d.x(i, 2) + d.x(i, 3);
        CHECK(nodal_sum == (i % 4 == 0 ? 0.0 : 1.0));
    }
}

TEST_CASE("listwise deletion") {
    std::string s = clinical_csv();
    s += "1,0.5,NA,N1,T1,1,negative,1,0.3\n";
    s += "0,0.5,50,,T1,1,negative,1,0.3\n";
    s += "NA,0.5,50,N1,T1,1,negative,1,0.3\n";
    const auto ing = ingest_table(csv(s), ClinicalSchema::from_json_text(clinical_schema));
    CHECK(ing.rows_dropped == 3);
    CHECK(ing.dataset.n() == 16);

    std::string all_missing = "pcr,x\n1,NA\n0,\n";
    const auto sc = ClinicalSchema::from_json_text(R"({"response":"pcr","columns":[{"name":"x"}]})");
    CHECK_THROWS_AS(ingest_table(csv(all_missing), sc), Error);
}

TEST_CASE("schema errors") {
    const auto schema = ClinicalSchema::from_json_text(clinical_schema);
    SUBCASE("unknown level at encode time") {
        const auto enc = TableEncoder::learn(csv(clinical_csv()), schema);
        std::string s = clinical_csv();
        s += "1,0.5,50,N4,T1,1,negative,1,0.3\n";
        CHECK_THROWS_AS(enc.encode(csv(s)), Error);
    }
    SUBCASE("reference level absent") {
        auto bad = ClinicalSchema::from_json_text(
            R"({"response":"pcr","default":{"role":"continuous"},"columns":[{"name":"nodal","role":"categorical","reference":"N9"}]})");
        bad.columns.push_back({"tumor", "", ColumnRole::categorical, "T1", 1});
        bad.columns.push_back({"grade", "", ColumnRole::categorical, "1", 1});
        bad.columns.push_back({"er", "", ColumnRole::binary, "negative", 1});
        CHECK_THROWS_AS(ingest_table(csv(clinical_csv()), bad), Error);
    }
    SUBCASE("uncovered column") {
        const auto partial = ClinicalSchema::from_json_text(R"({"response":"pcr","columns":[{"name":"age"}]})");
        CHECK_THROWS_AS(ingest_table(csv(clinical_csv()), partial), Error);
    }
    SUBCASE("categorical without reference") {
        CHECK_THROWS_AS(ClinicalSchema::from_json_text(R"({"columns":[{"name":"a","role":"categorical"}]})"), Error);
    }
    SUBCASE("bad role and bad json") {
        CHECK_THROWS_AS(ClinicalSchema::from_json_text(R"({"columns":[{"name":"a","role":"ordinal"}]})"), Error);
        CHECK_THROWS_AS(ClinicalSchema::from_json_text("{"), Error);
    }
    SUBCASE("non-binary response") {
        const auto sc = ClinicalSchema::from_json_text(R"({"response":"y","columns":[{"name":"x"}]})");
        CHECK_THROWS_AS(ingest_table(csv("y,x\n2,1\n0,3\n"), sc), Error);
    }
}

TEST_CASE("response labels and object-form schema") {
    const auto sc = ClinicalSchema::from_json_text(
        R"({"response":"status","response_positive":"pCR","columns":{"x":{"modality":1},"z":{"modality":2}}})");
    const auto ing = ingest_table(csv("x,status,z\n1,pCR,2\n3,RD,4\n5,pCR,6\n"), sc);
    CHECK(ing.dataset.y == Eigen::Vector3d(1, 0, 1));
    CHECK(ing.dataset.modality_sizes == std::vector<Index>{1, 1});
    CHECK(ing.dataset.feature_names == std::vector<std::string>{"x", "z"});
}

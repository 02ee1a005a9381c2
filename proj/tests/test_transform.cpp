#include <doctest.h>

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "ptp/transform.hpp"

using namespace ptp::data;

namespace {

FeatureSchema tf_schema() {
  FeatureSchema s;
  s.columns = {{"k", ColumnKind::categorical},
               {"when", ColumnKind::date},
               {"paid", ColumnKind::target}};
  s.target_positive_label = "yes";
  return s;
}

Dataset one_date_row(ptp::CivilDate d) {
  Dataset ds;
  ds.schema = tf_schema();
  ds.rows = {{std::string("a"), d, std::string("yes")}};
  return ds;
}

}  // namespace

TEST_SUITE("transform") {

TEST_CASE("expand_date yields five calendar features at the old position") {
  const Dataset out = expand_date(one_date_row({2019, 7, 15}), "when");
  REQUIRE(out.schema.columns.size() == 7);
  CHECK(out.schema.columns[1].name == "when_year");
  CHECK(out.schema.columns[2].name == "when_month");
  CHECK(out.schema.columns[3].name == "when_week");
  CHECK(out.schema.columns[4].name == "when_dow");
  CHECK(out.schema.columns[5].name == "when_dom");
  for (int c = 1; c <= 5; ++c) {
    CHECK(out.schema.columns[c].kind == ColumnKind::categorical);
  }
  CHECK(as_text(out.rows[0][1]) == "2019");
  CHECK(as_text(out.rows[0][2]) == "7");
  CHECK(as_text(out.rows[0][3]) == "29");  // iso week
  CHECK(as_text(out.rows[0][4]) == "0");   // Monday
  CHECK(as_text(out.rows[0][5]) == "15");
}

TEST_CASE("expand_date propagates missing and rejects misuse") {
  Dataset ds = one_date_row({2019, 7, 15});
  ds.rows.push_back({std::string("b"), std::monostate{}, std::string("no")});
  const Dataset out = expand_date(ds, "when");
  for (int c = 1; c <= 5; ++c) CHECK(is_missing(out.rows[1][c]));

  CHECK_THROWS_AS(expand_date(ds, "k"), std::runtime_error);        // not a date column
  CHECK_THROWS_AS(expand_date(ds, "missing"), std::runtime_error);  // no such column

  Dataset clash = ds;
  clash.schema.columns.push_back({"when_year", ColumnKind::categorical});
  for (auto& row : clash.rows) row.emplace_back(std::string("x"));
  CHECK_THROWS_AS(expand_date(clash, "when"), std::runtime_error);
}

TEST_CASE("split sizes take the ceiling for the test side") {
  CHECK(split_sizes(10, 0.2) == std::pair<std::size_t, std::size_t>{8, 2});
  CHECK(split_sizes(5, 0.5) == std::pair<std::size_t, std::size_t>{2, 3});
  CHECK(split_sizes(5, 0.0) == std::pair<std::size_t, std::size_t>{5, 0});
  CHECK(split_sizes(5, 1.0) == std::pair<std::size_t, std::size_t>{0, 5});
  CHECK(split_sizes(3, 0.01) == std::pair<std::size_t, std::size_t>{2, 1});
  // an exact multiple must not pick up an extra row from rounding noise
  CHECK(split_sizes(5050000, 0.2) == std::pair<std::size_t, std::size_t>{4040000, 1010000});
  CHECK_THROWS_AS(split_sizes(10, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(split_sizes(10, 1.5), std::invalid_argument);
}

TEST_CASE("time split cuts off the most recent rows") {
  Dataset ds;
  ds.schema = tf_schema();
  // d1..d10 inserted out of order
  const int days[] = {3, 9, 1, 7, 5, 10, 2, 8, 6, 4};
  for (int d : days) {
    ds.rows.push_back({std::string("k") + std::to_string(d), ptp::CivilDate{2019, 1, d},
                       std::string(d % 2 ? "yes" : "no")});
  }
  const auto [train, test] = time_split(ds, "when", 0.2);
  REQUIRE(train.n_rows() == 8);
  REQUIRE(test.n_rows() == 2);
  CHECK(as_text(test.rows[0][0]) == "k9");
  CHECK(as_text(test.rows[1][0]) == "k10");
  for (const auto& row : train.rows) {
    CHECK(as_date(row[1]) < ptp::CivilDate{2019, 1, 9});
  }
}

TEST_CASE("time split is stable for tied dates") {
  Dataset ds;
  ds.schema = tf_schema();
  for (int i = 0; i < 6; ++i) {
    ds.rows.push_back({std::string("r") + std::to_string(i),
                       ptp::CivilDate{2019, 1, i < 3 ? 1 : 2}, std::string("yes")});
  }
  const auto [train, test] = time_split(ds, "when", 0.5);
  CHECK(as_text(train.rows[0][0]) == "r0");
  CHECK(as_text(train.rows[2][0]) == "r2");
  CHECK(as_text(test.rows[0][0]) == "r3");
  CHECK(as_text(test.rows[2][0]) == "r5");
}

TEST_CASE("time split requires dates everywhere") {
  Dataset ds = one_date_row({2019, 7, 15});
  ds.rows.push_back({std::string("b"), std::monostate{}, std::string("no")});
  CHECK_THROWS_AS(time_split(ds, "when", 0.5), std::runtime_error);
}

TEST_CASE("oversampling balances by duplicating minority rows") {
  Dataset ds;
  ds.schema = tf_schema();
  for (int i = 0; i < 7; ++i) {
    ds.rows.push_back({std::string("p"), ptp::CivilDate{2019, 1, 1}, std::string("yes")});
  }
  for (int i = 0; i < 3; ++i) {
    ds.rows.push_back({std::string("n") + std::to_string(i), ptp::CivilDate{2019, 1, 2},
                       std::string("no")});
  }
  const Dataset out = oversample(ds, 11);
  REQUIRE(out.n_rows() == 14);
  std::map<std::string, int> labels;
  for (const auto& row : out.rows) ++labels[as_text(row[2])];
  CHECK(labels["yes"] == 7);
  CHECK(labels["no"] == 7);
  // appended rows are copies of existing minority rows
  for (std::size_t r = 10; r < out.n_rows(); ++r) {
    CHECK(as_text(out.rows[r][2]) == "no");
    CHECK(as_text(out.rows[r][0]).substr(0, 1) == "n");
  }
  // deterministic in the seed
  CHECK(csv_to_string(oversample(ds, 11)) == csv_to_string(out));

  const Dataset balanced = oversample(out, 5);
  CHECK(balanced.n_rows() == out.n_rows());
}

TEST_CASE("oversampling rejects unlabeled rows") {
  Dataset ds = one_date_row({2019, 1, 1});
  ds.rows.push_back({std::string("a"), ptp::CivilDate{2019, 1, 2}, std::monostate{}});
  CHECK_THROWS_AS(oversample(ds, 1), std::runtime_error);
}

}  // TEST_SUITE

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "mrbt/ingest.hpp"

using namespace mrbt;

namespace {

std::filesystem::path write_temp_csv(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / ("mrbt_test_" + name);
  std::ofstream out(path, std::ios::trunc);
  out << content;
  return path;
}

const Schema kSchema{{"year", "age"}, {"city"}};
const CsvMapping kMapping{{"year", "age"}, {"city"}, std::nullopt};

}  // namespace

TEST_CASE("csv rows map to records in file order") {
  const auto path = write_temp_csv("basic.csv",
                                   "year,age,city\n"
                                   "2017,34,Pune\n"
                                   "2015,28,Bangalore\n");
  const auto result = parse_csv(path, kMapping, kSchema);
  REQUIRE(result.records.size() == 2);
  CHECK(result.rejects.empty());
  CHECK(result.records[0].continuous == std::vector<double>{2017.0, 34.0});
  CHECK(result.records[0].discrete.at("city") == "Pune");
  CHECK(result.records[0].owner_id == "0");  // row index without an id column
  CHECK(result.records[1].owner_id == "1");
  std::filesystem::remove(path);
}

TEST_CASE("header-only file yields an empty list") {
  const auto path = write_temp_csv("empty.csv", "year,age,city\n");
  const auto result = parse_csv(path, kMapping, kSchema);
  CHECK(result.records.empty());
  CHECK(result.rejects.empty());
  std::filesystem::remove(path);
}

TEST_CASE("bad numeric rows are rejected individually") {
  std::string content = "year,age,city\n";
  for (int i = 0; i < 100; ++i) {
    if (i == 57)
      content += "not-a-year,30,Pune\n";
    else
      content += "20" + std::to_string(10 + i % 10) + ",30,Pune\n";
  }
  const auto path = write_temp_csv("partial.csv", content);
  const auto result = parse_csv(path, kMapping, kSchema);
  CHECK(result.records.size() == 99);
  REQUIRE(result.rejects.size() == 1);
  CHECK(result.rejects[0].line == 59);  // header is line 1
  CHECK(result.rejects[0].reason.find("year") != std::string::npos);
  std::filesystem::remove(path);
}

TEST_CASE("missing mapped column is named in the error") {
  const auto path = write_temp_csv("missing.csv", "year,city\n2017,Pune\n");
  CHECK_THROWS_WITH(parse_csv(path, kMapping, kSchema),
                    Catch::Matchers::ContainsSubstring("age"));
  std::filesystem::remove(path);
}

TEST_CASE("quoted fields, padding and empty discrete cells") {
  const auto path = write_temp_csv("quoted.csv",
                                   "year,age,city,id\n"
                                   " 2017 , 34 ,\"Pune, West\",e1\n"
                                   "2018,40,,e2\n");
  CsvMapping mapping{{"year", "age"}, {"city"}, std::string("id")};
  const auto result = parse_csv(path, mapping, kSchema);
  REQUIRE(result.records.size() == 2);
  CHECK(result.records[0].continuous[0] == 2017.0);
  CHECK(result.records[0].discrete.at("city") == "Pune, West");
  CHECK(result.records[0].owner_id == "e1");
  CHECK_FALSE(result.records[1].discrete.contains("city"));  // empty cell = absent
  std::filesystem::remove(path);
}

TEST_CASE("parse is idempotent") {
  const auto path = write_temp_csv("idem.csv",
                                   "year,age,city\n"
                                   "2017,34,Pune\n"
                                   "2012,25,NewDelhi\n");
  const auto a = parse_csv(path, kMapping, kSchema);
  const auto b = parse_csv(path, kMapping, kSchema);
  CHECK(a.records == b.records);
  std::filesystem::remove(path);
}

TEST_CASE("gen_uniform is seed-deterministic and respects the space") {
  const auto space = unit_space(2);
  const std::vector<std::pair<std::string, std::vector<std::string>>> universe{
      {"city", {"a", "b", "c"}}};
  const auto a = gen_uniform(1000, 9, space, universe);
  const auto b = gen_uniform(1000, 9, space, universe);
  CHECK(a == b);
  const auto c = gen_uniform(1000, 10, space, universe);
  CHECK(a != c);

  for (const auto& rec : a) {
    CHECK(rec.continuous[0] >= 0.0);
    CHECK(rec.continuous[0] <= 1.0);
    CHECK(rec.continuous[1] >= 0.0);
    CHECK(rec.continuous[1] <= 1.0);
    CHECK(universe[0].second.end() != std::find(universe[0].second.begin(),
                                                universe[0].second.end(),
                                                rec.discrete.at("city")));
  }
}

TEST_CASE("gen_uniform sample means sit near the space midpoint") {
  const Mbr space({2, 2}, {4, 8});
  const auto records = gen_uniform(10000, 31, space, {});
  double mean0 = 0, mean1 = 0;
  for (const auto& rec : records) {
    mean0 += rec.continuous[0];
    mean1 += rec.continuous[1];
  }
  mean0 /= static_cast<double>(records.size());
  mean1 /= static_cast<double>(records.size());
  CHECK(std::abs(mean0 - 3.0) < 0.05);
  CHECK(std::abs(mean1 - 5.0) < 0.15);  // same relative tolerance, wider span
}

#include <doctest.h>

#include <cstdlib>
#include <random>
#include <sstream>

#include "plsivc/csv.hpp"
#include "plsivc/errors.hpp"

using namespace plsivc;

namespace {

CsvTable parse(const std::string& text) {
  std::istringstream in(text);
  return parse_csv(in, "t.csv");
}

}  // namespace

TEST_SUITE("csv") {

TEST_CASE("parses headers, quotes, CRLF and blank lines") {
  const CsvTable t = parse("\xEF\xBB\xBF\"Y\", a ,b\r\n1,2.5,-3e-2\r\n\r\n+4,\"5\",6\n");
  REQUIRE(t.header == std::vector<std::string>{"Y", "a", "b"});
  REQUIRE(t.rows() == 2);
  CHECK(t.column("y") == std::vector<double>{1.0, 4.0});
  CHECK(t.column("A") == std::vector<double>{2.5, 5.0});
  CHECK(t.columns[2][0] == -0.03);
  CHECK(t.find("c") == std::nullopt);
  CHECK_THROWS_WITH_AS(t.index_of("c"), "missing column 'c'", DataError);
}

TEST_CASE("malformed rows name the line and column") {
  CHECK_THROWS_WITH_AS(parse("a,b\n1,2\n3,x\n"),
                       "t.csv:3: non-numeric value 'x' in column 'b'", DataError);
  CHECK_THROWS_WITH_AS(parse("a,b\n1,2,3\n"), "t.csv:2: expected 2 fields, found 3", DataError);
  CHECK_THROWS_WITH_AS(parse("a,b\n1,\n"), doctest::Contains("column 'b'"), DataError);
  CHECK_THROWS_WITH_AS(parse("a\n1.5.2\n"), doctest::Contains(":2:"), DataError);
  CHECK_THROWS_AS(parse("\n  \n"), DataError);
  CHECK_THROWS_AS(read_csv("/nonexistent/file.csv"), DataError);
}

TEST_CASE("format_double round-trips") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(2.0) == "2");
  CHECK(format_double(-1.5e-300) == "-1.5000000000000001e-300");
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, i % 40 - 20);
    CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
  }
}

TEST_CASE("written tables parse back bit-identically") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> z;
  CsvTable t;
  t.header = {"y", "u1", "x1", "x2"};
  t.columns.resize(4);
  for (auto& c : t.columns) {
    for (int i = 0; i < 50; ++i) c.push_back(z(rng) * 1e3);
  }
  std::ostringstream out;
  write_csv(out, t);
  const CsvTable back = parse(out.str());
  CHECK(back.header == t.header);
  CHECK(back.columns == t.columns);

  std::ostringstream again;
  write_csv(again, back);
  CHECK(again.str() == out.str());
}

TEST_CASE("column roles") {
  const CsvTable t = parse("resp,age,w,h,c1,c2\n1,2,3,4,5,6\n7,8,9,10,11,12\n");
  const Dataset d = dataset_from_table(t, {"RESP", {"age", "w"}, {"c1", "c2"}, {"1", "h"}});
  CHECK(d.n() == 2);
  CHECK(d.y(1) == 7.0);
  CHECK(d.u(1, 1) == 9.0);
  CHECK(d.x(0, 1) == 6.0);
  CHECK(d.z(0, 0) == 1.0);
  CHECK(d.z(1, 0) == 1.0);
  CHECK(d.z(1, 1) == 10.0);
  CHECK(d.z_names == std::vector<std::string>{"(intercept)", "h"});
  CHECK_THROWS_WITH_AS(dataset_from_table(t, {"resp", {}, {"zz"}, {"1"}}),
                       "missing column 'zz'", DataError);
  // "1" is only special in the Z block.
  CHECK_THROWS_AS(dataset_from_table(t, {"resp", {"1"}, {"c1"}, {"1"}}), DataError);

  const CsvTable round = table_from_dataset(d);
  CHECK(round.header ==
        std::vector<std::string>{"y", "age", "w", "c1", "c2", "(intercept)", "h"});
  CHECK(round.column("c2") == std::vector<double>{6.0, 12.0});
}

}  // TEST_SUITE

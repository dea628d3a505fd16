#include <doctest.h>

#include <set>

#include "footprint/csv.hpp"
#include "footprint/ingest.hpp"
#include "test_support.hpp"

using namespace footprint;
using testing::error_of;
using testing::TempDir;
using testing::write_text;

namespace {

const std::string kHeader = "userid,gender,age,political,ope,con,ext,agr,neu\n";

TraitTable users_of(std::initializer_list<std::string> idlist) {
  TraitTable t;
  for (const auto& id : idlist) {
    UserProfile p;
    p.user_id = id;
    t.add(p);
  }
  return t;
}

LikeCatalog likes_of(std::initializer_list<std::string> idlist) {
  LikeCatalog c;
  for (const auto& id : idlist) c.add({id, "name " + id});
  return c;
}

}  // namespace

TEST_CASE("parse_users maps fields directly") {
  TempDir dir;
  const auto path = write_text(dir / "users.csv", kHeader + "u1,1,25,0,0.1,-0.2,0.3,0.0,1.1\n");
  const TraitTable t = parse_users(path);
  REQUIRE(t.size() == 1);
  CHECK(t[0].user_id == "u1");
  CHECK(*t[0][Trait::gender] == 1.0);
  CHECK(*t[0][Trait::age] == 25.0);
  CHECK(*t[0][Trait::political] == 0.0);
  CHECK(*t[0][Trait::con] == -0.2);
  CHECK(*t[0][Trait::neu] == 1.1);
}

TEST_CASE("empty and NA cells are missing") {
  TempDir dir;
  const auto path = write_text(dir / "users.csv", kHeader + "u1,1,25,,0.1,-0.2,0.3,0.0,1.1\nu2,0,30,NA,0,0,0,0,0\n");
  const TraitTable t = parse_users(path);
  CHECK_FALSE(t[0][Trait::political].has_value());
  CHECK_FALSE(t[1][Trait::political].has_value());
  CHECK(t.missing_count(Trait::political) == 2);
  CHECK(t.missing_count(Trait::gender) == 0);
}

TEST_CASE("header is checked case-insensitively") {
  TempDir dir;
  const auto ok = write_text(dir / "a.csv", "UserID,Gender,AGE,political,ope,con,ext,agr,neu\nu1,0,1,1,0,0,0,0,0\n");
  CHECK(parse_users(ok).size() == 1);
  const auto bad = write_text(dir / "b.csv", "userid,age,gender,political,ope,con,ext,agr,neu\n");
  error_of(ErrorKind::parse, [&] { parse_users(bad); });
}

TEST_CASE("parse_users errors carry the line number") {
  TempDir dir;
  const auto short_row = write_text(dir / "a.csv", kHeader + "u1,1,25,0,0,0,0,0,0\nu2,1,25\n");
  CHECK(error_of(ErrorKind::parse, [&] { parse_users(short_row); }).find("a.csv:3") != std::string::npos);
  const auto text = write_text(dir / "b.csv", kHeader + "u1,1,old,0,0,0,0,0,0\n");
  CHECK(error_of(ErrorKind::parse, [&] { parse_users(text); }).find("b.csv:2") != std::string::npos);
  const auto dup = write_text(dir / "c.csv", kHeader + "u1,1,25,0,0,0,0,0,0\nu1,0,20,1,0,0,0,0,0\n");
  CHECK(error_of(ErrorKind::validation, [&] { parse_users(dup); }).find("u1") != std::string::npos);
  const auto binary = write_text(dir / "d.csv", kHeader + "u1,2,25,0,0,0,0,0,0\n");
  error_of(ErrorKind::validation, [&] { parse_users(binary); });
  const auto empty = write_text(dir / "e.csv", "");
  error_of(ErrorKind::parse, [&] { parse_users(empty); });
}

TEST_CASE("quoted fields, CRLF and BOM are accepted") {
  TempDir dir;
  const auto path =
      write_text(dir / "users.csv", "\xEF\xBB\xBF" "userid,gender,age,political,ope,con,ext,agr,neu\r\n\"u,1\",1,25,0,0,0,0,0,0\r\n");
  const TraitTable t = parse_users(path);
  REQUIRE(t.size() == 1);
  CHECK(t[0].user_id == "u,1");
  const auto bad = write_text(dir / "bad.csv", kHeader + "\"u1,1,25,0,0,0,0,0,0\n");
  error_of(ErrorKind::parse, [&] { parse_users(bad); });
}

TEST_CASE("users round-trip through CSV") {
  TempDir dir;
  TraitTable t;
  Rng rng = make_rng(7, 0);
  std::uniform_real_distribution<double> unif(-3, 3);
  for (int i = 0; i < 50; ++i) {
    UserProfile p;
    p.user_id = "user " + std::to_string(i) + (i % 7 == 0 ? ",quoted" : "");
    for (Trait tr : kAllTraits) {
      if (i % 5 == index_of(tr) % 5) continue;
      p[tr] = is_binary(tr) ? double(i % 2) : (tr == Trait::age ? 18 + i * 0.37 : unif(rng));
    }
    t.add(p);
  }
  write_users(t, dir / "users.csv");
  CHECK(parse_users(dir / "users.csv") == t);
}

TEST_CASE("parse_pairs keeps duplicates and unknown ids") {
  TempDir dir;
  const auto path = write_text(dir / "ul.csv", "userid,likeid\nA,x\nA,x\nZ,q\n");
  const auto pairs = parse_pairs(path);
  CHECK(pairs.size() == 3);
  CHECK(pairs[2].user_id == "Z");
  CHECK(parse_pairs(write_text(dir / "empty.csv", "userid,likeid\n")).empty());
  const auto bad = write_text(dir / "bad.csv", "userid,likeid\nA,x,extra\n");
  CHECK(error_of(ErrorKind::parse, [&] { parse_pairs(bad); }).find("bad.csv:2") != std::string::npos);
}

TEST_CASE("likes round-trip and reject duplicates") {
  TempDir dir;
  LikeCatalog c = likes_of({"x", "y"});
  c.add({"z", "Name, with \"quotes\""});
  write_likes(c, dir / "likes.csv");
  const LikeCatalog back = parse_likes(dir / "likes.csv");
  REQUIRE(back.size() == 3);
  CHECK(back[2].name == "Name, with \"quotes\"");
  error_of(ErrorKind::validation, [&] { c.add({"x", "again"}); });
}

TEST_CASE("build_matrix collapses duplicate pairs") {
  const auto m = build_matrix({{"A", "x"}, {"A", "x"}, {"B", "x"}}, users_of({"A", "B"}), likes_of({"x"}));
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 1);
  CHECK(m.nnz() == 2);
}

TEST_CASE("build_matrix density and exclusion of unreferenced ids") {
  const auto m = build_matrix({{"A", "x"}, {"B", "y"}}, users_of({"A", "C", "B"}), likes_of({"w", "x", "y"}));
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 2);
  CHECK(m.density() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(m.row_ids() == std::vector<std::string>{"A", "B"});
  CHECK(m.col_ids() == std::vector<std::string>{"x", "y"});
}

TEST_CASE("build_matrix errors") {
  error_of(ErrorKind::empty, [] { build_matrix({}, users_of({"A"}), likes_of({"x"})); });
  CHECK(error_of(ErrorKind::referential, [] { build_matrix({{"Q", "x"}}, users_of({"A"}), likes_of({"x"})); })
            .find("Q") != std::string::npos);
  CHECK(error_of(ErrorKind::referential, [] { build_matrix({{"A", "nope"}}, users_of({"A"}), likes_of({"x"})); })
            .find("nope") != std::string::npos);
}

TEST_CASE("property: every entry maps back to an input pair; nnz <= pairs") {
  Rng rng = make_rng(11, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const int nu = 1 + int(rng() % 12), nl = 1 + int(rng() % 12), np = 1 + int(rng() % 60);
    TraitTable users;
    LikeCatalog likes;
    for (int i = 0; i < nu; ++i) users.add({"u" + std::to_string(i), {}});
    for (int j = 0; j < nl; ++j) likes.add({"l" + std::to_string(j), ""});
    std::vector<UserLikePair> pairs;
    std::set<std::pair<std::string, std::string>> distinct;
    for (int k = 0; k < np; ++k) {
      pairs.push_back({"u" + std::to_string(rng() % nu), "l" + std::to_string(rng() % nl)});
      distinct.insert({pairs.back().user_id, pairs.back().like_id});
    }
    const auto m = build_matrix(pairs, users, likes);
    CHECK(m.nnz() <= pairs.size());
    CHECK((m.nnz() == pairs.size()) == (distinct.size() == pairs.size()));
    CHECK(m.nnz() == distinct.size());
    for (auto [r, c] : m.entries()) CHECK(distinct.count({m.row_ids()[r], m.col_ids()[c]}) == 1);
    std::size_t degree_sum = 0;
    for (std::size_t r = 0; r < m.rows(); ++r) degree_sum += m.row_degree(r);
    CHECK(degree_sum == m.nnz());
  }
}

TEST_CASE("from_entries sorts, dedups and bounds-checks") {
  const auto m = UserLikeMatrix::from_entries({"a", "b"}, {"x", "y", "z"}, {{1, 2}, {0, 1}, {1, 0}, {1, 2}});
  CHECK(m.nnz() == 3);
  const auto row = m.row(1);
  CHECK(std::vector<std::int32_t>(row.begin(), row.end()) == std::vector<std::int32_t>{0, 2});
  CHECK(m.col_degree(2) == 1);
  error_of(ErrorKind::validation, [] { UserLikeMatrix::from_entries({"a"}, {"x"}, {{0, 1}}); });
  error_of(ErrorKind::validation, [] { UserLikeMatrix::from_entries({"a"}, {"x"}, {{-1, 0}}); });
}

TEST_CASE("matrix artifact round-trip") {
  TempDir dir;
  Rng rng = make_rng(3, 0);
  const auto m = testing::random_matrix(17, 23, 0.2, rng);
  save_matrix(m, dir / "m.txt");
  CHECK(load_matrix(dir / "m.txt") == m);
  write_text(dir / "bad.txt", "not a matrix\n");
  error_of(ErrorKind::parse, [&] { load_matrix(dir / "bad.txt"); });
  error_of(ErrorKind::io, [&] { load_matrix(dir / "missing.txt"); });
}

TEST_CASE("csv helpers") {
  CHECK(csv::escape("plain") == "plain");
  CHECK(csv::escape("a,b") == "\"a,b\"");
  CHECK(csv::escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv::split_record("a,\"b,c\",,\"d\"\"e\"") == std::vector<std::string>{"a", "b,c", "", "d\"e"});
  TempDir dir;
  write_text(dir / "multi.csv", "a,\"line1\nline2\",c\nnext,row,here\n");
  csv::Reader reader(dir / "multi.csv");
  std::vector<std::string> f;
  REQUIRE(reader.next(f));
  CHECK(f[1] == "line1\nline2");
  REQUIRE(reader.next(f));
  CHECK(reader.line() == 3);
  CHECK_FALSE(reader.next(f));
}

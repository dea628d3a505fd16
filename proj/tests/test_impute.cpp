#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "footprint/impute.hpp"
#include "test_support.hpp"

using namespace footprint;
using testing::error_of;

namespace {

// Gender follows age through a logistic link; `missing` users lose their gender.
TraitTable correlated_table(std::size_t n, std::size_t missing, double steepness, Rng& rng) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0, 1);
  TraitTable t;
  for (std::size_t i = 0; i < n; ++i) {
    UserProfile p;
    p.user_id = "u" + std::to_string(i);
    const double age = 30 + 8 * normal(rng);
    p[Trait::age] = std::max(0.0, age);
    p[Trait::political] = unif(rng) < 0.5 ? 1.0 : 0.0;
    for (Trait tr : {Trait::ope, Trait::con, Trait::ext, Trait::agr, Trait::neu}) p[tr] = normal(rng);
    p[Trait::gender] = unif(rng) < 1.0 / (1.0 + std::exp(-steepness * (age - 30))) ? 1.0 : 0.0;
    if (i % (n / std::max<std::size_t>(missing, 1)) == 0 && missing > 0 && t.missing_count(Trait::gender) < missing) {
      p[Trait::gender].reset();
    }
    t.add(p);
  }
  return t;
}

}  // namespace

TEST_CASE("Rubin pooling of two imputations") {
  const std::vector<double> q{1.0, 3.0}, w{1.0, 1.0};
  const auto r = pool_rubin(q, w);
  CHECK(r.est == 2.0);
  CHECK(r.between == 2.0);
  CHECK(r.total == 4.0);
  CHECK(std::abs(r.lambda - 0.75) <= 1e-15);
  CHECK(std::abs(r.df - 16.0 / 9.0) <= 1e-12);
  CHECK(std::abs(r.fmi - 0.854651) <= 1e-6);
  CHECK(r.se == 2.0);
  CHECK(r.t == 1.0);
  CHECK(r.lo95 < r.est);
  CHECK(r.hi95 - r.est == doctest::Approx(r.est - r.lo95));
}

TEST_CASE("identical estimates carry no between-imputation variance") {
  const std::vector<double> q{0.5, 0.5, 0.5}, w{0.2, 0.3, 0.1};
  const auto r = pool_rubin(q, w);
  CHECK(r.between == 0.0);
  CHECK(r.lambda == 0.0);
  CHECK(r.fmi == 0.0);
  CHECK(std::isinf(r.df));
  CHECK(std::abs(r.total - 0.2) <= 1e-15);
  // Normal reference: 97.5% quantile.
  CHECK(std::abs((r.hi95 - r.est) / r.se - 1.959963984540054) <= 1e-12);
}

TEST_CASE("pool_rubin errors") {
  const std::vector<double> one{1.0}, two{1.0, 2.0}, zero{0.0, 1.0};
  error_of(ErrorKind::parameter, [&] { pool_rubin(one, one); });
  error_of(ErrorKind::parameter, [&] { pool_rubin(two, one); });
  error_of(ErrorKind::parameter, [&] { pool_rubin(two, zero); });
}

TEST_CASE("Rubin properties on random inputs") {
  Rng rng = make_rng(21, 0);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> var(0.01, 2.0);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t m = 2 + rng() % 20;
    std::vector<double> q(m), w(m);
    for (std::size_t i = 0; i < m; ++i) q[i] = normal(rng), w[i] = var(rng);
    const auto r = pool_rubin(q, w);
    CHECK(r.lambda <= r.fmi + 1e-15);
    CHECK(r.lambda >= 0.0);
    CHECK(r.fmi <= 1.0);
    const double md = double(m);
    CHECK(std::abs(r.lambda - (1 + 1 / md) * r.between / r.total) <= 1e-12);
    CHECK(std::abs(r.total - (r.within + (1 + 1 / md) * r.between)) <= 1e-12);

    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<double> q2(m), w2(m);
    for (std::size_t i = 0; i < m; ++i) q2[i] = q[order[i]], w2[i] = w[order[i]];
    const auto s = pool_rubin(q2, w2);
    CHECK(std::abs(s.est - r.est) <= 1e-12);
    CHECK(std::abs(s.total - r.total) <= 1e-12);
    CHECK(std::abs(s.fmi - r.fmi) <= 1e-12);
  }
}

TEST_CASE("LDA on a hand-computable one-dimensional problem") {
  Eigen::MatrixXd X(6, 1);
  X << 0, 1, 2, 4, 5, 6;
  Eigen::VectorXd y(6);
  y << 0, 0, 0, 1, 1, 1;
  // Class means 1 and 5, pooled variance (2 + 2) / 4 = 1.
  const auto lda = fit_lda(X, y);
  CHECK(std::abs(lda.weights(0) - 4.0) <= 1e-6);
  CHECK(std::abs(lda.bias + 12.0) <= 1e-6);
  Eigen::VectorXd mid(1);
  mid << 3.0;
  CHECK(std::abs(lda.posterior(mid) - 0.5) <= 1e-9);

  Rng rng = make_rng(5, 0);
  double ones = 0;
  for (int i = 0; i < 10000; ++i) ones += draw_bernoulli(lda.posterior(mid), rng);
  CHECK(std::abs(ones / 10000 - 0.5) <= 0.02);

  error_of(ErrorKind::numeric, [] { fit_lda(Eigen::MatrixXd::Ones(4, 1), Eigen::VectorXd::Zero(4)); });
}

TEST_CASE("no missing values yields m identical copies") {
  Rng rng = make_rng(1, 0);
  const auto t = correlated_table(100, 0, 0.3, rng);
  const auto out = impute_binary(t, Trait::gender, {.m = 4, .seed = 1});
  REQUIRE(out.size() == 4);
  for (const auto& c : out) CHECK(c == t);
}

TEST_CASE("imputation keeps observed cells and fills every missing one") {
  Rng rng = make_rng(2, 0);
  const auto t = correlated_table(500, 50, 0.3, rng);
  REQUIRE(t.missing_count(Trait::gender) == 50);
  const auto out = impute_binary(t, Trait::gender, {.m = 5, .seed = 3});
  REQUIRE(out.size() == 5);
  for (const auto& c : out) {
    CHECK(c.complete(Trait::gender));
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i][Trait::gender]) CHECK(*c[i][Trait::gender] == *t[i][Trait::gender]);
      const double g = *c[i][Trait::gender];
      CHECK((g == 0.0 || g == 1.0));
      for (Trait tr : kAllTraits) {
        if (tr != Trait::gender) CHECK(c[i][tr] == t[i][tr]);
      }
    }
  }
  const auto again = impute_binary(t, Trait::gender, {.m = 5, .seed = 3});
  CHECK(again == out);
  const auto combined = combine_imputations(out, CombineMode::majority);
  CHECK(combined.complete(Trait::gender));
  CHECK(combine_imputations(out, CombineMode::first) == out.front());
}

TEST_CASE("separable predictors give deterministic imputations") {
  Rng rng = make_rng(3, 0);
  std::normal_distribution<double> normal;
  TraitTable t;
  // Two tight age clusters ten standard deviations apart.
  for (int i = 0; i < 400; ++i) {
    UserProfile p;
    p.user_id = "u" + std::to_string(i);
    const double g = double(i % 2);
    p[Trait::age] = (g == 1.0 ? 40.0 : 20.0) + normal(rng);
    p[Trait::political] = double((i / 2) % 2);
    for (Trait tr : {Trait::ope, Trait::con, Trait::ext, Trait::agr, Trait::neu}) p[tr] = normal(rng);
    if (i % 10 >= 8) {
      p[Trait::gender].reset();
    } else {
      p[Trait::gender] = g;
    }
    t.add(p);
  }
  const auto out = impute_binary(t, Trait::gender, {.m = 5, .seed = 4});
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i][Trait::gender]) continue;
    for (const auto& c : out) CHECK(*c[i][Trait::gender] == double(i % 2));
  }
}

TEST_CASE("imputation errors") {
  Rng rng = make_rng(4, 0);
  const auto few = correlated_table(25, 10, 0.3, rng);  // 15 complete cases
  error_of(ErrorKind::validation, [&] { impute_binary(few, Trait::gender, {}); });
  const auto t = correlated_table(100, 10, 0.3, rng);
  error_of(ErrorKind::parameter, [&] { impute_binary(t, Trait::gender, {.m = 1}); });
  error_of(ErrorKind::parameter, [&] { impute_binary(t, Trait::age, {}); });
  auto gap = t;
  gap.at(1)[Trait::ope].reset();
  error_of(ErrorKind::validation, [&] { impute_binary(gap, Trait::gender, {}); });
  error_of(ErrorKind::empty, [] { combine_imputations({}, CombineMode::first); });
}

TEST_CASE("pooled analysis over completed tables") {
  Rng rng = make_rng(5, 0);
  const auto t = correlated_table(800, 80, 0.3, rng);
  const auto out = impute_binary(t, Trait::gender, {.m = 5, .seed = 6});
  const auto rows = pooled_analysis(out, Trait::gender, t);
  REQUIRE(rows.size() == 8);
  CHECK(rows[0].term == "(Intercept)");
  const auto age = std::find_if(rows.begin(), rows.end(), [](const PooledRow& r) { return r.term == "age"; });
  REQUIRE(age != rows.end());
  CHECK(age->est > 0.0);
  CHECK(age->p_value < 1e-6);
  CHECK(age->nmis == std::optional<std::size_t>(0));
  for (const auto& r : rows) CHECK(r.lambda <= r.fmi + 1e-15);
  const auto csv = pooled_csv(rows);
  CHECK(csv.rfind("term,est,se,t,df,Pr,lo95,hi95,nmis,fmi,lambda\n(Intercept),", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);

  const std::vector<TraitTable> same(3, out.front());
  for (const auto& r : pooled_analysis(same, Trait::gender, t)) CHECK(r.fmi == 0.0);
}

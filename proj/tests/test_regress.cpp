#include <doctest.h>

#include <cmath>

#include "curvescope/errors.hpp"
#include "curvescope/regress.hpp"
#include "curvescope/rng.hpp"
#include "oracles.hpp"

using namespace curvescope;
using regress::design_with_intercept;
using regress::ols_fit;

namespace {

std::vector<double> gaussian_column(std::size_t n, std::uint64_t seed) {
  CounterRng rng(seed, 20);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.next_gaussian();
  return v;
}

}  // namespace

TEST_CASE("ols: exact linear data and orthogonal noise") {
  const std::size_t n = 30;
  auto x = gaussian_column(n, 1);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = 2.0 * x[i];
  const auto fit = ols_fit(design_with_intercept(std::vector<std::vector<double>>{x}),
                           Eigen::Map<const Eigen::VectorXd>(y.data(), n));
  CHECK(fit.coefficients(1) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-12));

  // y orthogonal to x (and centered): R2 ~ 0, slope ~ 0.
  std::vector<double> y_orth(n);
  for (std::size_t i = 0; i < n; ++i) y_orth[i] = (i % 2 == 0) ? 1.0 : -1.0;
  std::vector<double> x_sym(n);
  for (std::size_t i = 0; i < n; ++i)
    x_sym[i] = static_cast<double>(i / 2) * ((i % 2 == 0) ? 1.0 : 1.0);
  const auto fit2 =
      ols_fit(design_with_intercept(std::vector<std::vector<double>>{x_sym}),
              Eigen::Map<const Eigen::VectorXd>(y_orth.data(), n));
  CHECK(std::abs(fit2.coefficients(1)) < 1e-12);
  CHECK(fit2.r2 == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("ols matches the normal-equation oracle on a 50x4 system") {
  const std::size_t n = 50;
  std::vector<std::vector<double>> cols = {
      gaussian_column(n, 2), gaussian_column(n, 3), gaussian_column(n, 4),
      gaussian_column(n, 5)};
  CounterRng rng(6, 21);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i)
    y[i] = 1.0 + 0.5 * cols[0][i] - 2.0 * cols[1][i] + 0.1 * cols[2][i] +
           rng.next_gaussian();

  const auto X = design_with_intercept(cols);
  const auto fit = ols_fit(X, Eigen::Map<const Eigen::VectorXd>(y.data(), n));

  std::vector<std::vector<double>> rows(n, std::vector<double>(5));
  for (std::size_t i = 0; i < n; ++i) {
    rows[i][0] = 1.0;
    for (std::size_t c = 0; c < 4; ++c) rows[i][c + 1] = cols[c][i];
  }
  const auto beta = oracles::ols_normal_equations(rows, y);
  for (int j = 0; j < 5; ++j)
    CHECK(fit.coefficients(j) == doctest::Approx(beta[static_cast<std::size_t>(j)])
                                     .epsilon(1e-8));

  // Adjusted R2 definition.
  const double n_d = static_cast<double>(n);
  CHECK(fit.adjusted_r2 ==
        doctest::Approx(1.0 - (1.0 - fit.r2) * (n_d - 1.0) / (n_d - 4.0 - 1.0))
            .epsilon(1e-12));
}

TEST_CASE("ols rank deficiency names the dependent column") {
  const std::size_t n = 20;
  auto x = gaussian_column(n, 7);
  std::vector<double> x2(x);
  for (auto& v : x2) v *= 3.0;  // exact multiple
  std::vector<double> y = gaussian_column(n, 8);
  CHECK_THROWS_AS(
      ols_fit(design_with_intercept(std::vector{x, x2}),
              Eigen::Map<const Eigen::VectorXd>(y.data(), n)),
      NumericError);
}

TEST_CASE("incremental r2 ledger") {
  const std::size_t n = 80;
  auto x1 = gaussian_column(n, 9);
  auto x2 = gaussian_column(n, 10);
  CounterRng rng(11, 22);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i)
    y[i] = 1.5 * x1[i] - 0.8 * x2[i] + 0.5 * rng.next_gaussian();

  std::vector<regress::PredictorGroup> groups = {
      {"x1", {x1}}, {"x2", {x2}}, {"dup", {x1}}};
  const auto ledger = regress::incremental_r2(groups, y);
  REQUIRE(ledger.size() == 3);
  CHECK(ledger[0].delta_adjusted_r2 == ledger[0].adjusted_r2);
  CHECK(ledger[0].adjusted_r2 > 0.3);
  CHECK(ledger[1].delta_adjusted_r2 > 0.05);
  // Duplicated predictor adds no unadjusted R2.
  CHECK(ledger[2].r2 == doctest::Approx(ledger[1].r2).epsilon(1e-12));
  // Unadjusted R2 never decreases along the nested sequence.
  CHECK(ledger[1].r2 >= ledger[0].r2 - 1e-12);
  CHECK(ledger[2].r2 >= ledger[1].r2 - 1e-12);

  // A planted two-group model recovers both contributions, matching a
  // from-scratch nested fit.
  const auto fit1 = ols_fit(design_with_intercept(std::vector<std::vector<double>>{x1}),
                            Eigen::Map<const Eigen::VectorXd>(y.data(), n));
  const auto fit2 = ols_fit(design_with_intercept(std::vector{x1, x2}),
                            Eigen::Map<const Eigen::VectorXd>(y.data(), n));
  CHECK(ledger[0].adjusted_r2 == doctest::Approx(fit1.adjusted_r2).epsilon(1e-12));
  CHECK(ledger[1].delta_adjusted_r2 ==
        doctest::Approx(fit2.adjusted_r2 - fit1.adjusted_r2).epsilon(1e-12));
}

TEST_CASE("irrelevant predictor: delta adjusted R2 is non-positive") {
  const std::size_t n = 60;
  auto x1 = gaussian_column(n, 12);
  std::vector<double> junk(n);
  // Orthogonalize the junk column against x1 and y.
  CounterRng rng(13, 23);
  for (auto& v : junk) v = rng.next_gaussian();
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = x1[i];
  std::vector<regress::PredictorGroup> groups = {{"signal", {x1}},
                                                 {"junk", {junk}}};
  const auto ledger = regress::incremental_r2(groups, y);
  CHECK(ledger[1].delta_adjusted_r2 <= 1e-9);
}

TEST_CASE("sign triple") {
  const std::size_t n = 50;
  auto x = gaussian_column(n, 14);
  auto freq = gaussian_column(n, 15);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i];
  const auto t = regress::sign_triple(x, {}, y, freq);
  CHECK(t.full == '+');
  CHECK(t.alone == '+');
  CHECK(t.alone_freq_resid == '+');

  // y independent of x: all zeros under the tolerance.
  std::vector<double> y_const(n, 3.0);
  const auto t0 = regress::sign_triple(x, {}, y_const, freq);
  CHECK(t0.full == '0');
  CHECK(t0.alone == '0');

  // Suppression: y driven by freq only, x correlated with freq. The simple
  // regression picks up freq's effect through x; accounting for freq kills it.
  std::vector<double> x_sup(n), y_sup(n);
  CounterRng rng(16, 24);
  for (std::size_t i = 0; i < n; ++i) {
    x_sup[i] = freq[i] + 0.01 * rng.next_gaussian();
    y_sup[i] = 2.0 * freq[i];
  }
  const auto ts = regress::sign_triple(x_sup, {}, y_sup, freq);
  CHECK(ts.alone == '+');
  CHECK(ts.alone_freq_resid != ts.alone);

  // Sign invariance under positive rescaling.
  std::vector<double> x_scaled(x);
  for (auto& v : x_scaled) v *= 1e-6;
  std::vector<double> y_sig(n);
  for (std::size_t i = 0; i < n; ++i) y_sig[i] = -x[i] + 0.1 * freq[i];
  const auto s1 = regress::sign_triple(x, {}, y_sig, freq);
  const auto s2 = regress::sign_triple(x_scaled, {}, y_sig, freq);
  CHECK(s1.full == s2.full);
  CHECK(s1.alone == s2.alone);
  CHECK(s1.alone_freq_resid == s2.alone_freq_resid);
  CHECK(s1.alone == '-');
}

TEST_CASE("vif") {
  const std::size_t n = 100;
  // Orthonormal-ish: exactly orthogonal columns give VIF 1.
  std::vector<double> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = (i % 2 == 0) ? 1.0 : -1.0;
    b[i] = (i % 4 < 2) ? 1.0 : -1.0;
  }
  const auto v = regress::vif(std::vector{a, b});
  CHECK(v[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(v[1] == doctest::Approx(1.0).epsilon(1e-12));

  // Duplicated column: flagged infinite.
  const auto vdup = regress::vif(std::vector{a, a});
  CHECK(std::isinf(vdup[0]));
  CHECK(std::isinf(vdup[1]));

  // Constructed correlation r: VIF = 1/(1-r^2).
  auto x = gaussian_column(n, 17);
  auto e = gaussian_column(n, 18);
  const double rho = 0.6;
  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i)
    z[i] = rho * x[i] + std::sqrt(1 - rho * rho) * e[i];
  const double r = pearson(x, z);
  const auto vxz = regress::vif(std::vector{x, z});
  CHECK(vxz[0] == doctest::Approx(1.0 / (1.0 - r * r)).epsilon(1e-8));
  CHECK(vxz[1] == doctest::Approx(1.0 / (1.0 - r * r)).epsilon(1e-8));
}

TEST_CASE("nested F test") {
  const std::size_t n = 40;
  auto x1 = gaussian_column(n, 19);
  auto x2 = gaussian_column(n, 20);
  CounterRng rng(21, 25);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i)
    y[i] = x1[i] + 0.3 * x2[i] + 0.5 * rng.next_gaussian();
  const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), n);

  const auto Xs = design_with_intercept(std::vector<std::vector<double>>{x1});
  const auto Xl = design_with_intercept(std::vector{x1, x2});

  // Identical models: F = 0, p = 1.
  const auto same = regress::nested_test(Xs, Xs, yv);
  CHECK(same.f_statistic == 0.0);
  CHECK(same.p_value == 1.0);

  // Adding a column that fully explains the residual: p -> 0.
  std::vector<double> resid_col(n);
  {
    const auto fit_s = ols_fit(Xs, yv);
    for (std::size_t i = 0; i < n; ++i)
      resid_col[i] = fit_s.residuals(static_cast<Eigen::Index>(i));
  }
  const auto Xr = design_with_intercept(std::vector{x1, resid_col});
  const auto explains = regress::nested_test(Xs, Xr, yv);
  CHECK(explains.p_value < 1e-12);

  // Textbook formula on a random nested pair.
  const auto t = regress::nested_test(Xs, Xl, yv);
  const auto fs = ols_fit(Xs, yv);
  const auto fl = ols_fit(Xl, yv);
  const double f_expect =
      ((fs.rss - fl.rss) / 1.0) / (fl.rss / static_cast<double>(n - 2 - 1));
  CHECK(t.f_statistic == doctest::Approx(f_expect).epsilon(1e-10));
  CHECK(t.p_value <= 1.0);
  CHECK(t.p_value >= 0.0);

  // Non-nested inputs are rejected.
  const auto Xother = design_with_intercept(std::vector<std::vector<double>>{x2});
  CHECK_THROWS_AS(regress::nested_test(Xother, Xs, yv), ConfigError);

  // The p-value is invariant to affine transformations of y.
  Eigen::VectorXd y_aff = 3.0 * yv;
  y_aff.array() += 11.0;
  const auto t_aff = regress::nested_test(Xs, Xl, y_aff);
  CHECK(t_aff.p_value == doctest::Approx(t.p_value).epsilon(1e-10));
}

TEST_CASE("pos coefficients") {
  const std::size_t n = 120;
  CounterRng rng(22, 26);
  std::vector<std::string> tags(n), wp(n);
  const std::vector<std::string> tag_pool = {"NOUN", "VERB", "ADJ"};
  const std::vector<std::string> wp_pool = {"B", "I", "L", "U"};
  for (std::size_t i = 0; i < n; ++i) {
    tags[i] = tag_pool[rng.next_below(3)];
    wp[i] = wp_pool[rng.next_below(4)];
  }

  // Constant target: residuals vanish, every coefficient is zero.
  std::vector<double> flat(n, 4.0);
  auto x = gaussian_column(n, 23);
  const auto zero =
      regress::pos_coefficients(flat, std::vector<std::vector<double>>{x}, tags, wp);
  for (const auto& [tag, c] : zero.pos) CHECK(std::abs(c) < 1e-10);

  // Planted +0.5 shift on NOUN rows.
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = 0.7 * x[i] + 0.02 * rng.next_gaussian();
    if (tags[i] == "NOUN") y[i] += 0.5;
  }
  const auto shifted =
      regress::pos_coefficients(y, std::vector<std::vector<double>>{x}, tags, wp);
  double noun = 0, verb = 0;
  for (const auto& [tag, c] : shifted.pos) {
    if (tag == "NOUN") noun = c;
    if (tag == "VERB") verb = c;
  }
  CHECK(noun - verb == doctest::Approx(0.5).epsilon(0.1));

  // U is the reference level, pinned to zero; absent tags are dropped.
  bool saw_u = false;
  for (const auto& [tag, c] : shifted.word_pos)
    if (tag == "U") {
      saw_u = true;
      CHECK(c == 0.0);
    }
  CHECK(saw_u);
  CHECK(std::find(shifted.dropped.begin(), shifted.dropped.end(), "PUNCT") !=
        shifted.dropped.end());
}

TEST_CASE("pearson wrapper") {
  const std::vector<double> x = {1, 2, 3, 4, 5};
  std::vector<double> y(5);
  for (std::size_t i = 0; i < 5; ++i) y[i] = 2.0 * x[i] + 1.0;
  CHECK(regress::pearson(x, y) == doctest::Approx(1.0));
  for (std::size_t i = 0; i < 5; ++i) y[i] = -x[i];
  CHECK(regress::pearson(x, y) == doctest::Approx(-1.0));

  const auto a = gaussian_column(64, 24);
  const auto b = gaussian_column(64, 25);
  CHECK(regress::pearson(a, b) ==
        doctest::Approx(oracles::pearson_direct(a, b)).epsilon(1e-12));
  CHECK_THROWS_AS(regress::pearson(std::vector<double>{1, 1},
                                   std::vector<double>{1, 2}),
                  NumericError);
}

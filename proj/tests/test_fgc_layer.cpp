#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "doctest.h"
#include "fgc/fgc_layer.hpp"
#include "fgc/gradcheck.hpp"
#include "support.hpp"

using namespace fgc;
using nd::Matrix;
using nd::Tape;
using nd::Var;
using testing::random_matrix;

namespace {

double svd_norm(const Matrix& w) {
  Eigen::MatrixXd m(w.rows(), w.cols());
  for (std::size_t r = 0; r < w.rows(); ++r)
    for (std::size_t c = 0; c < w.cols(); ++c) m(r, c) = w(r, c);
  return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
}

// Row-vector helpers for the straight-line oracle.
std::vector<double> matvec(const Matrix& w, const std::vector<double>& x) {
  std::vector<double> y(w.rows(), 0.0);
  for (std::size_t r = 0; r < w.rows(); ++r)
    for (std::size_t c = 0; c < w.cols(); ++c) y[r] += w(r, c) * x[c];
  return y;
}

std::vector<double> row_of(const Matrix& m, std::size_t r) { return {m.row(r).begin(), m.row(r).end()}; }

// One layer computed node by node with no shared code beyond the Matrix type.
Matrix straight_line_layer(const Graph& g, const Split& s, bool train_mode, const Matrix& h,
                           FgcLayerParams& p) {
  auto groups = testing::naive_partition(g, s, train_mode);
  const std::size_t n = h.rows(), hid = p.hidden;
  Matrix out(n, hid);
  for (std::size_t i = 0; i < n; ++i) {
    const auto hi = row_of(h, i);
    double z = p.gate_b.value[0];
    for (std::size_t c = 0; c < hi.size(); ++c) z += p.gate_q.value[c] * hi[c];
    const double alpha = 1.0 / (1.0 + std::exp(-z));

    const auto f_self = matvec(p.w_self.value, hi);
    const auto f_fr = matvec(p.w_fraud.value, testing::naive_mean(h, groups.fraud[i]));
    const auto f_be = matvec(p.w_benign.value, testing::naive_mean(h, groups.benign[i]));
    Matrix mixed(hid, p.in_dim);
    for (std::size_t k = 0; k < mixed.size(); ++k)
      mixed[k] = alpha * p.w_fraud.value[k] + (1 - alpha) * p.w_benign.value[k];
    const auto f_un = matvec(mixed, testing::naive_mean(h, groups.unknown[i]));

    std::vector<double> cat;
    for (const auto* part : {&f_self, &f_fr, &f_be, &f_un}) cat.insert(cat.end(), part->begin(), part->end());
    auto z2 = matvec(p.w_fuse.value, cat);
    for (auto& v : z2) v = std::max(v, 0.0);
    double mean = 0, var = 0;
    for (double v : z2) mean += v;
    mean /= static_cast<double>(hid);
    for (double v : z2) var += (v - mean) * (v - mean);
    var /= static_cast<double>(hid);
    const double inv = 1.0 / std::sqrt(var + nd::kLayerNormEps);

    std::vector<double> res = hi;
    if (p.res_proj) res = matvec(p.res_proj->value, hi);
    for (std::size_t c = 0; c < hid; ++c)
      out(i, c) = (z2[c] - mean) * inv * p.ln_gain.value[c] + p.ln_shift.value[c] + res[c];
  }
  return out;
}

void randomize(FgcLayerParams& p, std::mt19937_64& rng) {
  for (auto* param : p.parameters()) param->value = random_matrix(param->value.rows(), param->value.cols(), rng);
}

}  // namespace

TEST_CASE("gate values") {
  std::mt19937_64 rng(1);
  auto p = FgcLayerParams::init(2, 4, rng);
  Tape t;
  auto v = bind(t, p);
  const Matrix h = random_matrix(5, 2, rng);
  const Matrix a0 = t.value(gate_alpha(t, v, t.constant(h)));
  for (std::size_t i = 0; i < 5; ++i) CHECK(a0[i] == 0.5);

  p.gate_b.value[0] = 20.0;
  Tape t2;
  auto v2 = bind(t2, p);
  const Matrix& a1 = t2.value(gate_alpha(t2, v2, t2.constant(h)));
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(a1[i] > 1.0 - 1e-8);
    CHECK(a1[i] < 1.0);
  }

  p.gate_b.value[0] = 0.0;
  p.gate_q.value = Matrix::from_rows({{1.0, 0.0}});
  Tape t3;
  auto v3 = bind(t3, p);
  const double a = t3.value(gate_alpha(t3, v3, t3.constant(Matrix::from_rows({{2.0, 9.0}}))))[0];
  CHECK(a == doctest::Approx(0.8807970779778823).epsilon(1e-15));
}

TEST_CASE("gate stays strictly inside (0, 1)") {
  std::mt19937_64 rng(2);
  auto p = FgcLayerParams::init(6, 4, rng);
  randomize(p, rng);
  Tape t;
  auto v = bind(t, p);
  const Matrix a = t.value(gate_alpha(t, v, t.constant(random_matrix(200, 6, rng, -5, 5))));
  for (double x : a.data()) {
    CHECK(x > 0.0);
    CHECK(x < 1.0);
  }
}

TEST_CASE("mixture endpoints and materialized oracle") {
  std::mt19937_64 rng(3);
  auto p = FgcLayerParams::init(5, 6, rng);
  const Matrix hbar = random_matrix(4, 5, rng);
  Tape t;
  auto v = bind(t, p);
  Var hb = t.constant(hbar);
  const Matrix pure_fr = t.value(nd::linear(t, hb, v.w_fraud));
  const Matrix pure_be = t.value(nd::linear(t, hb, v.w_benign));
  CHECK(t.value(mixed_unknown_apply(t, v, t.constant(Matrix(4, 1, 1.0)), hb)) == pure_fr);
  CHECK(t.value(mixed_unknown_apply(t, v, t.constant(Matrix(4, 1, 0.0)), hb)) == pure_be);

  const Matrix half = t.value(mixed_unknown_apply(t, v, t.constant(Matrix(4, 1, 0.5)), hb));
  Matrix avg(6, 5);
  for (std::size_t k = 0; k < avg.size(); ++k) avg[k] = 0.5 * (p.w_fraud.value[k] + p.w_benign.value[k]);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(testing::max_abs_diff(half.row(i), matvec(avg, row_of(hbar, i))) < 1e-14);
  }

  // Per-row alphas, each against its own materialized matrix.
  const Matrix alpha = random_matrix(4, 1, rng, 0.0, 1.0);
  const Matrix mixed = t.value(mixed_unknown_apply(t, v, t.constant(alpha), hb));
  for (std::size_t i = 0; i < 4; ++i) {
    Matrix w(6, 5);
    for (std::size_t k = 0; k < w.size(); ++k)
      w[k] = alpha[i] * p.w_fraud.value[k] + (1 - alpha[i]) * p.w_benign.value[k];
    CHECK(testing::max_abs_diff(mixed.row(i), matvec(w, row_of(hbar, i))) < 1e-14);
  }
}

TEST_CASE("norm bound examples") {
  std::mt19937_64 rng(4);
  const Matrix w = random_matrix(8, 8, rng);
  for (double a : {0.0, 0.3, 1.0}) {
    auto nb = norm_bound_check(w, w, a);
    CHECK(nb.mixed_norm == doctest::Approx(nb.bound).epsilon(1e-12));
    CHECK(nb.mixed_norm == doctest::Approx(svd_norm(w)).epsilon(1e-9));
  }
  const Matrix wb = random_matrix(8, 8, rng);
  auto nb = norm_bound_check(random_matrix(8, 8, rng), wb, 0.0);
  CHECK(nb.mixed_norm == nb.bound);
  CHECK(nb.bound == doctest::Approx(svd_norm(wb)).epsilon(1e-9));
  CHECK_THROWS_AS(norm_bound_check(w, w, 1.5), std::invalid_argument);
}

TEST_CASE("norm bound holds on random draws and power iteration matches SVD") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int draw = 0; draw < 200; ++draw) {
    const Matrix a = random_matrix(8, 8, rng), b = random_matrix(8, 8, rng);
    auto nb = norm_bound_check(a, b, u(rng));
    CHECK(nb.mixed_norm <= nb.bound + 1e-9);
  }
  for (int draw = 0; draw < 20; ++draw) {
    const Matrix w = random_matrix(8 + draw % 3, 8, rng);
    CHECK(std::abs(spectral_norm(w) - svd_norm(w)) < 1e-6);
  }
}

TEST_CASE("group means: isolated nodes, singletons, and the naive oracle") {
  // Node 3 is isolated; node 0's only neighbor is 1 (unknown in Eval mode).
  std::vector<Edge> edges{{0, 1}, {1, 2}};
  Matrix x(4, 3);
  x(1, 0) = 1.0;
  auto g = build_graph(edges, x, {0, 1, 0, 1});
  Split s{{0, 0, 1, 1}, {1, 1, 0, 0}, {0, 0, 0, 0}};
  auto m = group_means(partition_neighbors(g, s, PartitionMode::Eval), x);
  CHECK(m.unknown.row(0)[0] == 1.0);
  CHECK(m.unknown.row(0)[1] == 0.0);
  for (const Matrix* mm : {&m.fraud, &m.benign, &m.unknown})
    for (double v : mm->row(3)) CHECK(v == 0.0);

  std::mt19937_64 rng(6);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto rg = testing::random_graph(20, 0.2, 4, seed, seed % 4);
    auto rs = testing::random_split(20, seed + 50);
    const Matrix h = random_matrix(20, 4, rng);
    for (bool train_mode : {true, false}) {
      auto gm = group_means(partition_neighbors(rg, rs, train_mode ? PartitionMode::Train : PartitionMode::Eval), h);
      auto oracle = testing::naive_partition(rg, rs, train_mode);
      for (std::size_t i = 0; i < 20; ++i) {
        CHECK(testing::max_abs_diff(gm.fraud.row(i), testing::naive_mean(h, oracle.fraud[i])) < 1e-12);
        CHECK(testing::max_abs_diff(gm.benign.row(i), testing::naive_mean(h, oracle.benign[i])) < 1e-12);
        CHECK(testing::max_abs_diff(gm.unknown.row(i), testing::naive_mean(h, oracle.unknown[i])) < 1e-12);
      }
    }
  }
}

TEST_CASE("isolated node messages") {
  std::mt19937_64 rng(7);
  std::vector<Edge> edges{{0, 1}};
  auto g = build_graph(edges, random_matrix(3, 3, rng), {1, 0, 0});
  Split s{{1, 1, 0}, {0, 0, 1}, {0, 0, 0}};
  auto part = partition_neighbors(g, s, PartitionMode::Train);
  auto p = FgcLayerParams::init(3, 4, rng);
  Tape t;
  auto v = bind(t, p);
  Var h = t.constant(g.features());
  auto msg = group_messages(t, part, h, v, gate_alpha(t, v, h));
  for (Var f : {msg.fraud, msg.benign, msg.unknown})
    for (double x : t.value(f).row(2)) CHECK(x == 0.0);
  CHECK(t.value(msg.self).row(2)[0] != 0.0);
  CHECK(t.value(msg.self) == t.value(nd::linear(t, h, v.w_self)));
}

TEST_CASE("fuse: zero messages and layer-norm contract") {
  std::mt19937_64 rng(8);
  auto p = FgcLayerParams::init(3, 5, rng);
  Tape t;
  auto v = bind(t, p);
  Var z = t.constant(Matrix(4, 5));
  CHECK(t.value(fuse(t, v, {z, z, z, z})) == Matrix(4, 5));

  p.ln_shift.value = random_matrix(1, 5, rng);
  Tape t2;
  auto v2 = bind(t2, p);
  GroupMessages m{t2.constant(random_matrix(6, 5, rng)), t2.constant(random_matrix(6, 5, rng)),
                  t2.constant(random_matrix(6, 5, rng)), t2.constant(random_matrix(6, 5, rng))};
  const Matrix& out = t2.value(fuse(t2, v2, m));
  double shift_mean = 0;
  for (double x : p.ln_shift.value.data()) shift_mean += x / 5.0;
  for (std::size_t i = 0; i < 6; ++i) {
    double mean = 0, var = 0;
    for (std::size_t c = 0; c < 5; ++c) mean += out(i, c) / 5.0;
    for (std::size_t c = 0; c < 5; ++c) {
      const double centered = out(i, c) - p.ln_shift.value[c];
      var += centered * centered / 5.0;
    }
    CHECK(mean == doctest::Approx(shift_mean).epsilon(1e-12));
    CHECK(var <= 1.0 + 1e-12);
  }
}

TEST_CASE("fuse backward matches finite differences") {
  std::mt19937_64 rng(9);
  auto p = FgcLayerParams::init(3, 4, rng);
  randomize(p, rng);
  std::vector<nd::Parameter> inputs;
  for (int k = 0; k < 4; ++k) inputs.emplace_back("m" + std::to_string(k), random_matrix(5, 4, rng));
  std::vector<nd::Parameter*> ps{&p.w_fuse, &p.ln_gain, &p.ln_shift};
  for (auto& in : inputs) ps.push_back(&in);
  const Matrix r = random_matrix(5, 4, rng);
  auto report = nd::finite_diff_check(
      [&](Tape& t) {
        auto v = bind(t, p);
        GroupMessages m{t.parameter(inputs[0]), t.parameter(inputs[1]), t.parameter(inputs[2]),
                        t.parameter(inputs[3])};
        return nd::sum_squares(t, nd::add(t, fuse(t, v, m), t.constant(r)));
      },
      ps, {.rel_tol = 1e-5});
  CHECK(report.passed);
}

TEST_CASE("residual completion") {
  std::mt19937_64 rng(10);
  auto same = FgcLayerParams::init(4, 4, rng);
  auto wide = FgcLayerParams::init(3, 4, rng);
  CHECK_FALSE(same.res_proj.has_value());
  REQUIRE(wide.res_proj.has_value());
  const Matrix h4 = random_matrix(5, 4, rng), h3 = random_matrix(5, 3, rng);
  Tape t;
  auto vs = bind(t, same);
  auto vw = bind(t, wide);
  CHECK(t.value(residual_complete(t, t.constant(Matrix(5, 4)), t.constant(h4), vs)) == h4);
  CHECK(t.value(residual_complete(t, t.constant(h4), t.constant(Matrix(5, 4)), vs)) == h4);
  CHECK(t.value(residual_complete(t, t.constant(h4), t.constant(h3), vw)) == h4);
}

TEST_CASE("layer_forward on zero weights returns the residual") {
  std::vector<Edge> edges{{0, 1}};
  const Matrix x = Matrix::from_rows({{0.5, -1.0, 2.0}, {1.5, 0.25, -0.75}});
  auto g = build_graph(edges, x, {0, 1});
  Split s{{1, 0}, {0, 1}, {0, 0}};
  auto part = partition_neighbors(g, s, PartitionMode::Train);
  std::mt19937_64 rng(11);
  for (std::size_t hidden : {3u, 5u}) {
    auto p = FgcLayerParams::init(3, hidden, rng);
    for (auto* w : {&p.w_self, &p.w_fraud, &p.w_benign, &p.w_fuse}) w->value.fill(0.0);
    Tape t;
    auto v = bind(t, p);
    const Matrix out = t.value(layer_forward(t, part, t.constant(x), v));
    CHECK(out == (hidden == 3 ? x : Matrix(2, hidden)));
  }
}

TEST_CASE("Eval partition zeroes the fraud and benign messages") {
  auto g = testing::random_graph(25, 0.3, 4, 12);
  auto s = testing::random_split(25, 13);
  std::mt19937_64 rng(14);
  auto p = FgcLayerParams::init(4, 6, rng);
  auto part = partition_neighbors(g, s, PartitionMode::Eval);
  Tape t;
  auto v = bind(t, p);
  Var h = t.constant(g.features());
  auto m = group_messages(t, part, h, v, gate_alpha(t, v, h));
  CHECK(t.value(m.fraud) == Matrix(25, 6));
  CHECK(t.value(m.benign) == Matrix(25, 6));
}

TEST_CASE("layer_forward equals a straight-line oracle on 8 nodes") {
  std::vector<Edge> edges{{0, 1}, {0, 2}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 0}, {1, 6}};
  std::mt19937_64 rng(15);
  auto g = build_graph(edges, random_matrix(8, 5, rng), {1, 0, 0, 1, 0, 0, 1, 0});  // node 7 isolated
  Split s{{1, 1, 0, 1, 1, 0, 0, 0}, {0, 0, 1, 0, 0, 0, 1, 0}, {0, 0, 0, 0, 0, 1, 0, 1}};
  for (std::size_t hidden : {5u, 6u}) {
    auto p = FgcLayerParams::init(5, hidden, rng);
    randomize(p, rng);
    for (bool train_mode : {true, false}) {
      auto part = partition_neighbors(g, s, train_mode ? PartitionMode::Train : PartitionMode::Eval);
      Tape t;
      auto v = bind(t, p);
      const Matrix got = t.value(layer_forward(t, part, t.constant(g.features()), v));
      const Matrix want = straight_line_layer(g, s, train_mode, g.features(), p);
      CHECK(testing::max_abs_diff(got.data(), want.data()) < 1e-12);
      CHECK(got.all_finite());
    }
  }
}

TEST_CASE("layer gradients match finite differences") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    auto g = testing::random_graph(8, 0.35, 5, 300 + seed, 1);
    auto s = testing::random_split(8, 400 + seed);
    auto part = partition_neighbors(g, s, PartitionMode::Train);
    std::mt19937_64 rng(seed);
    auto p = FgcLayerParams::init(5, 4, rng);
    randomize(p, rng);
    const Matrix r = random_matrix(8, 4, rng);
    auto report = nd::finite_diff_check(
        [&](Tape& t) {
          auto v = bind(t, p);
          return nd::sum_squares(t, nd::add(t, layer_forward(t, part, t.constant(g.features()), v), t.constant(r)));
        },
        p.parameters(), {.rel_tol = 1e-4});
    CHECK(report.passed);
  }
}

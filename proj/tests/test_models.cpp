#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "doctest.h"
#include "fgc/checkpoint.hpp"
#include "fgc/model.hpp"
#include "fgc/ops.hpp"
#include "support.hpp"

using namespace fgc;
using nd::Matrix;
using testing::random_matrix;

namespace {

constexpr ModelKind kAllKinds[] = {ModelKind::FgcComp, ModelKind::Mlp, ModelKind::SageMean};

Model make_model(ModelKind kind, std::size_t in, std::size_t hidden = 6, std::uint64_t seed = 3) {
  return Model(ModelConfig{kind, in, hidden, 1, seed});
}

// Applies node permutation `perm` (new index of old node i is perm[i]).
Graph permute_graph(const Graph& g, const std::vector<std::uint32_t>& perm) {
  std::vector<Edge> edges;
  for (auto [i, j] : edge_list(g)) edges.emplace_back(perm[i], perm[j]);
  Matrix x(g.num_nodes(), g.feature_dim());
  std::vector<std::uint8_t> y(g.num_nodes());
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    for (std::size_t c = 0; c < g.feature_dim(); ++c) x(perm[i], c) = g.features()(i, c);
    y[perm[i]] = g.labels()[i];
  }
  return build_graph(edges, x, y);
}

Split permute_split(const Split& s, const std::vector<std::uint32_t>& perm) {
  Split out{std::vector<std::uint8_t>(s.train.size()), std::vector<std::uint8_t>(s.train.size()),
            std::vector<std::uint8_t>(s.train.size())};
  for (std::size_t i = 0; i < perm.size(); ++i) {
    out.train[perm[i]] = s.train[i];
    out.val[perm[i]] = s.val[i];
    out.test[perm[i]] = s.test[i];
  }
  return out;
}

double train_loss(Model& m, const Graph& g, const Split& s) {
  nd::Tape t;
  auto nodes = s.train_nodes();
  return t.value(nd::bce_with_logits(t, model_forward(t, m, g, s, PartitionMode::Train), g.labels(), nodes))[0];
}

}  // namespace

TEST_CASE("model kind names round-trip") {
  for (auto k : kAllKinds) CHECK(parse_model_kind(to_string(k)) == k);
  CHECK_THROWS_AS(parse_model_kind("gat"), std::invalid_argument);
}

TEST_CASE("Mlp gives identical logits to identical feature rows") {
  std::vector<Edge> edges{{0, 2}};
  Matrix x = Matrix::from_rows({{0.3, -0.2}, {0.3, -0.2}, {1.0, 2.0}});
  auto g = build_graph(edges, x, {0, 1, 0});
  Split s{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  auto m = make_model(ModelKind::Mlp, 2);
  auto z = model_logits(m, g, s, PartitionMode::Eval);
  CHECK(z[0] == z[1]);
  CHECK(z[0] != z[2]);
}

TEST_CASE("Eval-mode logits ignore val and test labels") {
  auto g = testing::random_graph(40, 0.15, 5, 21);
  auto s = make_split(g, {}, 4);
  std::mt19937_64 rng(22);
  for (auto kind : kAllKinds) {
    auto m = make_model(kind, 5);
    const auto before = predict_proba(m, g, s);
    std::vector<std::uint8_t> y(g.labels().begin(), g.labels().end());
    for (std::size_t i = 0; i < y.size(); ++i)
      if (!s.train[i]) y[i] = static_cast<std::uint8_t>(rng() & 1);
    CHECK(predict_proba(m, g.with_labels(y), s) == before);
  }
}

TEST_CASE("SageMean with uniform neighborhoods equals an Mlp on duplicated input") {
  // Every neighbor of every node has feature row u, and every node has a neighbor.
  const Matrix u = Matrix::from_rows({{0.7, -1.2, 0.4}});
  std::vector<Edge> edges{{0, 1}, {2, 3}, {4, 5}};
  Matrix x(6, 3);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t c = 0; c < 3; ++c) x(i, c) = u(0, c);
  auto g = build_graph(edges, x, {0, 1, 0, 1, 0, 0});
  Split s{{1, 1, 0, 0, 0, 0}, {0, 0, 1, 1, 0, 0}, {0, 0, 0, 0, 1, 1}};

  auto sage = make_model(ModelKind::SageMean, 3, 4, 9);
  const auto got = model_logits(sage, g, s, PartitionMode::Eval);

  // Oracle: relu(W [x_i ‖ x_i] + b) followed by the same head, by hand.
  auto& layer = sage.sage_layers().at(0);
  auto& h1 = sage.head_hidden();
  auto& h2 = sage.head_out();
  for (std::size_t i = 0; i < 6; ++i) {
    std::vector<double> dup;
    for (int rep = 0; rep < 2; ++rep)
      for (std::size_t c = 0; c < 3; ++c) dup.push_back(x(i, c));
    std::vector<double> a(4), b(4);
    for (std::size_t r = 0; r < 4; ++r) {
      double z = layer.bias.value[r];
      for (std::size_t c = 0; c < 6; ++c) z += layer.weight.value(r, c) * dup[c];
      a[r] = std::max(z, 0.0);
    }
    for (std::size_t r = 0; r < 4; ++r) {
      double z = h1.bias.value[r];
      for (std::size_t c = 0; c < 4; ++c) z += h1.weight.value(r, c) * a[c];
      b[r] = std::max(z, 0.0);
    }
    double logit = h2.bias.value[0];
    for (std::size_t c = 0; c < 4; ++c) logit += h2.weight.value(0, c) * b[c];
    CHECK(std::abs(got[i] - logit) < 1e-12);
  }
}

TEST_CASE("predict_proba: zero head, monotonicity, scalar oracle") {
  auto g = testing::random_graph(30, 0.2, 4, 31);
  auto s = make_split(g, {}, 1);
  for (auto kind : kAllKinds) {
    auto m = make_model(kind, 4);
    const auto z = model_logits(m, g, s, PartitionMode::Eval);
    const auto p = predict_proba(m, g, s);
    for (std::size_t i = 0; i < p.size(); ++i) {
      CHECK(std::abs(p[i] - 1.0 / (1.0 + std::exp(-z[i]))) < 1e-12);
      CHECK(p[i] > 0.0);
      CHECK(p[i] < 1.0);
      for (std::size_t j = 0; j < p.size(); ++j)
        if (z[i] > z[j]) CHECK(p[i] >= p[j]);
    }
    m.head_out().weight.value.fill(0.0);
    m.head_out().bias.value.fill(0.0);
    for (double v : predict_proba(m, g, s)) CHECK(v == 0.5);
  }
}

TEST_CASE("node relabeling permutes logits") {
  auto g = testing::random_graph(25, 0.2, 3, 41, 2);
  auto s = testing::random_split(25, 42);
  std::vector<std::uint32_t> perm(25);
  std::iota(perm.begin(), perm.end(), 0u);
  std::mt19937_64 rng(43);
  std::shuffle(perm.begin(), perm.end(), rng);
  auto pg = permute_graph(g, perm);
  auto ps = permute_split(s, perm);
  for (auto kind : kAllKinds) {
    for (auto mode : {PartitionMode::Train, PartitionMode::Eval}) {
      auto m = make_model(kind, 3);
      const auto z = model_logits(m, g, s, mode);
      const auto pz = model_logits(m, pg, ps, mode);
      for (std::size_t i = 0; i < 25; ++i) CHECK(std::abs(z[i] - pz[perm[i]]) < 1e-12);
    }
  }
}

TEST_CASE("every registered parameter is distinct and influences the loss") {
  auto g = testing::random_graph(20, 0.3, 4, 51);
  auto s = make_split(g, {}, 5);
  for (auto kind : kAllKinds) {
    for (std::size_t hidden : {4u, 6u}) {
      auto m = make_model(kind, 4, hidden);
      auto params = m.parameters();
      std::set<nd::Parameter*> unique(params.begin(), params.end());
      CHECK(unique.size() == params.size());
      std::set<std::string> names;
      for (auto* p : params) names.insert(p->name);
      CHECK(names.size() == params.size());

      const double base = train_loss(m, g, s);
      for (auto* p : params) {
        CAPTURE(p->name);
        CAPTURE(to_string(kind));
        CAPTURE(hidden);
        const Matrix keep = p->value;
        // Alternating signs: a uniform shift of a weight that reads a
        // layer-normed input cancels, since each normalized row sums to zero.
        for (std::size_t k = 0; k < p->value.size(); ++k) p->value[k] += k % 2 ? -0.05 : 0.07;
        CHECK(train_loss(m, g, s) != base);
        p->value = keep;
      }
    }
  }
}

TEST_CASE("checkpoint round trip and mismatch errors") {
  auto dir = testing::scratch_dir("models_ckpt");
  auto g = testing::random_graph(20, 0.3, 4, 61);
  auto s = make_split(g, {}, 6);
  for (auto kind : kAllKinds) {
    auto m = make_model(kind, 4, 6, 1);
    const auto path = dir / (std::string(to_string(kind)) + ".ckpt");
    save_checkpoint(m, path);
    auto other = make_model(kind, 4, 6, 2);
    CHECK(model_logits(other, g, s, PartitionMode::Eval) != model_logits(m, g, s, PartitionMode::Eval));
    load_checkpoint(other, path);
    CHECK(model_logits(other, g, s, PartitionMode::Eval) == model_logits(m, g, s, PartitionMode::Eval));

    auto narrow = make_model(kind, 4, 5, 1);
    try {
      load_checkpoint(narrow, path);
      FAIL("expected a shape mismatch");
    } catch (const CheckpointError& e) {
      CHECK(e.kind() == CheckpointError::Kind::ShapeMismatch);
    }
  }
  auto m = make_model(ModelKind::Mlp, 4);
  try {
    load_checkpoint(m, dir / "fgc.ckpt");
    FAIL("expected a kind mismatch");
  } catch (const CheckpointError& e) {
    CHECK(e.kind() == CheckpointError::Kind::ShapeMismatch);
  }
  try {
    load_checkpoint(m, dir / "missing.ckpt");
    FAIL("expected an io error");
  } catch (const CheckpointError& e) {
    CHECK(e.kind() == CheckpointError::Kind::Io);
  }
}

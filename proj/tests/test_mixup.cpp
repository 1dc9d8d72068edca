#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "gsmote/mixup.hpp"
#include "oracles.hpp"

using namespace gsmote;
using ad::Var;

TEST_SUITE("mixup") {

TEST_CASE("pseudo labels") {
  const std::vector<int> labels{0, 1, 1, 0};
  const NodeSet train{0, 1};
  SUBCASE("uniform predictions with a near-1 threshold keep only train labels") {
    const Matrix p = Matrix::Constant(4, 2, 0.5);
    const auto y = pseudo_labels(p, labels, train, 1.0 - 1e-9);
    CHECK(y == std::vector<int>{0, 1, kUnknownLabel, kUnknownLabel});
  }
  SUBCASE("confidence threshold 0.3") {
    Matrix p(4, 4);
    p << 0.25, 0.25, 0.25, 0.25,  //
        0.25, 0.25, 0.25, 0.25,   //
        0.31, 0.23, 0.23, 0.23,   //
        0.29, 0.2367, 0.2367, 0.2366;
    const auto y = pseudo_labels(p, labels, train, 0.3);
    CHECK(y[2] == 0);
    CHECK(y[3] == kUnknownLabel);
  }
  SUBCASE("train nodes keep ground truth against the prediction") {
    Matrix p(4, 2);
    p << 0.0, 1.0, 1.0, 0.0, 0.9, 0.1, 0.1, 0.9;
    const auto y = pseudo_labels(p, labels, train, 0.3);
    CHECK(y[0] == 0);
    CHECK(y[1] == 1);
    CHECK(y[2] == 0);
    CHECK(y[3] == 1);
  }
}

TEST_CASE("mixed nodes (property)") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    Rng data(seed);
    const Matrix h = fixture::random_matrix(data, 40, 5);
    std::vector<int> eff(40);
    for (int v = 0; v < 40; ++v) eff[static_cast<std::size_t>(v)] = v % 9 == 8 ? kUnknownLabel : v % 4;
    const std::vector<int> minority{2, 3};
    MixupConfig cfg;
    cfg.b = data.uniform(0.05, 1.0);
    Rng rng(seed);
    const MixedBatch batch = mix_nodes(h, eff, 4, minority, 30, cfg, rng);
    CHECK(batch.size() == 30);
    for (std::size_t k = 0; k < batch.size(); ++k) {
      const auto row = static_cast<Eigen::Index>(k);
      const int yv = eff[static_cast<std::size_t>(batch.first[k])];
      const int yu = eff[static_cast<std::size_t>(batch.second[k])];
      CHECK((yv == 2 || yv == 3));
      CHECK((yu == 0 || yu == 1));
      const double d = batch.deltas[k];
      CHECK(d >= 0.0);
      CHECK(d < cfg.b);
      CHECK(std::abs(batch.targets.row(row).sum() - 1.0) < 1e-12);
      CHECK(batch.targets(row, yv) >= 1.0 - cfg.b);
      CHECK((batch.targets.row(row).array() != 0.0).count() <= 2);
      const Vector want = (1.0 - d) * h.row(batch.first[k]).transpose() + d * h.row(batch.second[k]).transpose();
      CHECK((batch.embeddings.row(row).transpose() - want).norm() < 1e-12);
    }
  }
}

TEST_CASE("b = 0.5 keeps the minority mass at least one half") {
  Rng data(1);
  const Matrix h = fixture::random_matrix(data, 20, 3);
  std::vector<int> eff(20);
  for (int v = 0; v < 20; ++v) eff[static_cast<std::size_t>(v)] = v % 2;
  MixupConfig cfg;
  Rng rng(2);
  const MixedBatch batch = mix_nodes(h, eff, 2, std::vector<int>{1}, 100, cfg, rng);
  for (std::size_t k = 0; k < batch.size(); ++k) CHECK(batch.targets(static_cast<Eigen::Index>(k), 1) >= 0.5);
}

TEST_CASE("small b approaches the one-hot minority label") {
  Rng data(1);
  const Matrix h = fixture::random_matrix(data, 10, 3);
  std::vector<int> eff(10);
  for (int v = 0; v < 10; ++v) eff[static_cast<std::size_t>(v)] = v % 2;
  MixupConfig cfg;
  cfg.b = 1e-9;
  Rng rng(2);
  const MixedBatch batch = mix_nodes(h, eff, 2, std::vector<int>{1}, 10, cfg, rng);
  for (std::size_t k = 0; k < batch.size(); ++k) CHECK(batch.targets(static_cast<Eigen::Index>(k), 1) > 1.0 - 1e-9);
}

TEST_CASE("mix prime draws parents from train nodes only") {
  Rng data(5);
  const Matrix h = fixture::random_matrix(data, 30, 3);
  std::vector<int> labels(30);
  for (int v = 0; v < 30; ++v) labels[static_cast<std::size_t>(v)] = v % 3;
  NodeSet train{0, 1, 2, 3, 4, 5, 6, 7, 8};
  const auto eff = train_only_labels(labels, train, 30);
  MixupConfig cfg;
  cfg.use_pseudo = false;
  Rng rng(1);
  const MixedBatch batch = mix_nodes(h, eff, 3, std::vector<int>{2}, 50, cfg, rng);
  for (std::size_t k = 0; k < batch.size(); ++k) {
    CHECK(batch.first[k] <= 8);
    CHECK(batch.second[k] <= 8);
  }
}

TEST_CASE("mix_nodes errors") {
  const Matrix h = Matrix::Ones(4, 2);
  MixupConfig cfg;
  Rng rng(1);
  CHECK_THROWS(mix_nodes(h, std::vector<int>{0, 0, 0, 0}, 2, std::vector<int>{1}, 3, cfg, rng));
  CHECK_THROWS(mix_nodes(h, std::vector<int>{1, 1, -1, -1}, 2, std::vector<int>{1}, 3, cfg, rng));
  cfg.b = 0.0;
  CHECK_THROWS(mix_nodes(h, std::vector<int>{0, 1, 0, 1}, 2, std::vector<int>{1}, 3, cfg, rng));
}

TEST_CASE("mix_loss") {
  SUBCASE("prediction equal to the label gives the label entropy") {
    const Matrix t = (Matrix(1, 3) << 0.7, 0.3, 0.0).finished();
    const NodeSet rows{0};
    const double entropy = -(0.7 * std::log(0.7) + 0.3 * std::log(0.3));
    CHECK(mix_loss(Var::constant(t), t, rows).item() == doctest::Approx(entropy).epsilon(1e-14));
  }
  SUBCASE("half-half label against a uniform two-class prediction") {
    const Matrix t = (Matrix(1, 2) << 0.5, 0.5).finished();
    const NodeSet rows{0};
    CHECK(mix_loss(Var::constant(Matrix::Constant(1, 2, 0.5)), t, rows).item() ==
          doctest::Approx(std::log(2.0)).epsilon(1e-14));
  }
  SUBCASE("random instances match the scalar oracle") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Rng rng(seed);
      const Matrix p = ad::row_softmax(Var::constant(fixture::random_matrix(rng, 6, 4, 2.0))).data();
      Matrix t = Matrix::Zero(3, 4);
      for (int k = 0; k < 3; ++k) {
        const double d = rng.uniform(0.0, 0.5);
        t(k, k) = 1.0 - d;
        t(k, 3) = d;
      }
      const NodeSet rows{1, 4, 5};
      CHECK(std::abs(mix_loss(Var::constant(p), t, rows).item() - oracle::soft_cross_entropy(p, t, rows)) < 1e-12);
    }
  }
  SUBCASE("empty set") { CHECK_THROWS(mix_loss(Var::constant(Matrix::Ones(2, 2)), Matrix(0, 2), NodeSet{})); }
}

TEST_CASE("insertion strategies") {
  const AttributedGraph g = fixture::random_graph(6, 8, 2, 3, 0.4);
  Rng rng(2);
  const Var real = Var::constant(fixture::random_matrix(rng, 8, 3));
  std::vector<int> eff(8);
  for (int v = 0; v < 8; ++v) eff[static_cast<std::size_t>(v)] = v % 2;
  MixupConfig cfg;
  Rng draw(3);
  MixedBatch batch = mix_nodes(real.data(), eff, 2, std::vector<int>{1}, 4, cfg, draw);
  const Var rows = Var::constant(batch.embeddings);
  const EdgeGenerator gen{Var::constant(fixture::random_matrix(rng, 3, 3, 2.0))};
  auto fresh = [&] { return AugmentedGraph::with_embeddings(g.adjacency, real, eff); };

  SUBCASE("vanilla leaves mixed nodes isolated") {
    AugmentedGraph aug = fresh();
    insert_mixed(aug, gen, rows, batch, MixInsertion::vanilla, EdgeMode::threshold, 0.5);
    CHECK(aug.extra == 4);
    CHECK(aug.degree().data().bottomRows(4).isZero());
    CHECK(aug.provenance.back() == Provenance::mixed);
  }
  SUBCASE("heuristic rows interpolate parent adjacency rows") {
    batch.deltas[0] = 0.0;
    AugmentedGraph aug = fresh();
    insert_mixed(aug, gen, rows, batch, MixInsertion::heuristic, EdgeMode::threshold, 0.5);
    const Matrix a(*g.adjacency);
    CHECK(aug.extra_edges.data().row(0) == a.row(batch.first[0]));
    for (int k = 1; k < 4; ++k) {
      const double d = batch.deltas[static_cast<std::size_t>(k)];
      const Matrix want = (1.0 - d) * a.row(batch.first[static_cast<std::size_t>(k)]) + d * a.row(batch.second[static_cast<std::size_t>(k)]);
      CHECK((aug.extra_edges.data().row(k) - want).cwiseAbs().maxCoeff() < 1e-15);
    }
  }
  SUBCASE("predicted threshold rows match the edge oracle") {
    AugmentedGraph aug = fresh();
    insert_mixed(aug, gen, rows, batch, MixInsertion::predicted, EdgeMode::threshold, 0.5);
    const Matrix scores = oracle::predict_edges(gen.S.data(), rows.data(), real.data());
    CHECK(aug.extra_edges.data() == (scores.array() > 0.5).cast<double>().matrix());
  }
  SUBCASE("unknown strategy name") { CHECK_THROWS(parse_insertion("teleport")); }
}

}

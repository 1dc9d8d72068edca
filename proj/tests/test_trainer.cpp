#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "gsmote/trainer.hpp"
#include "oracles.hpp"

using namespace gsmote;

namespace {

ExperimentConfig small_config(Variant v) {
  ExperimentConfig c;
  c.variant = v;
  c.hidden_dim = 8;
  c.learning_rate = 0.01;
  c.max_epochs = 5;
  c.pretrain_epochs = 5;
  c.pretrain_window = 2;
  return c;
}

struct Step {
  ModelParams before;
  ModelParams after;
  EpochRecord record;
};

Step one_step(const fixture::Twelve& t, const ExperimentConfig& c, std::uint64_t seed = 3) {
  const TrainingContext ctx = TrainingContext::build(t.graph, t.masks, c);
  Rng init(seed);
  ModelParams p = ModelParams::init(t.graph.feature_dim(), c.hidden_dim, t.graph.m, c.base_model, init);
  Step s{p.clone(), ModelParams{}, EpochRecord{}};
  Optimizers opt = Optimizers::make(c);
  Rng rng(seed + 100);
  s.record = train_epoch(p, opt, ctx, c, predict(p, ctx, c), rng);
  s.after = std::move(p);
  return s;
}

Matrix dense(const AttributedGraph& g) { return Matrix(*g.adjacency); }

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("variant names round-trip") {
  for (const char* name : {"origin", "oversample_raw", "reweight", "smote_raw", "embed_smote", "gsmote_T", "gsmote_O",
                           "gsmote_preT", "gsmote_preO"}) {
    CHECK(to_string(parse_variant(name)) == name);
  }
  CHECK_THROWS(parse_variant("gsmote"));
  CHECK(edge_mode(Variant::gsmote_preO) == EdgeMode::soft);
  CHECK(edge_mode(Variant::gsmote_T) == EdgeMode::threshold);
}

TEST_CASE("origin epoch loss matches a hand computation") {
  const auto t = fixture::twelve_node();
  ExperimentConfig c = small_config(Variant::origin);
  const Step s = one_step(t, c);
  CHECK(s.record.synthetic_nodes == 0);
  CHECK(s.record.edge_loss == 0.0);
  const Matrix a = dense(t.graph);
  const Matrix h1 = oracle::sage_layer(a, t.graph.features, s.before.encoder.weight.data());
  const Matrix h2 = oracle::sage_layer(a, h1, s.before.classifier.weight.data());
  const Matrix p = oracle::classify(a, h2, s.before.head.weight.data(), false);
  CHECK(std::abs(s.record.loss - oracle::node_loss(p, t.graph.labels, t.masks.train)) < 1e-12);
  // S takes no part in the origin objective.
  CHECK(s.after.edge_gen.S.data() == s.before.edge_gen.S.data());
}

TEST_CASE("oversampling objective adds lambda times the edge loss") {
  const auto t = fixture::twelve_node();
  for (Variant v : {Variant::gsmote_T, Variant::gsmote_O}) {
    ExperimentConfig c = small_config(v);
    c.lambda = 0.25;
    const Step s = one_step(t, c);
    const Matrix h1 = oracle::sage_layer(dense(t.graph), t.graph.features, s.before.encoder.weight.data());
    const double edge = oracle::edge_loss(s.before.edge_gen.S.data(), h1, dense(t.graph));
    CHECK(std::abs(s.record.edge_loss - edge) < 1e-10);
    CHECK(std::abs(s.record.loss - (s.record.node_loss + 0.25 * edge)) < 1e-12);
    // Class 2 has 2 train nodes against 4; scale 2 adds 4.
    CHECK(s.record.synthetic_nodes == 4);
    CHECK(s.after.edge_gen.S.data() != s.before.edge_gen.S.data());
  }
}

TEST_CASE("with lambda = 0 only the soft variant trains the edge generator") {
  const auto t = fixture::twelve_node();
  ExperimentConfig c = small_config(Variant::gsmote_T);
  c.lambda = 0.0;
  Step s = one_step(t, c);
  CHECK(s.record.edge_loss == 0.0);
  CHECK(s.after.edge_gen.S.data() == s.before.edge_gen.S.data());
  c.variant = Variant::gsmote_O;
  s = one_step(t, c);
  CHECK(s.after.edge_gen.S.data() != s.before.edge_gen.S.data());
}

TEST_CASE("reweight on a balanced train set is origin") {
  auto t = fixture::twelve_node();
  t.masks.train = {0, 1, 2, 3, 4, 5, 6, 7, 8};
  t.masks.minority_classes.clear();
  const TrainResult a = train(small_config(Variant::origin), t.graph, t.masks, 4);
  const TrainResult b = train(small_config(Variant::reweight), t.graph, t.masks, 4);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t e = 0; e < a.history.size(); ++e) CHECK(a.history[e].loss == doctest::Approx(b.history[e].loss).epsilon(1e-13));
}

TEST_CASE("reweight balances class mass") {
  const auto t = fixture::twelve_node();
  const TrainingContext ctx = TrainingContext::build(t.graph, t.masks, small_config(Variant::reweight));
  // n_train / (m |C|): 10 / 12, 10 / 12, 10 / 6.
  CHECK(ctx.class_weights[0] == doctest::Approx(10.0 / 12.0));
  CHECK(ctx.class_weights[2] == doctest::Approx(10.0 / 6.0));
  CHECK(ctx.class_weights[0] * 4 == doctest::Approx(ctx.class_weights[2] * 2));
}

TEST_CASE("single-epoch run") {
  const auto t = fixture::twelve_node();
  ExperimentConfig c = small_config(Variant::gsmote_T);
  c.max_epochs = 1;
  const TrainResult r = train(c, t.graph, t.masks, 0);
  CHECK(r.epochs_run == 1);
  CHECK(r.history.size() == 1);
  CHECK(r.best_epoch == 1);
  CHECK(r.test.accuracy >= 0.0);
}

TEST_CASE("checkpoint is the first epoch with the best validation score") {
  const auto t = fixture::twelve_node();
  ExperimentConfig c = small_config(Variant::origin);
  c.max_epochs = 30;
  const TrainResult r = train(c, t.graph, t.masks, 2);
  REQUIRE(r.best_epoch >= 1);
  double best = -1.0;
  int first = 0;
  for (const auto& e : r.history) {
    if (e.val_f > best) {
      best = e.val_f;
      first = e.epoch;
    }
  }
  CHECK(r.best_epoch == first);
  CHECK(r.validation.macro_f == best);
}

TEST_CASE("patience stops training") {
  const auto t = fixture::twelve_node();
  ExperimentConfig c = small_config(Variant::origin);
  c.max_epochs = 400;
  c.patience = 3;
  const TrainResult r = train(c, t.graph, t.masks, 1);
  CHECK(r.epochs_run == r.best_epoch + 3);
}

TEST_CASE("training is deterministic for a seed") {
  const auto t = fixture::twelve_node();
  for (Variant v : {Variant::gsmote_T, Variant::gsmote_preO, Variant::smote_raw}) {
    ExperimentConfig c = small_config(v);
    c.mixup = v == Variant::gsmote_T ? MixupMode::mix : MixupMode::off;
    const TrainResult a = train(c, t.graph, t.masks, 9);
    const TrainResult b = train(c, t.graph, t.masks, 9);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t e = 0; e < a.history.size(); ++e) CHECK(a.history[e].loss == b.history[e].loss);
    CHECK(a.test.macro_f == b.test.macro_f);
    CHECK(a.test.macro_auc == b.test.macro_auc);
    CHECK(a.best.head.weight.data() == b.best.head.weight.data());
  }
}

TEST_CASE("pretraining lowers the edge loss") {
  const auto t = fixture::twelve_node();
  ExperimentConfig c = small_config(Variant::gsmote_preT);
  c.pretrain_epochs = 50;
  c.pretrain_min_improvement = 0.0;
  const TrainingContext ctx = TrainingContext::build(t.graph, t.masks, c);
  Rng init(0);
  ModelParams p = ModelParams::init(4, 8, 3, BaseModel::graphsage, init);
  const Matrix head = p.head.weight.data();
  const PretrainReport r = pretrain(p, ctx, c);
  CHECK(r.epochs_run >= 1);
  CHECK(r.final_edge_loss < r.initial_edge_loss);
  CHECK(p.head.weight.data() == head);
  c.pretrain_epochs = 0;
  CHECK_THROWS(c.validate());
  CHECK_THROWS(pretrain(p, ctx, c));
}

TEST_CASE("pretraining stops on a flat window") {
  const auto t = fixture::twelve_node();
  ExperimentConfig c = small_config(Variant::gsmote_preO);
  c.pretrain_epochs = 1000;
  c.pretrain_window = 1;
  c.pretrain_min_improvement = 0.5;
  const TrainingContext ctx = TrainingContext::build(t.graph, t.masks, c);
  Rng init(0);
  ModelParams p = ModelParams::init(4, 8, 3, BaseModel::graphsage, init);
  CHECK(pretrain(p, ctx, c).epochs_run == 2);
}

TEST_CASE("every variant and mixup mode trains with finite losses") {
  const auto t = fixture::twelve_node();
  for (int v = 0; v <= static_cast<int>(Variant::gsmote_preO); ++v) {
    for (MixupMode mode : {MixupMode::off, MixupMode::mix, MixupMode::mix_prime}) {
      ExperimentConfig c = small_config(static_cast<Variant>(v));
      c.mixup = is_graph_smote(c.variant) || c.variant == Variant::origin ? mode : MixupMode::off;
      for (BaseModel base : {BaseModel::graphsage, BaseModel::gcn}) {
        c.base_model = base;
        const TrainResult r = train(c, t.graph, t.masks, 5);
        CAPTURE(to_string(c.variant));
        for (const auto& e : r.history) CHECK(std::isfinite(e.loss));
        if (c.mixup != MixupMode::off) CHECK(r.history.front().mixed_nodes == 10);
      }
    }
  }
}

TEST_CASE("mean aggregation and class-balanced plans train") {
  const auto t = fixture::twelve_node();
  ExperimentConfig c = small_config(Variant::gsmote_O);
  c.aggregation = Aggregation::mean;
  c.oversample_mode = ScaleMode::class_balanced;
  const TrainResult r = train(c, t.graph, t.masks, 5);
  // round(10 / 3) = 3 lifts class 2 by one node.
  CHECK(r.history.front().synthetic_nodes == 1);
  for (const auto& e : r.history) CHECK(std::isfinite(e.loss));
}

TEST_CASE("baselines") {
  const auto t = fixture::twelve_node();
  SUBCASE("synthetic counts follow the plan") {
    for (Variant v : {Variant::oversample_raw, Variant::smote_raw, Variant::embed_smote}) {
      const TrainResult r = run_baseline(v, t.graph, t.masks, small_config(v), 0);
      CHECK(r.history.front().synthetic_nodes == 4);
    }
    CHECK(run_baseline(Variant::reweight, t.graph, t.masks, small_config(Variant::origin), 0).history.front().synthetic_nodes == 0);
  }
  SUBCASE("embedding-space variants are not baselines") {
    CHECK_THROWS(run_baseline(Variant::gsmote_T, t.graph, t.masks, small_config(Variant::origin), 0));
  }
  SUBCASE("raw augmentation copies the seed adjacency row") {
    const TrainingContext ctx = TrainingContext::build(t.graph, t.masks, small_config(Variant::smote_raw));
    Rng rng(1);
    const RawAugmentation raw = augment_raw(t.graph, t.masks.train, ctx.plan, true, rng);
    REQUIRE(raw.graph.n == 16);
    REQUIRE_NOTHROW(raw.graph.validate());
    const Matrix a = dense(raw.graph);
    const Matrix base = dense(t.graph);
    CHECK(a.topLeftCorner(12, 12) == base);
    for (int i = 0; i < 4; ++i) {
      const NodeIndex seed = raw.batch.seeds[static_cast<std::size_t>(i)];
      CHECK(raw.graph.labels[static_cast<std::size_t>(12 + i)] == 2);
      CHECK(a.row(12 + i).head(12) == base.row(seed));
      CHECK(a.row(12 + i).tail(4).isZero());
      CHECK(raw.train[static_cast<std::size_t>(10 + i)] == 12 + i);
    }
    Rng rng2(1);
    const RawAugmentation dup = augment_raw(t.graph, t.masks.train, ctx.plan, false, rng2);
    for (int i = 0; i < 4; ++i) {
      CHECK(dup.graph.features.row(12 + i) == t.graph.features.row(dup.batch.seeds[static_cast<std::size_t>(i)]));
    }
  }
}

TEST_CASE("config validation") {
  ExperimentConfig c;
  CHECK_NOTHROW(c.validate());
  c.max_epochs = 0;
  CHECK_THROWS(c.validate());
  c = ExperimentConfig{};
  c.lambda = -1.0;
  CHECK_THROWS(c.validate());
  c = ExperimentConfig{};
  c.eta = 1.0;
  CHECK_THROWS(c.validate());
  c = ExperimentConfig{};
  c.split.imbalance_ratio = 0.0;
  CHECK_THROWS(c.validate());
}

}

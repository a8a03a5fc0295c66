#include <cmath>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "driftlearn/eval.hpp"
#include "driftlearn/pseudo_label.hpp"
#include "driftlearn/rng.hpp"
#include "driftlearn/training.hpp"
#include "test_util.hpp"

using namespace driftlearn;
using testutil::random_matrix;

namespace {

RealMatrix unit_rows(RealMatrix m) {
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double n = norm(m.row(r));
    for (std::size_t c = 0; c < m.cols; ++c) m(r, c) /= n;
  }
  return m;
}

double clustering_objective(const RealMatrix& embeddings, const CentroidSet& cs,
                            const std::vector<int>& labels) {
  double total = 0.0;
  std::vector<double> centroid(cs.u.rows);
  for (std::size_t r = 0; r < embeddings.rows; ++r) {
    const auto k = static_cast<std::size_t>(labels[r]);
    for (std::size_t c = 0; c < cs.u.rows; ++c) centroid[c] = cs.u(c, k);
    total += cosine_distance(embeddings.row(r), centroid);
  }
  return total;
}

}  // namespace

TEST_CASE("one-hot predictions pin each prototype to its sample") {
  RealMatrix emb(2, 2);
  emb(0, 0) = 1.0;  // e0 = (1, 0)
  emb(1, 1) = 1.0;  // e1 = (0, 1)
  RealMatrix probs(2, 2);
  probs(0, 0) = 1.0;
  probs(1, 1) = 1.0;
  const CentroidSet cs = centroids_from_probabilities(emb, probs);
  CHECK(cs.u(0, 0) == doctest::Approx(1.0));
  CHECK(cs.u(1, 0) == doctest::Approx(0.0));
  CHECK(cs.u(0, 1) == doctest::Approx(0.0));
  CHECK(cs.u(1, 1) == doctest::Approx(1.0));
  CHECK(cs.counts == std::vector<std::size_t>{1, 1});
}

TEST_CASE("uniform predictions put every prototype at the mean") {
  Rng rng(4);
  const RealMatrix emb = unit_rows(random_matrix(5, 3, rng, 0.1, 1.0));
  RealMatrix probs(5, 2, 0.5);
  const CentroidSet cs = centroids_from_probabilities(emb, probs);
  for (std::size_t c = 0; c < 3; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < 5; ++r) mean += emb(r, c);
    mean /= 5.0;
    CHECK(cs.u(c, 0) == doctest::Approx(mean).epsilon(1e-12));
    CHECK(cs.u(c, 1) == doctest::Approx(mean).epsilon(1e-12));
  }
}

TEST_CASE("soft weights produce the weighted mean prototype") {
  // weights (0.9, 0.1) on embeddings (1,0) and (0,1) for class 0
  RealMatrix emb(2, 2);
  emb(0, 0) = 1.0;
  emb(1, 1) = 1.0;
  RealMatrix probs(2, 2);
  probs(0, 0) = 0.9;
  probs(0, 1) = 0.1;
  probs(1, 0) = 0.1;
  probs(1, 1) = 0.9;
  const CentroidSet cs = centroids_from_probabilities(emb, probs);
  CHECK(cs.u(0, 0) == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(cs.u(1, 0) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("a class with negligible mass falls back to the global mean") {
  RealMatrix emb(2, 2);
  emb(0, 0) = 1.0;
  emb(1, 1) = 1.0;
  RealMatrix probs(2, 3);
  probs(0, 0) = 1.0;
  probs(1, 1) = 1.0;  // class 2 receives zero mass
  const CentroidSet cs = centroids_from_probabilities(emb, probs);
  CHECK(cs.counts[2] == 0);
  CHECK(cs.u(0, 2) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(cs.u(1, 2) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("init_centroids rejects an empty segment") {
  const MlpClassifier m = make_mlp(2, 4, 3, 2, 9);
  CHECK_THROWS_AS(init_centroids(m, RealMatrix(0, 2)), std::invalid_argument);
}

TEST_CASE("assignment picks the matching prototype") {
  CentroidSet cs;
  cs.u = RealMatrix(2, 3);
  cs.u(0, 0) = 1.0;                      // u0 = (1, 0)
  cs.u(0, 1) = 1.0; cs.u(1, 1) = 1.0;    // u1 = (1, 1)/sqrt2 direction
  cs.u(1, 2) = 1.0;                      // u2 = (0, 1)
  cs.counts = {1, 1, 1};

  RealMatrix emb(1, 2);
  emb(0, 1) = 1.0;  // equals u2
  CHECK(assign_labels(cs, emb) == std::vector<int>{2});
}

TEST_CASE("exact ties resolve to the lowest class index") {
  CentroidSet cs;
  cs.u = RealMatrix(2, 2);
  cs.u(0, 0) = 1.0; cs.u(1, 0) = 1.0;   // u0 = (1, 1)
  cs.u(0, 1) = 1.0; cs.u(1, 1) = -1.0;  // u1 = (1, -1)
  cs.counts = {1, 1};
  RealMatrix emb(1, 2);
  emb(0, 0) = 1.0;  // equidistant from both prototypes
  CHECK(assign_labels(cs, emb) == std::vector<int>{0});
}

TEST_CASE("assignment matches an exhaustive argmin oracle") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 2 + rng.uniform_index(4);
    CentroidSet cs;
    cs.u = random_matrix(d, 3, rng, 0.2, 1.0);
    cs.counts = {1, 1, 1};
    const RealMatrix emb = unit_rows(random_matrix(10, d, rng, 0.1, 1.0));

    const std::vector<int> got = assign_labels(cs, emb);

    for (std::size_t r = 0; r < emb.rows; ++r) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < 3; ++k) {
        std::vector<double> centroid(d);
        for (std::size_t c = 0; c < d; ++c) centroid[c] = cs.u(c, k);
        const double dist = cosine_distance(emb.row(r), centroid);
        if (dist < best_d) {
          best_d = dist;
          best = static_cast<int>(k);
        }
      }
      CHECK(got[r] == best);
    }
  }
}

TEST_CASE("assignment rejects zero-norm embeddings") {
  CentroidSet cs;
  cs.u = RealMatrix(2, 2);
  cs.u(0, 0) = 1.0;
  cs.u(1, 1) = 1.0;
  cs.counts = {1, 1};
  const RealMatrix emb(1, 2);  // zero row
  CHECK_THROWS_AS(assign_labels(cs, emb), std::invalid_argument);
}

TEST_CASE("update averages class members and keeps empty classes") {
  CentroidSet prev;
  prev.u = RealMatrix(2, 3);
  prev.u(0, 0) = 9.0;
  prev.u(0, 1) = 7.0;
  prev.u(1, 2) = 5.0;
  prev.counts = {1, 1, 1};

  RealMatrix emb(2, 2);
  emb(0, 0) = 1.0;
  emb(1, 0) = 3.0;
  const std::vector<int> labels{0, 0};
  const CentroidSet next = update_centroids(emb, labels, prev);

  CHECK(next.u(0, 0) == doctest::Approx(2.0));  // mean of 1 and 3
  CHECK(next.u(1, 0) == doctest::Approx(0.0));
  CHECK(next.counts[0] == 2);
  // untouched classes keep the previous prototype with count zero
  CHECK(next.u(0, 1) == 7.0);
  CHECK(next.u(1, 2) == 5.0);
  CHECK(next.counts[1] == 0);
  CHECK(next.counts[2] == 0);
}

TEST_CASE("label embedding of a rank-1 prototype matrix has rank 1") {
  RealMatrix u0(3, 2);
  for (std::size_t i = 0; i < 3; ++i) {
    u0(i, 0) = static_cast<double>(i + 1);
    u0(i, 1) = 2.0 * static_cast<double>(i + 1);
  }
  CHECK(gold_label_embedding(u0, 0.3).rank == 1);
  CHECK(gold_label_embedding(u0, 1.0).rank == 1);
}

TEST_CASE("full-energy label embedding makes refinement the identity") {
  Rng rng(12);
  const RealMatrix u0 = random_matrix(4, 3, rng);
  const LabelEmbedding emb = gold_label_embedding(u0, 1.0);
  CHECK(emb.rank == 3);
  const RealMatrix refined = refine_centroids(u0, emb);
  for (std::size_t i = 0; i < u0.data.size(); ++i) {
    CHECK(std::fabs(refined.data[i] - u0.data[i]) <= 1e-10);
  }
}

TEST_CASE("label embedding rank matches the singular energy cutoff") {
  Rng rng(44);
  const RealMatrix u0 = random_matrix(4, 3, rng);
  const double energy = 0.9;

  const SvdResult f = svd(u0);
  double total = 0.0;
  for (const double s : f.singular_values) total += s * s;
  std::size_t expect = f.singular_values.size();
  double cum = 0.0;
  for (std::size_t i = 0; i < f.singular_values.size(); ++i) {
    cum += f.singular_values[i] * f.singular_values[i];
    if (cum >= energy * total) {
      expect = i + 1;
      break;
    }
  }
  CHECK(gold_label_embedding(u0, energy).rank == expect);
}

TEST_CASE("label embedding rejects a rank-0 matrix") {
  CHECK_THROWS_AS(gold_label_embedding(RealMatrix(3, 2), 0.9), std::invalid_argument);
}

TEST_CASE("refinement fixes prototypes already in the gold subspace") {
  Rng rng(8);
  const RealMatrix u0 = random_matrix(4, 3, rng);
  const LabelEmbedding emb = gold_label_embedding(u0, 0.6);
  // build prototypes whose row patterns live inside the label subspace
  const RealMatrix inside = multiply(random_matrix(4, emb.rank, rng), emb.label_factor);
  const RealMatrix refined = refine_centroids(inside, emb);
  for (std::size_t i = 0; i < inside.data.size(); ++i) {
    CHECK(std::fabs(refined.data[i] - inside.data[i]) <= 1e-10);
  }
}

TEST_CASE("refinement annihilates prototypes orthogonal to the subspace") {
  RealMatrix u0(2, 2);
  u0(0, 0) = 1.0;
  u0(1, 0) = 1.0;  // rank 1, right basis along (1,1)/sqrt2... and (1,0) pattern
  // force rank 1 embedding
  const LabelEmbedding emb = gold_label_embedding(u0, 0.5);
  REQUIRE(emb.rank == 1);
  // rows proportional to the orthogonal complement of the basis vector
  const double b0 = emb.right_basis(0, 0);
  const double b1 = emb.right_basis(1, 0);
  RealMatrix u(3, 2);
  for (std::size_t r = 0; r < 3; ++r) {
    u(r, 0) = -b1 * static_cast<double>(r + 1);
    u(r, 1) = b0 * static_cast<double>(r + 1);
  }
  const RealMatrix refined = refine_centroids(u, emb);
  for (const double v : refined.data) CHECK(std::fabs(v) <= 1e-10);
}

TEST_CASE("refinement is idempotent") {
  Rng rng(10);
  const RealMatrix u0 = random_matrix(5, 4, rng);
  const LabelEmbedding emb = gold_label_embedding(u0, 0.7);
  const RealMatrix u = random_matrix(5, 4, rng);
  const RealMatrix once = refine_centroids(u, emb);
  const RealMatrix twice = refine_centroids(once, emb);
  for (std::size_t i = 0; i < once.data.size(); ++i) {
    CHECK(std::fabs(twice.data[i] - once.data[i]) <= 1e-10);
  }
}

TEST_CASE("refinement beats random feasible reconstructions") {
  Rng rng(77);
  const RealMatrix u0 = random_matrix(5, 3, rng);
  const LabelEmbedding emb = gold_label_embedding(u0, 0.8);
  const RealMatrix u = random_matrix(5, 3, rng, -2.0, 2.0);
  const RealMatrix refined = refine_centroids(u, emb);

  double base = 0.0;
  for (std::size_t i = 0; i < u.data.size(); ++i) {
    const double d = u.data[i] - refined.data[i];
    base += d * d;
  }

  for (int trial = 0; trial < 1000; ++trial) {
    // random H^T V with the label factor fixed
    const RealMatrix candidate =
        multiply(random_matrix(5, emb.rank, rng, -2.0, 2.0), emb.label_factor);
    double err = 0.0;
    for (std::size_t i = 0; i < u.data.size(); ++i) {
      const double d = u.data[i] - candidate.data[i];
      err += d * d;
    }
    CHECK(base <= err + 1e-12);
  }
}

TEST_CASE("alternating assignment and update never increases the objective") {
  Rng rng(91);
  for (int trial = 0; trial < 5; ++trial) {
    const RealMatrix emb = unit_rows(random_matrix(30, 3, rng, -1.0, 1.0));
    CentroidSet cs;
    cs.u = random_matrix(3, 3, rng, 0.2, 1.0);
    cs.counts = {0, 0, 0};

    std::vector<int> labels = assign_labels(cs, emb);
    double prev = clustering_objective(emb, cs, labels);
    for (int iter = 0; iter < 8; ++iter) {
      cs = update_centroids(emb, labels, cs);
      labels = assign_labels(cs, emb);
      const double now = clustering_objective(emb, cs, labels);
      CHECK(now <= prev + 1e-9);
      prev = now;
    }
  }
}

TEST_CASE("pseudo-label loss is cross-entropy on the labeled pairs") {
  Rng rng(2);
  const MlpClassifier m = make_mlp(2, 4, 3, 2, 5);
  const RealMatrix xs = random_matrix(6, 2, rng);
  CentroidSet cs;
  cs.u = random_matrix(3, 2, rng, 0.2, 1.0);
  cs.counts = {1, 1};
  const std::vector<int> labels = assign_labels(cs, normalized_embeddings(m, xs));

  const LossGrad as_pl = ce_loss_and_grad(m, xs, labels);
  const LossGrad as_ce = ce_loss_and_grad(m, xs, labels);
  CHECK(as_pl.loss == as_ce.loss);
}

namespace {

struct GenerationFixture {
  LabeledSet gold;
  std::vector<StreamSegment> segments;
  MlpClassifier model = make_mlp(2, 16, 8, 2, 7);
  LabelEmbedding emb;
  Evaluator eval;

  explicit GenerationFixture(double velocity, std::size_t steps = 2) {
    const DriftSpec spec =
        make_linear_drift_spec(2, 2, 1, 6.0, velocity, 1.0, 300, steps, 0.3, 21);
    StreamData stream = generate_drift_stream(spec);
    gold = stream.gold;
    segments = std::move(stream.segments);

    Rng rng(55);
    train_epochs(model, gold, 40, 0.05, 64, rng);

    // gold prototypes from true labels
    const RealMatrix gold_emb = normalized_embeddings(model, gold.features);
    RealMatrix onehot(gold.size(), 2);
    for (std::size_t i = 0; i < gold.size(); ++i) {
      onehot(i, static_cast<std::size_t>(gold.labels[i])) = 1.0;
    }
    const CentroidSet gold_cs = centroids_from_probabilities(gold_emb, onehot);
    emb = gold_label_embedding(gold_cs.u, 0.9);
  }
};

}  // namespace

TEST_CASE("stationary separable stream yields accurate pseudo-labels") {
  GenerationFixture fx(0.0);
  GenerationConfig cfg;
  cfg.seed = 3;
  const GenerationResult res = generate_pseudo_labels(
      fx.model, fx.gold, LabeledSet{}, fx.segments[0].unlabeled, fx.emb, cfg);
  REQUIRE(res.labels.size() == fx.segments[0].unlabeled.rows);
  for (const int y : res.labels) {
    CHECK(y >= 0);
    CHECK(y < 2);
  }
  CHECK(fx.eval.pseudo_label_accuracy(res.labels, fx.segments[0]) >= 0.95);
}

TEST_CASE("zero clustering iterations reduce to assignment on the initialization") {
  GenerationFixture fx(0.2);
  GenerationConfig cfg;
  cfg.seed = 5;
  cfg.train_epochs = 0;  // keep the model untouched so the check is exact
  cfg.max_cluster_iters = 0;

  MlpClassifier model_copy = fx.model;
  const GenerationResult res = generate_pseudo_labels(
      model_copy, fx.gold, LabeledSet{}, fx.segments[0].unlabeled, fx.emb, cfg);

  const CentroidSet init = init_centroids(fx.model, fx.segments[0].unlabeled);
  const std::vector<int> expect =
      assign_labels(init, normalized_embeddings(fx.model, fx.segments[0].unlabeled));
  CHECK(res.labels == expect);
  CHECK(res.iterations_run == 0);
}

TEST_CASE("generation is deterministic under a fixed seed") {
  GenerationFixture fx(0.3);
  GenerationConfig cfg;
  cfg.seed = 11;

  MlpClassifier a = fx.model;
  MlpClassifier b = fx.model;
  const GenerationResult ra = generate_pseudo_labels(
      a, fx.gold, LabeledSet{}, fx.segments[0].unlabeled, fx.emb, cfg);
  const GenerationResult rb = generate_pseudo_labels(
      b, fx.gold, LabeledSet{}, fx.segments[0].unlabeled, fx.emb, cfg);
  CHECK(ra.labels == rb.labels);
  CHECK(flatten(a) == flatten(b));
}

TEST_CASE("an oversized lookback buffer is rejected") {
  GenerationFixture fx(0.1);
  GenerationConfig cfg;
  cfg.lookback = 10;
  LabeledSet big;
  big.features = RealMatrix(11, 2, 0.5);
  big.labels.assign(11, 0);
  CHECK_THROWS_AS(generate_pseudo_labels(fx.model, fx.gold, big,
                                         fx.segments[0].unlabeled, fx.emb, cfg),
                  std::invalid_argument);
}

#include <benchmark/benchmark.h>

#include "driftlearn/baselines.hpp"
#include "driftlearn/pseudo_label.hpp"
#include "driftlearn/replay.hpp"
#include "driftlearn/stream.hpp"
#include "driftlearn/training.hpp"

using namespace driftlearn;

namespace {

struct PipelineFixture {
  StreamData stream;
  MlpClassifier model;
  LabelEmbedding emb;

  PipelineFixture()
      : stream(generate_drift_stream(
            make_linear_drift_spec(2, 2, 1, 6.0, 0.5, 1.0, 500, 2, 0.3, 1))),
        model(make_mlp(2, 64, 64, 2, 1)) {
    Rng rng(2);
    train_epochs(model, stream.gold, 30, 0.01, 64, rng);
    const RealMatrix gold_emb = normalized_embeddings(model, stream.gold.features);
    RealMatrix onehot(stream.gold.size(), 2);
    for (std::size_t i = 0; i < stream.gold.size(); ++i) {
      onehot(i, static_cast<std::size_t>(stream.gold.labels[i])) = 1.0;
    }
    emb = gold_label_embedding(centroids_from_probabilities(gold_emb, onehot).u, 0.9);
  }
};

const PipelineFixture& fixture() {
  static PipelineFixture fx;
  return fx;
}

}  // namespace

static void BM_GeneratePseudoLabels(benchmark::State& state) {
  const PipelineFixture& fx = fixture();
  for (auto _ : state) {
    MlpClassifier model = fx.model;
    GenerationConfig cfg;
    cfg.seed = 3;
    benchmark::DoNotOptimize(generate_pseudo_labels(
        model, fx.stream.gold, LabeledSet{}, fx.stream.segments[0].unlabeled, fx.emb,
        cfg));
  }
}
BENCHMARK(BM_GeneratePseudoLabels)->Unit(benchmark::kMillisecond);

static void BM_ReplayTrainSegment(benchmark::State& state) {
  const PipelineFixture& fx = fixture();
  const Evaluator eval;
  const LabeledSet pool = eval.oracle_labeled_pool(fx.stream.segments[0]);
  Rng rng(7);
  const LabeledSet pseudo = subsample(pool, 100, rng);
  const SubspaceMemory mem = build_subspace(fx.model, fx.stream.gold, 0.9);
  for (auto _ : state) {
    MlpClassifier model = fx.model;
    ReplayConfig cfg;
    cfg.seed = 5;
    benchmark::DoNotOptimize(replay_train(model, fx.stream.gold, pseudo, mem, cfg));
  }
}
BENCHMARK(BM_ReplayTrainSegment)->Unit(benchmark::kMillisecond);

static void BM_BuildSubspace(benchmark::State& state) {
  const PipelineFixture& fx = fixture();
  Rng rng(9);
  const LabeledSet sample = subsample(fx.stream.gold, 512, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_subspace(fx.model, sample, 0.9));
  }
}
BENCHMARK(BM_BuildSubspace)->Unit(benchmark::kMillisecond);

#include "driftlearn/stream.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "driftlearn/rng.hpp"

namespace driftlearn {

DriftSpec make_linear_drift_spec(std::size_t dims, std::size_t class_count,
                                 std::size_t modes_per_class, double separation,
                                 double velocity, double stddev,
                                 std::size_t instances_per_step, std::size_t steps,
                                 double test_fraction, std::uint64_t seed) {
  if (dims == 0 || class_count == 0 || modes_per_class == 0) {
    throw std::invalid_argument("make_linear_drift_spec: zero dimension");
  }
  DriftSpec spec;
  spec.dims = dims;
  spec.class_count = class_count;
  spec.modes_per_class = modes_per_class;
  spec.stddev = stddev;
  spec.instances_per_step = instances_per_step;
  spec.steps = steps;
  spec.test_fraction = test_fraction;
  spec.seed = seed;

  std::vector<double> direction(dims, 0.0);
  if (dims == 1) {
    direction[0] = 1.0;
  } else {
    direction[0] = 1.0 / std::sqrt(2.0);
    direction[1] = 1.0 / std::sqrt(2.0);
  }

  spec.modes.resize(class_count);
  for (std::size_t c = 0; c < class_count; ++c) {
    spec.modes[c].resize(modes_per_class);
    const double center =
        (static_cast<double>(c) - (static_cast<double>(class_count) - 1.0) / 2.0) *
        separation;
    for (std::size_t m = 0; m < modes_per_class; ++m) {
      ModeSpec& mode = spec.modes[c][m];
      mode.start_mean.assign(dims, 0.0);
      mode.start_mean[0] = center;
      if (modes_per_class > 1) {
        const double offset =
            (static_cast<double>(m) - (static_cast<double>(modes_per_class) - 1.0) / 2.0) *
            (separation / 2.0);
        mode.start_mean[dims - 1] += offset;
      }
      mode.velocity.assign(dims, 0.0);
      for (std::size_t d = 0; d < dims; ++d) mode.velocity[d] = velocity * direction[d];
    }
  }
  return spec;
}

namespace {

void validate(const DriftSpec& spec) {
  if (spec.steps < 1) throw std::invalid_argument("DriftSpec: steps must be >= 1");
  if (spec.stddev <= 0.0) throw std::invalid_argument("DriftSpec: stddev must be > 0");
  if (spec.instances_per_step == 0) {
    throw std::invalid_argument("DriftSpec: instances_per_step must be > 0");
  }
  if (spec.test_fraction < 0.0 || spec.test_fraction >= 1.0) {
    throw std::invalid_argument("DriftSpec: test_fraction must lie in [0, 1)");
  }
  if (spec.modes.size() != spec.class_count) {
    throw std::invalid_argument("DriftSpec: one mode list per class required");
  }
  for (const auto& class_modes : spec.modes) {
    if (class_modes.size() != spec.modes_per_class) {
      throw std::invalid_argument("DriftSpec: wrong mode count for a class");
    }
    for (const auto& mode : class_modes) {
      if (mode.start_mean.size() != spec.dims || mode.velocity.size() != spec.dims) {
        throw std::invalid_argument("DriftSpec: mode vectors must match dims");
      }
      for (const double v : mode.velocity) {
        if (!std::isfinite(v)) throw std::invalid_argument("DriftSpec: non-finite velocity");
      }
    }
  }
}

// One fully labeled slot at time t: every sample picks a class and a mode
// uniformly, then draws around the drifted mode mean.
LabeledSet sample_slot(const DriftSpec& spec, std::size_t t, Rng& rng) {
  LabeledSet slot;
  slot.features = RealMatrix(spec.instances_per_step, spec.dims);
  slot.labels.resize(spec.instances_per_step);
  for (std::size_t i = 0; i < spec.instances_per_step; ++i) {
    const std::size_t c = rng.uniform_index(spec.class_count);
    const std::size_t m = rng.uniform_index(spec.modes_per_class);
    const ModeSpec& mode = spec.modes[c][m];
    for (std::size_t d = 0; d < spec.dims; ++d) {
      const double mean = mode.start_mean[d] + static_cast<double>(t) * mode.velocity[d];
      slot.features(i, d) = mean + spec.stddev * rng.normal();
    }
    slot.labels[i] = static_cast<int>(c);
  }
  return slot;
}

StreamSegment split_slot(const LabeledSet& slot, int time_index,
                         std::size_t test_count, Rng& rng) {
  const std::size_t n = slot.size();
  if (test_count >= n) {
    throw std::invalid_argument("split_slot: test count must be below the slot size");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);

  StreamSegment seg;
  seg.time_index = time_index;
  seg.test_features = RealMatrix(test_count, slot.features.cols);
  seg.unlabeled = RealMatrix(n - test_count, slot.features.cols);
  std::vector<int> test_labels(test_count);
  std::vector<int> unlabeled_labels(n - test_count);

  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t src = order[i];
    if (i < test_count) {
      for (std::size_t d = 0; d < slot.features.cols; ++d) {
        seg.test_features(i, d) = slot.features(src, d);
      }
      test_labels[i] = slot.labels[src];
    } else {
      const std::size_t row = i - test_count;
      for (std::size_t d = 0; d < slot.features.cols; ++d) {
        seg.unlabeled(row, d) = slot.features(src, d);
      }
      unlabeled_labels[row] = slot.labels[src];
    }
  }
  seg.truth = SegmentTruth(std::move(test_labels), std::move(unlabeled_labels));
  return seg;
}

}  // namespace

StreamData generate_drift_stream(const DriftSpec& spec) {
  validate(spec);
  Rng rng(derive_seed(spec.seed, "drift-stream"));

  StreamData out;
  out.gold = sample_slot(spec, 0, rng);

  const auto test_count = static_cast<std::size_t>(
      std::lround(spec.test_fraction * static_cast<double>(spec.instances_per_step)));
  out.segments.reserve(spec.steps);
  for (std::size_t t = 1; t <= spec.steps; ++t) {
    const LabeledSet slot = sample_slot(spec, t, rng);
    out.segments.push_back(split_slot(slot, static_cast<int>(t), test_count, rng));
  }
  return out;
}

LabeledSet load_csv(const std::string& path, bool skip_header,
                    std::vector<int>* label_map) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open " + path);

  std::vector<std::vector<double>> rows;
  std::vector<int> raw_labels;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;  // including the label column

  while (std::getline(in, line)) {
    ++line_no;
    if (skip_header && line_no == 1) continue;
    if (line.empty()) continue;

    std::vector<double> fields;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::size_t used = 0;
      double value = 0.0;
      try {
        value = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw std::runtime_error("load_csv: non-numeric cell at line " +
                                 std::to_string(line_no) + " in " + path);
      }
      while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) {
        ++used;
      }
      if (used != cell.size()) {
        throw std::runtime_error("load_csv: non-numeric cell at line " +
                                 std::to_string(line_no) + " in " + path);
      }
      fields.push_back(value);
    }
    if (fields.size() < 2) {
      throw std::runtime_error("load_csv: need at least one feature and a label at line " +
                               std::to_string(line_no) + " in " + path);
    }
    if (width == 0) {
      width = fields.size();
    } else if (fields.size() != width) {
      throw std::runtime_error("load_csv: ragged row at line " + std::to_string(line_no) +
                               " in " + path);
    }
    const double label_value = fields.back();
    const int label = static_cast<int>(std::llround(label_value));
    if (std::fabs(label_value - static_cast<double>(label)) > 1e-9) {
      throw std::runtime_error("load_csv: non-integer label at line " +
                               std::to_string(line_no) + " in " + path);
    }
    fields.pop_back();
    rows.push_back(std::move(fields));
    raw_labels.push_back(label);
  }
  if (rows.empty()) throw std::runtime_error("load_csv: no data rows in " + path);

  // dense remap in sorted order of the original values
  std::vector<int> distinct = raw_labels;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (label_map) *label_map = distinct;

  LabeledSet out;
  out.features = RealMatrix(rows.size(), width - 1);
  out.labels.resize(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c + 1 < width; ++c) out.features(r, c) = rows[r][c];
    const auto it = std::lower_bound(distinct.begin(), distinct.end(), raw_labels[r]);
    out.labels[r] = static_cast<int>(it - distinct.begin());
  }
  check_finite(out.features, "load_csv features");
  return out;
}

std::vector<std::size_t> induce_drift_order(const LabeledSet& data,
                                            std::uint64_t seed) {
  const std::size_t n = data.size();
  if (n < 2) throw std::invalid_argument("induce_drift_order: need at least 2 rows");
  const std::size_t d = data.features.cols;

  std::vector<double> mean(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) mean[c] += data.features(r, c);
  }
  for (auto& m : mean) m /= static_cast<double>(n);

  // power iteration on the centered second-moment operator
  Rng rng(derive_seed(seed, "drift-order"));
  std::vector<double> v(d);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  double vn = norm(v);
  if (vn == 0.0) {
    v[0] = 1.0;
  } else {
    for (auto& x : v) x /= vn;
  }

  std::vector<double> w(d);
  for (int iter = 0; iter < 500; ++iter) {
    std::fill(w.begin(), w.end(), 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      double score = 0.0;
      for (std::size_t c = 0; c < d; ++c) score += (data.features(r, c) - mean[c]) * v[c];
      for (std::size_t c = 0; c < d; ++c) w[c] += score * (data.features(r, c) - mean[c]);
    }
    const double wn = norm(w);
    if (wn <= 1e-300) break;  // all rows identical: no principal direction
    double delta = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      w[c] /= wn;
      delta = std::max(delta, std::fabs(std::fabs(w[c]) - std::fabs(v[c])));
    }
    v = w;
    if (delta < 1e-12) break;
  }

  // deterministic sign: the largest-magnitude component points up
  std::size_t arg = 0;
  for (std::size_t c = 1; c < d; ++c) {
    if (std::fabs(v[c]) > std::fabs(v[arg])) arg = c;
  }
  if (v[arg] < 0.0) {
    for (auto& x : v) x = -x;
  }

  std::vector<double> scores(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) scores[r] += (data.features(r, c) - mean[c]) * v[c];
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });
  return order;
}

LabeledSet apply_order(const LabeledSet& data, std::span<const std::size_t> order) {
  if (order.size() != data.size()) {
    throw std::invalid_argument("apply_order: permutation length mismatch");
  }
  LabeledSet out;
  out.features = RealMatrix(data.size(), data.features.cols);
  out.labels.resize(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (std::size_t c = 0; c < data.features.cols; ++c) {
      out.features(i, c) = data.features(order[i], c);
    }
    out.labels[i] = data.labels[order[i]];
  }
  return out;
}

StreamData segment_stream(const LabeledSet& data, std::size_t per_step,
                          std::size_t test_count, std::uint64_t seed) {
  if (per_step == 0 || test_count >= per_step) {
    throw std::invalid_argument("segment_stream: need per_step > test_count");
  }
  if (data.size() < 2 * per_step) {
    throw std::invalid_argument("segment_stream: need at least two slots of data");
  }

  StreamData out;
  out.gold.features = RealMatrix(per_step, data.features.cols);
  out.gold.labels.resize(per_step);
  for (std::size_t i = 0; i < per_step; ++i) {
    for (std::size_t c = 0; c < data.features.cols; ++c) {
      out.gold.features(i, c) = data.features(i, c);
    }
    out.gold.labels[i] = data.labels[i];
  }

  Rng rng(derive_seed(seed, "segment-split"));
  std::size_t offset = per_step;
  int t = 1;
  while (offset + per_step <= data.size()) {
    LabeledSet slot;
    slot.features = RealMatrix(per_step, data.features.cols);
    slot.labels.resize(per_step);
    for (std::size_t i = 0; i < per_step; ++i) {
      for (std::size_t c = 0; c < data.features.cols; ++c) {
        slot.features(i, c) = data.features(offset + i, c);
      }
      slot.labels[i] = data.labels[offset + i];
    }
    out.segments.push_back(split_slot(slot, t, test_count, rng));
    offset += per_step;
    ++t;
  }
  out.dropped_rows = data.size() - offset;
  return out;
}

}  // namespace driftlearn

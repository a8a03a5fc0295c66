#include "driftlearn/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "driftlearn/rng.hpp"

namespace driftlearn {

namespace {

void check_consistent(const MlpClassifier& m) {
  if (m.w1.rows != m.hidden_dim || m.w1.cols != m.input_dim ||
      m.b1.size() != m.hidden_dim || m.w2.rows != m.embed_dim ||
      m.w2.cols != m.hidden_dim || m.b2.size() != m.embed_dim ||
      m.w3.rows != m.class_count || m.w3.cols != m.embed_dim ||
      m.b3.size() != m.class_count) {
    throw std::invalid_argument("MlpClassifier: inconsistent parameter shapes");
  }
}

void fill_uniform(RealMatrix& w, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(w.rows + w.cols));
  for (auto& v : w.data) v = rng.uniform(-bound, bound);
}

}  // namespace

MlpClassifier make_mlp(std::size_t input_dim, std::size_t hidden_dim,
                       std::size_t embed_dim, std::size_t class_count,
                       std::uint64_t seed) {
  if (input_dim == 0 || hidden_dim == 0 || embed_dim == 0 || class_count == 0) {
    throw std::invalid_argument("make_mlp: all dimensions must be positive");
  }
  MlpClassifier m;
  m.input_dim = input_dim;
  m.hidden_dim = hidden_dim;
  m.embed_dim = embed_dim;
  m.class_count = class_count;
  m.w1 = RealMatrix(hidden_dim, input_dim);
  m.b1.assign(hidden_dim, 0.0);
  m.w2 = RealMatrix(embed_dim, hidden_dim);
  m.b2.assign(embed_dim, 0.0);
  m.w3 = RealMatrix(class_count, embed_dim);
  m.b3.assign(class_count, 0.0);

  Rng rng(seed);
  fill_uniform(m.w1, rng);
  fill_uniform(m.w2, rng);
  fill_uniform(m.w3, rng);
  return m;
}

GradientSet zero_gradients(const MlpClassifier& m) {
  GradientSet g;
  g.w1 = RealMatrix(m.w1.rows, m.w1.cols);
  g.b1.assign(m.b1.size(), 0.0);
  g.w2 = RealMatrix(m.w2.rows, m.w2.cols);
  g.b2.assign(m.b2.size(), 0.0);
  g.w3 = RealMatrix(m.w3.rows, m.w3.cols);
  g.b3.assign(m.b3.size(), 0.0);
  return g;
}

ForwardResult forward(const MlpClassifier& m, std::span<const double> x) {
  if (x.size() != m.input_dim) {
    throw std::invalid_argument("forward: input dimension mismatch");
  }
  check_finite(x, "forward input");

  ForwardResult out;
  std::vector<double> hidden(m.hidden_dim);
  for (std::size_t h = 0; h < m.hidden_dim; ++h) {
    double z = m.b1[h];
    for (std::size_t i = 0; i < m.input_dim; ++i) z += m.w1(h, i) * x[i];
    hidden[h] = z > 0.0 ? z : 0.0;
  }
  out.embedding.resize(m.embed_dim);
  for (std::size_t e = 0; e < m.embed_dim; ++e) {
    double z = m.b2[e];
    for (std::size_t h = 0; h < m.hidden_dim; ++h) z += m.w2(e, h) * hidden[h];
    out.embedding[e] = z;
  }
  out.logits.resize(m.class_count);
  for (std::size_t c = 0; c < m.class_count; ++c) {
    double z = m.b3[c];
    for (std::size_t e = 0; e < m.embed_dim; ++e) z += m.w3(c, e) * out.embedding[e];
    out.logits[c] = z;
  }
  return out;
}

BatchActivations forward_batch(const MlpClassifier& m, const RealMatrix& xs) {
  if (xs.cols != m.input_dim) {
    throw std::invalid_argument("forward_batch: input dimension mismatch");
  }
  BatchActivations acts;
  acts.hidden = RealMatrix(xs.rows, m.hidden_dim);
  acts.embeddings = RealMatrix(xs.rows, m.embed_dim);
  acts.logits = RealMatrix(xs.rows, m.class_count);

  for (std::size_t r = 0; r < xs.rows; ++r) {
    const auto x = xs.row(r);
    for (std::size_t h = 0; h < m.hidden_dim; ++h) {
      double z = m.b1[h];
      for (std::size_t i = 0; i < m.input_dim; ++i) z += m.w1(h, i) * x[i];
      acts.hidden(r, h) = z > 0.0 ? z : 0.0;
    }
    for (std::size_t e = 0; e < m.embed_dim; ++e) {
      double z = m.b2[e];
      for (std::size_t h = 0; h < m.hidden_dim; ++h) z += m.w2(e, h) * acts.hidden(r, h);
      acts.embeddings(r, e) = z;
    }
    for (std::size_t c = 0; c < m.class_count; ++c) {
      double z = m.b3[c];
      for (std::size_t e = 0; e < m.embed_dim; ++e) z += m.w3(c, e) * acts.embeddings(r, e);
      acts.logits(r, c) = z;
    }
  }
  return acts;
}

std::vector<double> softmax(std::span<const double> z) {
  check_finite(z, "softmax input");
  if (z.empty()) throw std::invalid_argument("softmax: empty input");
  const double zmax = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(z[i] - zmax);
    sum += p[i];
  }
  for (auto& x : p) x /= sum;
  return p;
}

std::vector<int> predict(const MlpClassifier& m, const RealMatrix& xs) {
  const BatchActivations acts = forward_batch(m, xs);
  std::vector<int> labels(xs.rows);
  for (std::size_t r = 0; r < xs.rows; ++r) {
    const auto logits = acts.logits.row(r);
    std::size_t best = 0;
    for (std::size_t c = 1; c < logits.size(); ++c) {
      if (logits[c] > logits[best]) best = c;
    }
    labels[r] = static_cast<int>(best);
  }
  return labels;
}

LossGrad ce_loss_and_grad(const MlpClassifier& m, const RealMatrix& xs,
                          std::span<const int> ys) {
  if (xs.rows == 0) throw std::invalid_argument("ce_loss_and_grad: empty batch");
  if (xs.rows != ys.size()) {
    throw std::invalid_argument("ce_loss_and_grad: feature/label count mismatch");
  }
  for (const int y : ys) {
    if (y < 0 || static_cast<std::size_t>(y) >= m.class_count) {
      throw std::invalid_argument("ce_loss_and_grad: label out of range");
    }
  }

  const std::size_t n = xs.rows;
  const BatchActivations acts = forward_batch(m, xs);

  LossGrad out;
  out.grads = zero_gradients(m);
  const double inv_n = 1.0 / static_cast<double>(n);

  std::vector<double> dlogit(m.class_count);
  std::vector<double> dembed(m.embed_dim);
  std::vector<double> dhidden(m.hidden_dim);

  for (std::size_t r = 0; r < n; ++r) {
    const std::vector<double> p = softmax(acts.logits.row(r));
    out.loss -= std::log(std::max(p[static_cast<std::size_t>(ys[r])], 1e-300)) * inv_n;

    for (std::size_t c = 0; c < m.class_count; ++c) {
      dlogit[c] = (p[c] - (static_cast<std::size_t>(ys[r]) == c ? 1.0 : 0.0)) * inv_n;
    }
    // head
    for (std::size_t c = 0; c < m.class_count; ++c) {
      out.grads.b3[c] += dlogit[c];
      for (std::size_t e = 0; e < m.embed_dim; ++e) {
        out.grads.w3(c, e) += dlogit[c] * acts.embeddings(r, e);
      }
    }
    // embedding layer (linear)
    for (std::size_t e = 0; e < m.embed_dim; ++e) {
      double d = 0.0;
      for (std::size_t c = 0; c < m.class_count; ++c) d += dlogit[c] * m.w3(c, e);
      dembed[e] = d;
      out.grads.b2[e] += d;
      for (std::size_t h = 0; h < m.hidden_dim; ++h) {
        out.grads.w2(e, h) += d * acts.hidden(r, h);
      }
    }
    // hidden layer through the rectifier
    for (std::size_t h = 0; h < m.hidden_dim; ++h) {
      double d = 0.0;
      for (std::size_t e = 0; e < m.embed_dim; ++e) d += dembed[e] * m.w2(e, h);
      dhidden[h] = acts.hidden(r, h) > 0.0 ? d : 0.0;
      out.grads.b1[h] += dhidden[h];
      for (std::size_t i = 0; i < m.input_dim; ++i) {
        out.grads.w1(h, i) += dhidden[h] * xs(r, i);
      }
    }
  }
  return out;
}

LossGrad consistency_loss_and_grad(const MlpClassifier& student,
                                   const MlpClassifier& teacher,
                                   const RealMatrix& xs) {
  if (xs.rows == 0) {
    throw std::invalid_argument("consistency_loss_and_grad: empty batch");
  }
  if (student.class_count != teacher.class_count ||
      student.input_dim != teacher.input_dim) {
    throw std::invalid_argument("consistency_loss_and_grad: incongruent models");
  }

  const std::size_t n = xs.rows;
  const std::size_t C = student.class_count;
  const BatchActivations acts = forward_batch(student, xs);
  const BatchActivations tacts = forward_batch(teacher, xs);

  LossGrad out;
  out.grads = zero_gradients(student);
  const double scale = 1.0 / (static_cast<double>(n) * static_cast<double>(C));

  std::vector<double> dlogit(C);
  std::vector<double> dembed(student.embed_dim);

  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < C; ++c) {
      const double diff = acts.logits(r, c) - tacts.logits(r, c);
      out.loss += diff * diff * scale;
      dlogit[c] = 2.0 * diff * scale;
    }
    for (std::size_t c = 0; c < C; ++c) {
      out.grads.b3[c] += dlogit[c];
      for (std::size_t e = 0; e < student.embed_dim; ++e) {
        out.grads.w3(c, e) += dlogit[c] * acts.embeddings(r, e);
      }
    }
    for (std::size_t e = 0; e < student.embed_dim; ++e) {
      double d = 0.0;
      for (std::size_t c = 0; c < C; ++c) d += dlogit[c] * student.w3(c, e);
      dembed[e] = d;
      out.grads.b2[e] += d;
      for (std::size_t h = 0; h < student.hidden_dim; ++h) {
        out.grads.w2(e, h) += d * acts.hidden(r, h);
      }
    }
    for (std::size_t h = 0; h < student.hidden_dim; ++h) {
      double d = 0.0;
      for (std::size_t e = 0; e < student.embed_dim; ++e) d += dembed[e] * student.w2(e, h);
      if (acts.hidden(r, h) <= 0.0) d = 0.0;
      out.grads.b1[h] += d;
      for (std::size_t i = 0; i < student.input_dim; ++i) {
        out.grads.w1(h, i) += d * xs(r, i);
      }
    }
  }
  return out;
}

void apply_step(MlpClassifier& m, const GradientSet& g, double lr) {
  if (!std::isfinite(lr)) throw std::invalid_argument("apply_step: non-finite step size");
  if (g.w1.rows != m.w1.rows || g.w1.cols != m.w1.cols ||
      g.w2.rows != m.w2.rows || g.w2.cols != m.w2.cols ||
      g.w3.rows != m.w3.rows || g.w3.cols != m.w3.cols ||
      g.b1.size() != m.b1.size() || g.b2.size() != m.b2.size() ||
      g.b3.size() != m.b3.size()) {
    throw std::invalid_argument("apply_step: gradient shape mismatch");
  }
  for (std::size_t i = 0; i < m.w1.data.size(); ++i) m.w1.data[i] -= lr * g.w1.data[i];
  for (std::size_t i = 0; i < m.b1.size(); ++i) m.b1[i] -= lr * g.b1[i];
  for (std::size_t i = 0; i < m.w2.data.size(); ++i) m.w2.data[i] -= lr * g.w2.data[i];
  for (std::size_t i = 0; i < m.b2.size(); ++i) m.b2[i] -= lr * g.b2[i];
  for (std::size_t i = 0; i < m.w3.data.size(); ++i) m.w3.data[i] -= lr * g.w3.data[i];
  for (std::size_t i = 0; i < m.b3.size(); ++i) m.b3[i] -= lr * g.b3[i];
}

void add_scaled(GradientSet& g, const GradientSet& h, double scale) {
  for (std::size_t i = 0; i < g.w1.data.size(); ++i) g.w1.data[i] += scale * h.w1.data[i];
  for (std::size_t i = 0; i < g.b1.size(); ++i) g.b1[i] += scale * h.b1[i];
  for (std::size_t i = 0; i < g.w2.data.size(); ++i) g.w2.data[i] += scale * h.w2.data[i];
  for (std::size_t i = 0; i < g.b2.size(); ++i) g.b2[i] += scale * h.b2[i];
  for (std::size_t i = 0; i < g.w3.data.size(); ++i) g.w3.data[i] += scale * h.w3.data[i];
  for (std::size_t i = 0; i < g.b3.size(); ++i) g.b3[i] += scale * h.b3[i];
}

std::size_t parameter_count(const MlpClassifier& m) {
  return m.w1.data.size() + m.b1.size() + m.w2.data.size() + m.b2.size() +
         m.w3.data.size() + m.b3.size();
}

std::vector<double> flatten(const MlpClassifier& m) {
  std::vector<double> flat;
  flat.reserve(parameter_count(m));
  flat.insert(flat.end(), m.w1.data.begin(), m.w1.data.end());
  flat.insert(flat.end(), m.b1.begin(), m.b1.end());
  flat.insert(flat.end(), m.w2.data.begin(), m.w2.data.end());
  flat.insert(flat.end(), m.b2.begin(), m.b2.end());
  flat.insert(flat.end(), m.w3.data.begin(), m.w3.data.end());
  flat.insert(flat.end(), m.b3.begin(), m.b3.end());
  return flat;
}

void unflatten(MlpClassifier& m, std::span<const double> params) {
  check_consistent(m);
  if (params.size() != parameter_count(m)) {
    throw std::invalid_argument("unflatten: parameter vector length mismatch");
  }
  std::size_t pos = 0;
  const auto take = [&](double* dst, std::size_t count) {
    std::copy(params.begin() + static_cast<std::ptrdiff_t>(pos),
              params.begin() + static_cast<std::ptrdiff_t>(pos + count), dst);
    pos += count;
  };
  take(m.w1.data.data(), m.w1.data.size());
  take(m.b1.data(), m.b1.size());
  take(m.w2.data.data(), m.w2.data.size());
  take(m.b2.data(), m.b2.size());
  take(m.w3.data.data(), m.w3.data.size());
  take(m.b3.data(), m.b3.size());
}

void ema_update(MlpClassifier& teacher, const MlpClassifier& student,
                double momentum) {
  if (momentum < 0.0 || momentum > 1.0) {
    throw std::invalid_argument("ema_update: momentum outside [0, 1]");
  }
  if (parameter_count(teacher) != parameter_count(student)) {
    throw std::invalid_argument("ema_update: incongruent models");
  }
  const std::vector<double> t = flatten(teacher);
  const std::vector<double> s = flatten(student);
  std::vector<double> mixed(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    mixed[i] = momentum * t[i] + (1.0 - momentum) * s[i];
  }
  unflatten(teacher, mixed);
}

namespace {

void put_u32_le(std::ofstream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32_le(std::ifstream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

void put_f64_le(std::ofstream& out, double d) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(d);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64_le(std::ifstream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void save_checkpoint(const MlpClassifier& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  put_u32_le(out, static_cast<std::uint32_t>(m.input_dim));
  put_u32_le(out, static_cast<std::uint32_t>(m.hidden_dim));
  put_u32_le(out, static_cast<std::uint32_t>(m.embed_dim));
  put_u32_le(out, static_cast<std::uint32_t>(m.class_count));
  for (const double v : flatten(m)) put_f64_le(out, v);
  if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

MlpClassifier load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  const std::uint32_t d_in = get_u32_le(in);
  const std::uint32_t hidden = get_u32_le(in);
  const std::uint32_t embed = get_u32_le(in);
  const std::uint32_t classes = get_u32_le(in);
  if (!in) throw std::runtime_error("load_checkpoint: truncated header in " + path);

  MlpClassifier m = make_mlp(d_in, hidden, embed, classes, 0);
  std::vector<double> params(parameter_count(m));
  for (auto& v : params) v = get_f64_le(in);
  if (!in) throw std::runtime_error("load_checkpoint: truncated parameters in " + path);
  unflatten(m, params);
  return m;
}

}  // namespace driftlearn

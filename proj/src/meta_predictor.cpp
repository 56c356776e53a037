#include "compforge/meta_predictor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

#include "compforge/errors.hpp"
#include "compforge/rng.hpp"
#include "compforge/stats.hpp"

namespace compforge {

std::array<std::span<double>, 5> MetaParams::tensors() {
  return {std::span<double>(codebook.data), std::span<double>(w1.data), std::span<double>(b1),
          std::span<double>(w2), std::span<double>(&b2, 1)};
}

std::array<std::span<const double>, 5> MetaParams::tensors() const {
  return {std::span<const double>(codebook.data), std::span<const double>(w1.data), std::span<const double>(b1),
          std::span<const double>(w2), std::span<const double>(&b2, 1)};
}

std::size_t MetaParams::count() const {
  std::size_t n = 0;
  for (const auto& t : tensors()) n += t.size();
  return n;
}

void MetaParams::zero() {
  for (auto t : tensors()) std::fill(t.begin(), t.end(), 0.0);
}

MetaModel init_model(const DesignSpace& space, std::size_t meta_dim, const MetaHyper& hyper) {
  if (hyper.e < 1 || hyper.h < 1) throw std::invalid_argument("embedding and hidden sizes must be positive");
  if (hyper.activation != "relu") throw std::invalid_argument("unsupported activation '" + hyper.activation + "'");
  MetaModel m;
  m.hyper = hyper;
  m.V = space.total_components();
  m.k = space.size();
  m.d = meta_dim;
  for (std::size_t i = 0; i < m.k; ++i) {
    m.offsets.push_back(space.offset(i));
    m.dim_sizes.push_back(space.dimension(i).components.size());
  }
  m.space_fingerprint = space.fingerprint();

  Xoshiro256 rng(hyper.seed);
  auto fill = [&](std::span<double> t, double bound) {
    for (auto& v : t) v = rng.uniform(-bound, bound);
  };
  auto& p = m.params;
  p.codebook = Matrix(m.V, hyper.e);
  p.w1 = Matrix(hyper.h, m.input_width());
  p.b1.assign(hyper.h, 0.0);
  p.w2.assign(hyper.h, 0.0);
  const double bound1 = 1.0 / std::sqrt(static_cast<double>(m.input_width()));
  const double bound2 = 1.0 / std::sqrt(static_cast<double>(hyper.h));
  fill(p.codebook.data, 0.1);
  fill(p.w1.data, bound1);
  fill(p.b1, bound1);
  fill(p.w2, bound2);
  p.b2 = rng.uniform(-bound2, bound2);
  return m;
}

namespace {

void check_config(const MetaModel& model, const Configuration& config) {
  if (config.size() != model.k) {
    throw ShapeError("configuration has " + std::to_string(config.size()) + " entries, model expects " +
                     std::to_string(model.k));
  }
  for (std::size_t t = 0; t < model.k; ++t) {
    if (config[t] >= model.dim_sizes[t]) throw ShapeError("component index out of range in dimension " + std::to_string(t));
  }
}

void check_meta(const MetaModel& model, std::span<const double> meta) {
  if (meta.size() != model.d) {
    throw ShapeError("meta vector has " + std::to_string(meta.size()) + " entries, model expects " +
                     std::to_string(model.d));
  }
}

// Input vector, pre-activations and activations of one example.
struct Trace {
  std::vector<double> u;
  std::vector<double> a;
  std::vector<double> r;
  double out = 0.0;
};

void run(const MetaModel& model, std::span<const double> meta, const Configuration& config, Trace& tr) {
  const std::size_t e = model.hyper.e;
  const std::size_t h = model.hyper.h;
  const std::size_t D = model.input_width();
  const auto& p = model.params;
  tr.u.resize(D);
  std::copy(meta.begin(), meta.end(), tr.u.begin());
  for (std::size_t t = 0; t < model.k; ++t) {
    const auto row = p.codebook.row(model.offsets[t] + config[t]);
    std::copy(row.begin(), row.end(), tr.u.begin() + static_cast<std::ptrdiff_t>(model.d + t * e));
  }
  tr.a.resize(h);
  tr.r.resize(h);
  double out = p.b2;
  for (std::size_t j = 0; j < h; ++j) {
    const auto w = p.w1.row(j);
    double s = p.b1[j];
    for (std::size_t i = 0; i < D; ++i) s += w[i] * tr.u[i];
    tr.a[j] = s;
    tr.r[j] = s > 0.0 ? s : 0.0;
    out += p.w2[j] * tr.r[j];
  }
  tr.out = out;
}

}  // namespace

std::vector<double> embed_config(const MetaModel& model, const Configuration& config) {
  check_config(model, config);
  const std::size_t e = model.hyper.e;
  std::vector<double> out(model.k * e);
  for (std::size_t t = 0; t < model.k; ++t) {
    const auto row = model.params.codebook.row(model.offsets[t] + config[t]);
    std::copy(row.begin(), row.end(), out.begin() + static_cast<std::ptrdiff_t>(t * e));
  }
  return out;
}

double forward(const MetaModel& model, std::span<const double> meta, const Configuration& config) {
  check_meta(model, meta);
  check_config(model, config);
  Trace tr;
  run(model, meta, config, tr);
  return tr.out;
}

std::vector<double> predict_batch(const MetaModel& model, std::span<const double> meta,
                                  std::span<const Configuration> configs, kernels::Exec exec) {
  check_meta(model, meta);
  for (const auto& c : configs) check_config(model, c);
  std::vector<double> out(configs.size());
  const auto n = static_cast<std::ptrdiff_t>(configs.size());
#pragma omp parallel if (exec == kernels::Exec::Parallel)
  {
    Trace tr;
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      run(model, meta, configs[static_cast<std::size_t>(i)], tr);
      out[static_cast<std::size_t>(i)] = tr.out;
    }
  }
  return out;
}

double pearson_loss(std::span<const double> pred, std::span<const double> target, double eps,
                    std::vector<double>* grad) {
  if (pred.size() != target.size()) throw ShapeError("prediction and target lengths differ");
  if (pred.size() < 2) throw ShapeError("Pearson loss needs at least two values");
  const std::size_t n = pred.size();
  const double nn = static_cast<double>(n);
  const double pm = stats::mean(pred);
  const double tm = stats::mean(target);
  double cov = 0.0, vp = 0.0, vt = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dp = pred[i] - pm;
    const double dt = target[i] - tm;
    cov += dp * dt;
    vp += dp * dp;
    vt += dt * dt;
  }
  cov /= nn;
  const double sp = std::sqrt(vp / nn);
  const double st = std::sqrt(vt / nn);
  const double S = sp * st + eps;
  const double loss = 1.0 - cov / S;
  if (grad) {
    grad->resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double dcov = (target[i] - tm) / nn;
      const double dsp = sp > 0.0 ? (pred[i] - pm) / (nn * sp) : 0.0;
      const double dS = st * dsp;
      (*grad)[i] = -(dcov * S - cov * dS) / (S * S);
    }
  }
  return loss;
}

double loss_and_gradient(const MetaModel& model, std::span<const double> meta,
                         std::span<const Configuration> configs, std::span<const double> targets, double eps,
                         MetaParams& grad) {
  check_meta(model, meta);
  for (const auto& c : configs) check_config(model, c);
  const std::size_t n = configs.size();
  const std::size_t e = model.hyper.e;
  const std::size_t h = model.hyper.h;
  const std::size_t D = model.input_width();
  const auto& p = model.params;

  std::vector<Trace> traces(n);
  std::vector<double> pred(n);
  for (std::size_t i = 0; i < n; ++i) {
    run(model, meta, configs[i], traces[i]);
    pred[i] = traces[i].out;
  }
  std::vector<double> dpred;
  const double loss = pearson_loss(pred, targets, eps, &dpred);

  grad.codebook = Matrix(p.codebook.rows, p.codebook.cols);
  grad.w1 = Matrix(p.w1.rows, p.w1.cols);
  grad.b1.assign(h, 0.0);
  grad.w2.assign(h, 0.0);
  grad.b2 = 0.0;
  std::vector<double> da(h), du(D);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& tr = traces[i];
    const double g = dpred[i];
    grad.b2 += g;
    for (std::size_t j = 0; j < h; ++j) {
      grad.w2[j] += g * tr.r[j];
      da[j] = tr.a[j] > 0.0 ? g * p.w2[j] : 0.0;
    }
    std::fill(du.begin(), du.end(), 0.0);
    for (std::size_t j = 0; j < h; ++j) {
      if (da[j] == 0.0) continue;
      grad.b1[j] += da[j];
      auto gw = grad.w1.row(j);
      const auto w = p.w1.row(j);
      for (std::size_t q = 0; q < D; ++q) {
        gw[q] += da[j] * tr.u[q];
        du[q] += da[j] * w[q];
      }
    }
    for (std::size_t t = 0; t < model.k; ++t) {
      auto row = grad.codebook.row(model.offsets[t] + configs[i][t]);
      for (std::size_t q = 0; q < e; ++q) row[q] += du[model.d + t * e + q];
    }
  }
  return loss;
}

namespace {

struct Batch {
  std::string dataset_id;
  std::vector<double> meta;
  std::vector<Configuration> configs;
  std::vector<double> targets;
};

std::vector<Batch> make_batches(std::span<const MetaExample> examples) {
  std::map<std::string, std::size_t> index;
  std::vector<Batch> batches;
  for (const auto& ex : examples) {
    auto [it, fresh] = index.emplace(ex.group, batches.size());
    if (fresh) {
      batches.push_back({ex.dataset_id, ex.meta, {}, {}});
    } else if (batches[it->second].meta != ex.meta || batches[it->second].dataset_id != ex.dataset_id) {
      throw SchemaError("group " + ex.group + " mixes datasets or meta vectors");
    }
    batches[it->second].configs.push_back(ex.config);
    batches[it->second].targets.push_back(ex.target);
  }
  for (const auto& [group, i] : index) {
    if (batches[i].configs.size() < 2) throw InsufficientError("group " + group + " has fewer than two examples");
  }
  return batches;
}

double validation_spearman(const MetaModel& model, const std::vector<Batch>& batches,
                           const std::vector<std::size_t>& val) {
  double total = 0.0;
  for (auto b : val) {
    const auto pred = predict_batch(model, batches[b].meta, batches[b].configs, kernels::Exec::Serial);
    total += stats::spearman(pred, batches[b].targets);
  }
  return total / static_cast<double>(val.size());
}

}  // namespace

TrainResult train(const MetaModel& init, std::span<const MetaExample> examples, const TrainConfig& cfg) {
  if (!(cfg.lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (cfg.epochs < 1) throw std::invalid_argument("epochs must be at least 1");
  if (!(cfg.val_fraction >= 0.0 && cfg.val_fraction < 1.0)) {
    throw std::invalid_argument("validation fraction must lie in [0, 1)");
  }
  if (examples.empty()) throw InsufficientError("no training examples");
  for (const auto& ex : examples) {
    check_meta(init, ex.meta);
    check_config(init, ex.config);
    if (!std::isfinite(ex.target)) throw SchemaError("non-finite target for dataset " + ex.dataset_id);
  }

  const auto batches = make_batches(examples);
  Xoshiro256 rng(cfg.seed);

  std::set<std::string> id_set;
  for (const auto& b : batches) id_set.insert(b.dataset_id);
  std::vector<std::string> ids(id_set.begin(), id_set.end());
  rng.shuffle(std::span<std::string>(ids));
  auto n_val = static_cast<std::size_t>(std::llround(cfg.val_fraction * static_cast<double>(ids.size())));
  if (cfg.val_fraction > 0.0 && n_val == 0 && ids.size() >= 2) n_val = 1;
  if (n_val >= ids.size()) n_val = ids.size() - 1;
  const std::set<std::string> val_ids(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_val));

  std::vector<std::size_t> train_idx, val_idx;
  for (std::size_t i = 0; i < batches.size(); ++i) {
    (val_ids.contains(batches[i].dataset_id) ? val_idx : train_idx).push_back(i);
  }
  if (train_idx.empty()) throw InsufficientError("no training group remains after the validation split");

  TrainResult result;
  result.model = init;
  result.validation_datasets.assign(val_ids.begin(), val_ids.end());
  MetaModel& model = result.model;
  MetaModel best = model;
  double best_score = -std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  MetaParams m1 = model.params, m2 = model.params, grad;
  m1.zero();
  m2.zero();
  std::uint64_t step = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(train_idx));
    double loss_sum = 0.0;
    for (auto b : train_idx) {
      const auto& batch = batches[b];
      const double loss = loss_and_gradient(model, batch.meta, batch.configs, batch.targets, cfg.eps, grad);
      if (!std::isfinite(loss)) throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch));
      loss_sum += loss;

      ++step;
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      auto P = model.params.tensors();
      auto G = grad.tensors();
      auto M1 = m1.tensors();
      auto M2 = m2.tensors();
      for (std::size_t t = 0; t < P.size(); ++t) {
        for (std::size_t i = 0; i < P[t].size(); ++i) {
          const double g = G[t][i];
          M1[t][i] = cfg.beta1 * M1[t][i] + (1.0 - cfg.beta1) * g;
          M2[t][i] = cfg.beta2 * M2[t][i] + (1.0 - cfg.beta2) * g * g;
          P[t][i] -= cfg.lr * (M1[t][i] / c1) / (std::sqrt(M2[t][i] / c2) + cfg.adam_eps);
        }
      }
    }

    EpochStats st;
    st.epoch = epoch;
    st.train_loss = loss_sum / static_cast<double>(train_idx.size());
    if (val_idx.empty()) {
      st.val_spearman = std::numeric_limits<double>::quiet_NaN();
      result.history.push_back(st);
      best = model;
      result.best_epoch = epoch;
      continue;
    }
    st.val_spearman = validation_spearman(model, batches, val_idx);
    result.history.push_back(st);
    if (st.val_spearman > best_score) {
      best_score = st.val_spearman;
      best = model;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  model = std::move(best);
  return result;
}

std::vector<Recommendation> recommend(const MetaModel& model, std::span<const double> meta,
                                      std::span<const Configuration> candidates, std::size_t k_top,
                                      kernels::Exec exec) {
  if (candidates.empty()) throw EmptyCandidateError("no candidate configurations");
  if (k_top < 1) throw std::invalid_argument("k_top must be at least 1");
  const auto scores = predict_batch(model, meta, candidates, exec);
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    if (scores[x] != scores[y]) return scores[x] < scores[y];
    if (candidates[x] != candidates[y]) return candidates[x] < candidates[y];
    return x < y;
  });
  order.resize(std::min(k_top, order.size()));
  std::vector<Recommendation> out;
  for (auto i : order) out.push_back({i, candidates[i], scores[i]});
  return out;
}

SelectionQuality selection_quality(std::span<const double> ranks) {
  SelectionQuality q;
  q.picks = ranks.size();
  if (ranks.empty()) return q;
  std::size_t quartile = 0, half = 0;
  for (double r : ranks) {
    if (r <= 0.25) ++quartile;
    if (r <= 0.5) ++half;
    const auto bin = static_cast<std::size_t>(std::clamp(std::floor(r * 10.0), 0.0, 9.0));
    ++q.histogram[bin];
  }
  q.top_quartile = static_cast<double>(quartile) / static_cast<double>(ranks.size());
  q.top_half = static_cast<double>(half) / static_cast<double>(ranks.size());
  return q;
}

nlohmann::json to_json(const MetaModel& model) {
  nlohmann::json doc;
  doc["format"] = "compforge-meta-predictor";
  doc["version"] = kCheckpointVersion;
  doc["hyper"] = {{"e", model.hyper.e},
                  {"h", model.hyper.h},
                  {"activation", model.hyper.activation},
                  {"seed", model.hyper.seed}};
  doc["space_fingerprint"] = model.space_fingerprint;
  doc["dims"] = {{"V", model.V}, {"k", model.k}, {"d", model.d}};
  const auto& p = model.params;
  doc["codebook"] = p.codebook.data;
  doc["w1"] = p.w1.data;
  doc["b1"] = p.b1;
  doc["w2"] = p.w2;
  doc["b2"] = p.b2;
  return doc;
}

MetaModel model_from_json(const nlohmann::json& doc, const DesignSpace& space) {
  try {
    if (doc.at("format").get<std::string>() != "compforge-meta-predictor") throw SchemaError("not a model checkpoint");
    if (doc.at("version").get<int>() != kCheckpointVersion) {
      throw SchemaError("unsupported checkpoint version " + doc.at("version").dump());
    }
    if (doc.at("space_fingerprint").get<std::string>() != space.fingerprint()) {
      throw FingerprintError("checkpoint was trained against a different design space");
    }
    MetaHyper hyper;
    const auto& hj = doc.at("hyper");
    hyper.e = hj.at("e").get<std::size_t>();
    hyper.h = hj.at("h").get<std::size_t>();
    hyper.activation = hj.at("activation").get<std::string>();
    hyper.seed = hj.at("seed").get<std::uint64_t>();
    const auto d = doc.at("dims").at("d").get<std::size_t>();
    MetaModel m = init_model(space, d, hyper);
    if (doc.at("dims").at("V").get<std::size_t>() != m.V || doc.at("dims").at("k").get<std::size_t>() != m.k) {
      throw SchemaError("checkpoint dimensions do not match the space");
    }
    auto load = [&](const char* key, std::span<double> dst) {
      const auto v = doc.at(key).get<std::vector<double>>();
      if (v.size() != dst.size()) throw SchemaError(std::string("checkpoint tensor ") + key + " has the wrong size");
      for (double x : v)
        if (!std::isfinite(x)) throw SchemaError(std::string("checkpoint tensor ") + key + " is not finite");
      std::copy(v.begin(), v.end(), dst.begin());
    };
    load("codebook", m.params.codebook.data);
    load("w1", m.params.w1.data);
    load("b1", m.params.b1);
    load("w2", m.params.w2);
    m.params.b2 = doc.at("b2").get<double>();
    return m;
  } catch (const nlohmann::json::exception& ex) {
    throw SchemaError(std::string("malformed checkpoint: ") + ex.what());
  }
}

void save_model(const MetaModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json(model).dump(1) << '\n';
}

MetaModel load_model(const std::filesystem::path& path, const DesignSpace& space) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open checkpoint " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& ex) {
    throw SchemaError(std::string("unparsable checkpoint: ") + ex.what());
  }
  return model_from_json(doc, space);
}

}  // namespace compforge

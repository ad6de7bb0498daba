#include "pignn/training.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace pignn {

namespace {

// Largest-remainder apportionment of `total` items by fractions.
std::vector<int> apportion(int total, const std::vector<double>& fractions) {
  std::vector<int> counts(fractions.size());
  std::vector<std::pair<double, int>> remainders;
  int used = 0;
  for (std::size_t k = 0; k < fractions.size(); ++k) {
    const double exact = fractions[k] * total;
    counts[k] = static_cast<int>(std::floor(exact + 1e-9));
    used += counts[k];
    remainders.emplace_back(exact - counts[k], static_cast<int>(k));
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int k = 0; used < total; ++k, ++used) ++counts[remainders[k % remainders.size()].second];
  return counts;
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1 || epochs < 1) throw std::invalid_argument("TrainConfig: batch_size and epochs must be positive");
  if (!(learning_rate > 0)) throw std::invalid_argument("TrainConfig: learning_rate must be positive");
  if (!(val_fraction > 0 && val_fraction < 1)) throw std::invalid_argument("TrainConfig: val_fraction must lie in (0,1)");
  if (!(adam_beta1 >= 0 && adam_beta1 < 1 && adam_beta2 >= 0 && adam_beta2 < 1 && adam_eps > 0)) {
    throw std::invalid_argument("TrainConfig: invalid Adam constants");
  }
  if (plateau_patience < 1 || !(plateau_factor > 0 && plateau_factor < 1)) {
    throw std::invalid_argument("TrainConfig: invalid plateau decay settings");
  }
}

std::vector<std::vector<int>> split(const Dataset& ds, const std::vector<double>& fractions,
                                    std::uint64_t seed) {
  if (fractions.empty()) throw std::invalid_argument("split: no fractions");
  double total = 0;
  for (double f : fractions) {
    if (!(f > 0)) throw std::invalid_argument("split: fractions must be positive");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("split: fractions must sum to 1");

  // Group indices: one group per class, or everything together for regression.
  std::map<int, std::vector<int>> groups;
  for (int i = 0; i < static_cast<int>(ds.graphs.size()); ++i) {
    int key = 0;
    if (ds.task.is_classification()) {
      const int* cls = std::get_if<int>(&ds.graphs[i].target());
      if (!cls) throw SchemaError("split: classification graph without class id");
      key = *cls;
    }
    groups[key].push_back(i);
  }

  std::mt19937_64 rng(seed);
  std::vector<std::vector<int>> parts(fractions.size());
  for (auto& [key, members] : groups) {
    std::shuffle(members.begin(), members.end(), rng);
    const auto counts = apportion(static_cast<int>(members.size()), fractions);
    std::size_t pos = 0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
      parts[k].insert(parts[k].end(), members.begin() + pos, members.begin() + pos + counts[k]);
      pos += counts[k];
    }
  }
  for (std::size_t k = 0; k < parts.size(); ++k) {
    if (parts[k].empty()) throw std::invalid_argument("split: part " + std::to_string(k) + " is empty");
    std::sort(parts[k].begin(), parts[k].end());
  }
  return parts;
}

AdamState AdamState::zeros_like(const PiGnnParams& params) {
  AdamState s;
  zip_params(params, s.m, [](const char*, const Eigen::MatrixXd& p, Eigen::MatrixXd& m) {
    m = Eigen::MatrixXd::Zero(p.rows(), p.cols());
  });
  s.v = s.m;
  return s;
}

void adam_step(PiGnnParams& params, const PiGnnParams& grads, AdamState& state,
               const TrainConfig& cfg, double learning_rate) {
  ++state.t;
  const double c1 = 1.0 - std::pow(cfg.adam_beta1, state.t);
  const double c2 = 1.0 - std::pow(cfg.adam_beta2, state.t);
  for (const auto& [name, member] : PiGnnParams::fields()) {
    Eigen::MatrixXd& p = params.*member;
    if (!is_present(p)) continue;
    const Eigen::MatrixXd& g = grads.*member;
    Eigen::MatrixXd& m = state.m.*member;
    Eigen::MatrixXd& v = state.v.*member;
    if (g.rows() != p.rows() || g.cols() != p.cols() || m.rows() != p.rows() ||
        m.cols() != p.cols() || v.rows() != p.rows() || v.cols() != p.cols()) {
      throw SizeError(std::string("adam_step: shape mismatch for ") + name);
    }
    m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * g;
    v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * g.cwiseProduct(g);
    const Eigen::ArrayXXd m_hat = m.array() / c1;
    const Eigen::ArrayXXd v_hat = v.array() / c2;
    p.array() -= learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_eps);
  }
}

double mean_loss(const Dataset& ds, const std::vector<int>& indices, const PiGnnParams& params,
                 const PiGnnConfig& cfg, const ModelDims& dims) {
  if (indices.empty()) throw std::invalid_argument("mean_loss: no graphs");
  double total = 0;
  for (int i : indices) total += evaluate_loss(ds.graphs[i], params, cfg, dims);
  return total / static_cast<double>(indices.size());
}

double batch_gradient(const Dataset& ds, const std::vector<int>& batch, const PiGnnParams& params,
                      const PiGnnConfig& cfg, const ModelDims& dims, PiGnnParams& grads) {
  if (batch.empty()) throw std::invalid_argument("batch_gradient: empty batch");
  ad::Tape tape;
  const BoundParams bound = bind_params(tape, params, true);
  ad::Tensor total;
  for (int i : batch) {
    const ForwardResult fr = forward(tape, ds.graphs[i], bound, cfg, dims);
    const ad::Tensor loss = graph_loss(fr, ds.graphs[i], cfg);
    total = total.valid() ? ad::add(total, loss) : loss;
  }
  const ad::Tensor mean = ad::scale(total, 1.0 / static_cast<double>(batch.size()));
  if (!std::isfinite(mean.item())) return mean.item();
  tape.backward(mean);
  grads = gradients(bound);
  return mean.item();
}

TrainResult train(const Dataset& ds, const PiGnnConfig& model_cfg, const TrainConfig& train_cfg,
                  std::ostream* progress) {
  model_cfg.validate();
  train_cfg.validate();
  if (ds.graphs.empty()) throw std::invalid_argument("train: empty dataset");
  ds.validate();
  if (ds.task.is_classification() != model_cfg.task.is_classification() ||
      ds.task.output_dim() != model_cfg.task.output_dim()) {
    throw SchemaError("train: model task does not match dataset task");
  }

  TrainResult result;
  result.dims = ModelDims::from_schema(FeatureSchema::infer(ds));
  const auto parts = split(ds, {1.0 - train_cfg.val_fraction, train_cfg.val_fraction}, train_cfg.seed);
  result.report.train_indices = parts[0];
  result.report.val_indices = parts[1];

  PiGnnParams params = init_params(model_cfg, result.dims, train_cfg.seed);
  AdamState state = AdamState::zeros_like(params);
  std::mt19937_64 rng(train_cfg.seed ^ 0x5eedULL);
  std::vector<int> order = parts[0];
  double lr = train_cfg.learning_rate;
  int since_best = 0;

  for (int epoch = 0; epoch < train_cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double seen = 0;
    for (std::size_t start = 0; start < order.size(); start += train_cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + train_cfg.batch_size);
      const std::vector<int> batch(order.begin() + start, order.begin() + stop);
      PiGnnParams grads;
      const double loss = batch_gradient(ds, batch, params, model_cfg, result.dims, grads);
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "train: non-finite loss at epoch " << epoch << ", batch starting at " << start;
        throw std::runtime_error(msg.str());
      }
      seen += loss * static_cast<double>(batch.size());
      adam_step(params, grads, state, train_cfg, lr);
    }
    const double train_loss = seen / static_cast<double>(order.size());
    const double val_loss = mean_loss(ds, parts[1], params, model_cfg, result.dims);
    result.report.train_loss.push_back(train_loss);
    result.report.val_loss.push_back(val_loss);
    if (result.report.best_epoch < 0 || val_loss < result.report.best_val_loss) {
      result.report.best_epoch = epoch;
      result.report.best_val_loss = val_loss;
      result.best_params = params;
      since_best = 0;
    } else if (train_cfg.plateau_decay && ++since_best >= train_cfg.plateau_patience) {
      lr *= train_cfg.plateau_factor;
      since_best = 0;
    }
    if (progress) *progress << epoch << ',' << train_loss << ',' << val_loss << '\n';
  }
  return result;
}

}  // namespace pignn

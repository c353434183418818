#include "posevit/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace posevit {

namespace {

constexpr double kProbabilityClamp = 1e-12;

std::string fmt_loss(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

Tensor one_hot(int class_index, int num_classes) {
  if (num_classes < 1) throw ContractError("one_hot: at least one class required");
  if (class_index < 0 || class_index >= num_classes) {
    throw ContractError("one_hot: class index out of range");
  }
  Tensor t = Tensor::zeros({num_classes});
  t.values()(class_index) = 1.0;
  return t;
}

AdamW::AdamW(AdamWConfig config) : config_(config) {
  if (config_.learning_rate < 0 || config_.weight_decay < 0 ||
      config_.beta1 < 0 || config_.beta1 >= 1 || config_.beta2 < 0 ||
      config_.beta2 >= 1 || config_.epsilon <= 0) {
    throw ContractError("adamw: hyperparameters out of range");
  }
}

void AdamW::step(ModelParams& params) {
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));

  for (auto& [name, tensor] : params.tensors) {
    const ArrayX& g = tensor.ensure_grad();
    auto [mit, fresh_m] = m_.try_emplace(name, ArrayX::Zero(tensor.size()));
    auto [vit, fresh_v] = v_.try_emplace(name, ArrayX::Zero(tensor.size()));
    ArrayX& m = mit->second;
    ArrayX& v = vit->second;
    if (m.size() != tensor.size() || v.size() != tensor.size()) {
      throw ContractError("adamw: moment shape mismatch on " + name);
    }

    m = config_.beta1 * m + (1.0 - config_.beta1) * g;
    v = config_.beta2 * v + (1.0 - config_.beta2) * g.square();
    const ArrayX m_hat = m / bc1;
    const ArrayX v_hat = v / bc2;

    ArrayX& theta = tensor.values();
    theta = theta - config_.learning_rate * (m_hat / (v_hat.sqrt() + config_.epsilon)) -
            (config_.learning_rate * config_.weight_decay) * theta;
    if (!theta.allFinite()) {
      throw ContractError("adamw: non-finite parameter after step on " + name);
    }
  }
}

EvalStats evaluate(const ModelParams& params, std::span<const LabeledSample> samples,
                   const ViTConfig& config) {
  EvalStats stats{0.0, 0.0, ConfusionMatrix(config.num_classes)};
  if (samples.empty()) return stats;

  double loss = 0.0;
  long long correct = 0;
  for (const LabeledSample& sample : samples) {
    if (sample.class_index < 0 || sample.class_index >= config.num_classes) {
      throw ContractError("evaluate: sample class outside the configured range");
    }
    const ClassDistribution dist = forward(sample.image, params, config);
    const int predicted = dist.argmax();
    stats.confusion.accumulate(sample.class_index, predicted);
    if (predicted == sample.class_index) ++correct;
    loss -= std::log(std::max(dist.probabilities[sample.class_index], kProbabilityClamp));
  }
  stats.loss = loss / static_cast<double>(samples.size());
  stats.accuracy = static_cast<double>(correct) / static_cast<double>(samples.size());
  return stats;
}

TrainReport train(ModelParams& params, const DatasetSplit& data,
                  const TrainConfig& train_config, const ViTConfig& vit_config,
                  const AdamWConfig& optimizer_config) {
  validate_params(params, vit_config);
  if (train_config.batch_size < 1) throw ContractError("train: batch size must be >= 1");
  if (train_config.epochs < 1) throw ContractError("train: at least one epoch required");
  if (data.train.empty()) throw ContractError("train: empty training split");
  for (const std::vector<LabeledSample>* part : {&data.train, &data.validation}) {
    for (const LabeledSample& s : *part) {
      if (s.view != train_config.view) {
        throw ContractError("train: sample tagged " + to_string(s.view) +
                            " fed to the " + to_string(train_config.view) + " model");
      }
      if (s.class_index < 0 || s.class_index >= vit_config.num_classes) {
        throw ContractError("train: sample class outside the configured range");
      }
    }
  }

  SplitMix64 master(train_config.seed);
  SplitMix64 shuffle_rng = master.split();
  SplitMix64 dropout_rng = master.split();
  AdamW optimizer(optimizer_config);

  std::vector<std::size_t> order(data.train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainReport report;
  const bool select_on_validation = !data.validation.empty();
  double best_score = -1.0;

  for (int epoch = 1; epoch <= train_config.epochs; ++epoch) {
    if (train_config.shuffle && order.size() > 1) {
      for (std::size_t i = order.size() - 1; i > 0; --i) {
        std::swap(order[i], order[shuffle_rng.next_below(i + 1)]);
      }
    }

    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(train_config.batch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(train_config.batch_size));
      Tape tape;
      std::vector<Tensor> logit_rows;
      std::vector<Tensor> target_rows;
      logit_rows.reserve(stop - start);
      target_rows.reserve(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        const LabeledSample& sample = data.train[order[i]];
        logit_rows.push_back(forward_logits(tape, sample.image, params, vit_config,
                                            &dropout_rng, /*training=*/true));
        target_rows.push_back(
            as_row(tape, one_hot(sample.class_index, vit_config.num_classes)));
      }
      const Tensor logits = concat_rows(tape, logit_rows);
      const Tensor targets = concat_rows(tape, target_rows);
      const Tensor loss = softmax_cross_entropy(tape, logits, targets);
      params.zero_grads();
      tape.backward(loss);
      optimizer.step(params);
    }

    const EvalStats train_stats = evaluate(params, data.train, vit_config);
    const EvalStats val_stats = evaluate(params, data.validation, vit_config);
    report.history.push_back({epoch, train_stats.loss, train_stats.accuracy,
                              val_stats.loss, val_stats.accuracy});

    const double score =
        select_on_validation ? val_stats.accuracy : train_stats.accuracy;
    if (score > best_score) {  // strict: ties keep the earlier epoch
      best_score = score;
      report.best_epoch = epoch;
      report.best_val_accuracy = val_stats.accuracy;
      report.best_params = params.clone();
    }
    if (train_stats.accuracy >= train_config.stop_at_train_accuracy) break;
  }
  return report;
}

void write_report_csv(const TrainReport& report, std::ostream& out) {
  out << "epoch,train_loss,train_acc,val_loss,val_acc\n";
  for (const EpochStats& row : report.history) {
    out << row.epoch << ',' << fmt_loss(row.train_loss) << ','
        << fmt_loss(row.train_accuracy) << ',' << fmt_loss(row.val_loss) << ','
        << fmt_loss(row.val_accuracy) << '\n';
  }
}

}  // namespace posevit

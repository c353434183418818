#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <vector>

#include "posevit/dataset.hpp"
#include "posevit/metrics.hpp"
#include "posevit/vit.hpp"

namespace posevit {

// Rank-1 indicator vector of length num_classes.
Tensor one_hot(int class_index, int num_classes);

struct AdamWConfig {
  double learning_rate = 1e-3;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Decoupled weight decay: the moment update never sees the decay term, and
// the decay multiplies the pre-step parameter value:
//   m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2
//   theta <- theta - lr * mhat / (sqrt(vhat) + eps) - lr * wd * theta
class AdamW {
 public:
  explicit AdamW(AdamWConfig config = {});

  // One update over every named tensor, reading each tensor's gradient
  // buffer (an absent buffer counts as a zero gradient).
  void step(ModelParams& params);

  long long step_count() const { return t_; }
  const AdamWConfig& config() const { return config_; }

 private:
  AdamWConfig config_;
  long long t_ = 0;
  std::map<std::string, ArrayX> m_;
  std::map<std::string, ArrayX> v_;
};

struct TrainConfig {
  int batch_size = 32;
  int epochs = 50;
  std::uint64_t seed = 42;
  bool shuffle = true;
  View view = View::dashboard;  // every consumed sample must carry this tag
  // Stops after the first epoch whose training accuracy reaches this value;
  // values above 1 disable early stopping.
  double stop_at_train_accuracy = 2.0;
};

struct EpochStats {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> history;
  int best_epoch = 0;
  double best_val_accuracy = 0.0;
  ModelParams best_params;  // snapshot at the best epoch
};

struct EvalStats {
  double loss = 0.0;
  double accuracy = 0.0;
  ConfusionMatrix confusion{1};
};

// Mean cross-entropy and argmax accuracy with dropout disabled. An empty
// sample list yields zeros and an empty matrix.
EvalStats evaluate(const ModelParams& params, std::span<const LabeledSample> samples,
                   const ViTConfig& config);

// Minibatch training with per-epoch reshuffle (final partial batch kept).
// After each epoch both splits are re-scored with dropout disabled, and the
// epoch with the highest validation accuracy is kept as the returned
// snapshot (ties go to the earlier epoch; with an empty validation split,
// training accuracy drives the choice). Deterministic for a fixed seed.
TrainReport train(ModelParams& params, const DatasetSplit& data,
                  const TrainConfig& train_config, const ViTConfig& vit_config,
                  const AdamWConfig& optimizer_config = {});

// columns: epoch,train_loss,train_acc,val_loss,val_acc
void write_report_csv(const TrainReport& report, std::ostream& out);

}  // namespace posevit

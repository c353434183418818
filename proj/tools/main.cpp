// Command-line front end for the pose-conditioned driver action pipeline:
// synthetic data generation, skeleton compositing, training, evaluation,
// single-image inference, multi-view fusion, and gradient self-checks.
//
// Exit codes: 0 success, 1 runtime failure (I/O, malformed inputs, failed
// check), 2 command-line usage errors.

#include <algorithm>
#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "posevit/checkpoint.hpp"
#include "posevit/dataset.hpp"
#include "posevit/error.hpp"
#include "posevit/fusion.hpp"
#include "posevit/image.hpp"
#include "posevit/landmarks.hpp"
#include "posevit/metrics.hpp"
#include "posevit/rng.hpp"
#include "posevit/synthetic.hpp"
#include "posevit/tensor.hpp"
#include "posevit/train.hpp"
#include "posevit/vit.hpp"

namespace {

constexpr int kExitSuccess = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw posevit::FormatError("cannot open " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) {
    throw posevit::FormatError("cannot write " + path);
  }
  out << text;
  if (!out) {
    throw posevit::FormatError("failed writing " + path);
  }
}

// ---------------------------------------------------------------- gen-data

struct GenDataArgs {
  int classes = 16;
  int per_class = 8;
  std::uint64_t seed = 0;
  int image_size = 224;
  int canvas_size = 224;
  double jitter = 0.01;
  std::string out;
};

int run_gen_data(const GenDataArgs& args) {
  posevit::SyntheticConfig config;
  config.num_classes = args.classes;
  config.per_class = args.per_class;
  config.seed = args.seed;
  config.image_size = args.image_size;
  config.canvas_size = args.canvas_size;
  config.jitter_sigma = args.jitter;
  const std::vector<posevit::SyntheticSample> samples = posevit::gen_synthetic_dataset(config);
  posevit::write_dataset(args.out, samples);
  std::cout << "wrote " << samples.size() << " samples (" << args.classes << " classes x "
            << args.per_class << " per view x 3 views) to " << args.out << "\n";
  return kExitSuccess;
}

// ----------------------------------------------------------------- compose

struct ComposeArgs {
  std::string image;
  std::string landmarks;
  std::string out;
  int thickness = 2;
  int radius = 4;
};

int run_compose(const ComposeArgs& args) {
  const posevit::Image base = posevit::read_ppm_file(args.image);
  const posevit::LandmarkDocument doc =
      posevit::parse_landmark_document(read_text_file(args.landmarks));
  posevit::SkeletonStyle style;
  style.line_thickness = args.thickness;
  style.joint_radius = args.radius;
  const posevit::Image overlay =
      posevit::render_skeleton(doc.landmarks, base.height, base.width, style);
  const posevit::Image composed = posevit::composite(base, overlay);
  posevit::write_ppm_file(composed, args.out);
  std::cout << "wrote " << args.out << " (" << composed.width << "x" << composed.height
            << ")\n";
  return kExitSuccess;
}

// ------------------------------------------------------------------- train

struct TrainArgs {
  std::string data;
  std::string view;
  std::string out;
  std::string report;
  int epochs = 50;
  int batch = 32;
  double lr = 1e-3;
  double wd = 1e-4;
  int depth = 4;
  int heads = 4;
  int embed_dim = 256;
  int patch = 16;
  int mlp_hidden = 512;
  int image_size = 0;  // 0: keep the stored sample resolution
  int classes = 0;     // 0: infer from the manifest
  std::uint64_t seed = 42;
  double stop_acc = 2.0;
};

int run_train(const TrainArgs& args) {
  const posevit::View view = posevit::view_from_string(args.view);
  const std::vector<posevit::ManifestEntry> manifest = posevit::read_manifest(args.data);
  std::vector<posevit::LabeledSample> samples =
      posevit::load_samples(args.data, manifest, view, args.image_size);
  if (samples.empty()) {
    throw posevit::FormatError("no samples for view " + args.view + " in " + args.data);
  }

  int num_classes = args.classes;
  if (num_classes == 0) {
    for (const posevit::ManifestEntry& e : manifest) {
      num_classes = std::max(num_classes, e.class_index + 1);
    }
  }
  const posevit::Image& probe = samples.front().image;
  if (probe.height != probe.width) {
    throw posevit::FormatError("training samples must be square, got " +
                               std::to_string(probe.width) + "x" +
                               std::to_string(probe.height));
  }

  posevit::ViTConfig config;
  config.image_size = probe.height;
  config.patch_height = args.patch;
  config.patch_width = args.patch;
  config.stride_height = args.patch;
  config.stride_width = args.patch;
  config.embed_dim = args.embed_dim;
  config.num_heads = args.heads;
  config.depth = args.depth;
  config.mlp_hidden = args.mlp_hidden;
  config.num_classes = num_classes;
  posevit::validate(config);

  const posevit::DatasetSplit split = posevit::split_dataset(std::move(samples), args.seed);
  std::cout << "split: " << split.train.size() << " train / " << split.validation.size()
            << " val / " << split.test.size() << " test\n";

  posevit::ModelParams params = posevit::init_params(config, args.seed);
  posevit::TrainConfig train_config;
  train_config.batch_size = args.batch;
  train_config.epochs = args.epochs;
  train_config.seed = args.seed;
  train_config.view = view;
  train_config.stop_at_train_accuracy = args.stop_acc;
  posevit::AdamWConfig optimizer;
  optimizer.learning_rate = args.lr;
  optimizer.weight_decay = args.wd;

  const posevit::TrainReport report =
      posevit::train(params, split, train_config, config, optimizer);

  posevit::save_checkpoint(report.best_params, config, args.out);
  if (!args.report.empty()) {
    std::ofstream csv(args.report);
    if (!csv) {
      throw posevit::FormatError("cannot write " + args.report);
    }
    posevit::write_report_csv(report, csv);
  }
  std::cout << "best epoch " << report.best_epoch << " (val acc " << report.best_val_accuracy
            << "); checkpoint " << args.out << "\n";
  return kExitSuccess;
}

// -------------------------------------------------------------------- eval

struct EvalArgs {
  std::string ckpt;
  std::string data;
  std::string split = "test";
  std::string view;
  std::string metrics;
  std::string confusion;
  std::uint64_t seed = 42;
};

int run_eval(const EvalArgs& args) {
  auto [params, config] = posevit::load_checkpoint(args.ckpt);
  const std::vector<posevit::ManifestEntry> manifest = posevit::read_manifest(args.data);
  std::optional<posevit::View> view;
  if (!args.view.empty()) {
    view = posevit::view_from_string(args.view);
  }
  std::vector<posevit::LabeledSample> samples =
      posevit::load_samples(args.data, manifest, view, config.image_size);
  if (samples.empty()) {
    throw posevit::FormatError("no samples selected from " + args.data);
  }

  std::vector<posevit::LabeledSample> chosen;
  if (args.split == "all") {
    chosen = std::move(samples);
  } else {
    posevit::DatasetSplit split = posevit::split_dataset(std::move(samples), args.seed);
    if (args.split == "train") {
      chosen = std::move(split.train);
    } else if (args.split == "val") {
      chosen = std::move(split.validation);
    } else {
      chosen = std::move(split.test);
    }
  }

  const posevit::EvalStats stats = posevit::evaluate(params, chosen, config);
  std::cout << args.split << ": " << chosen.size() << " samples, loss " << stats.loss
            << ", accuracy " << stats.accuracy << "\n";

  const posevit::ClassMetrics metrics = posevit::compute_metrics(stats.confusion);
  if (args.metrics.empty()) {
    posevit::write_metrics_csv(metrics, std::cout);
  } else {
    std::ofstream out(args.metrics);
    if (!out) {
      throw posevit::FormatError("cannot write " + args.metrics);
    }
    posevit::write_metrics_csv(metrics, out);
  }
  if (!args.confusion.empty()) {
    std::ofstream out(args.confusion);
    if (!out) {
      throw posevit::FormatError("cannot write " + args.confusion);
    }
    posevit::write_confusion_csv(stats.confusion, out);
  }
  return kExitSuccess;
}

// ------------------------------------------------------------------- infer

struct InferArgs {
  std::string ckpt;
  std::string image;
  std::string landmarks;
  std::string out;
  std::string view = "dashboard";
  int thickness = 2;
  int radius = 4;
};

int run_infer(const InferArgs& args) {
  auto [params, config] = posevit::load_checkpoint(args.ckpt);
  posevit::Image image = posevit::read_ppm_file(args.image);
  if (!args.landmarks.empty()) {
    const posevit::LandmarkDocument doc =
        posevit::parse_landmark_document(read_text_file(args.landmarks));
    posevit::SkeletonStyle style;
    style.line_thickness = args.thickness;
    style.joint_radius = args.radius;
    const posevit::Image overlay =
        posevit::render_skeleton(doc.landmarks, image.height, image.width, style);
    image = posevit::composite(image, overlay);
  }
  if (image.height != config.image_size || image.width != config.image_size) {
    image = posevit::resize_bilinear(image, config.image_size, config.image_size);
  }

  posevit::ViewPrediction prediction;
  prediction.view = posevit::view_from_string(args.view);
  prediction.distribution = posevit::forward(image, params, config);

  const int best = prediction.distribution.argmax();
  std::cout << posevit::class_label(best) << " p=" << prediction.distribution.peak() << " ("
            << args.view << ")\n";
  if (!args.out.empty()) {
    posevit::write_distribution_file(args.out, prediction);
  }
  return kExitSuccess;
}

// -------------------------------------------------------------------- fuse

struct FuseArgs {
  std::string dash;
  std::string rear;
  std::string side;
  double threshold = 0.5;
  std::string out;
};

int run_fuse(const FuseArgs& args) {
  std::vector<posevit::ViewPrediction> predictions;
  predictions.push_back(posevit::read_distribution_file(args.dash));
  predictions.push_back(posevit::read_distribution_file(args.rear));
  predictions.push_back(posevit::read_distribution_file(args.side));

  posevit::FusionConfig config;
  config.threshold = args.threshold;
  const posevit::FusionResult result = posevit::fuse(predictions, config);
  const std::string doc =
      posevit::write_fusion_document(result, predictions.front().distribution.num_classes());
  if (args.out.empty()) {
    std::cout << doc;
  } else {
    write_text_file(args.out, doc);
    std::cout << posevit::class_label(result.class_index) << " p=" << result.fused_probability
              << (result.fallback_used ? " (fallback)" : "") << "\n";
  }
  return kExitSuccess;
}

// --------------------------------------------------------------- gradcheck

struct GradcheckArgs {
  std::uint64_t seed = 7;
  double tol = 1e-4;
  double step = 1e-5;
};

int run_gradcheck(const GradcheckArgs& args) {
  posevit::ViTConfig config;
  config.image_size = 16;
  config.patch_height = 4;
  config.patch_width = 4;
  config.stride_height = 4;
  config.stride_width = 4;
  config.embed_dim = 8;
  config.num_heads = 2;
  config.depth = 1;
  config.mlp_hidden = 16;
  config.num_classes = 3;
  posevit::validate(config);

  posevit::ModelParams params = posevit::init_params(config, args.seed);
  posevit::SplitMix64 rng(posevit::mix_seed(args.seed, 0x6772616463686bull));
  posevit::Image image = posevit::Image::black(config.image_size, config.image_size);
  for (std::uint8_t& byte : image.pixels) {
    byte = static_cast<std::uint8_t>(rng.next_below(256));
  }
  const int target = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(
      config.num_classes)));

  const posevit::Tensor patches =
      posevit::patchify(posevit::image_to_unit_tensor(image), config);

  std::vector<std::pair<std::string, posevit::Tensor>> named;
  for (const auto& [name, tensor] : params.tensors) {
    tensor.set_requires_grad(true);
    named.emplace_back(name, tensor);
  }

  const auto scalar_fn = [&](posevit::Tape& tape) {
    const posevit::Tensor logits = posevit::forward_logits_from_patches(
        tape, patches, params, config, nullptr, false);
    const posevit::Tensor target_copy =
        posevit::as_row(tape, posevit::one_hot(target, config.num_classes));
    return posevit::softmax_cross_entropy(tape, logits, target_copy);
  };

  const posevit::GradCheckReport report =
      posevit::finite_diff_check(scalar_fn, named, args.step, args.tol);
  for (const posevit::GradCheckEntry& entry : report.entries) {
    std::cout << entry.name << " max_rel_err=" << entry.max_rel_err << "\n";
  }
  std::cout << "worst " << report.worst() << " (tolerance " << report.tolerance << ", step "
            << report.step << ")\n";
  if (!report.passed) {
    std::cout << "GRADCHECK FAIL\n";
    return kExitRuntime;
  }
  std::cout << "GRADCHECK PASS\n";
  return kExitSuccess;
}

// -------------------------------------------------------------------- main

int dispatch(int argc, char** argv) {
  CLI::App app{
      "posevit: skeleton-composited driver action recognition "
      "(synthesis, compositing, training, evaluation, fusion)"};
  app.require_subcommand(1);

  const std::vector<std::string> view_names{"dashboard", "rearview", "rightside"};

  GenDataArgs gen_args;
  CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic labeled dataset");
  gen->add_option("--classes", gen_args.classes, "number of action classes (1..16)")
      ->check(CLI::Range(1, 16));
  gen->add_option("--per-class", gen_args.per_class, "samples per class per view")
      ->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_args.seed, "generation seed");
  gen->add_option("--image-size", gen_args.image_size, "stored image edge")
      ->check(CLI::PositiveNumber);
  gen->add_option("--canvas-size", gen_args.canvas_size, "render canvas edge")
      ->check(CLI::Range(16, 4096));
  gen->add_option("--jitter", gen_args.jitter, "landmark jitter sigma")
      ->check(CLI::NonNegativeNumber);
  gen->add_option("--out", gen_args.out, "dataset output directory")->required();

  ComposeArgs compose_args;
  CLI::App* compose = app.add_subcommand("compose", "overlay a rendered skeleton on an image");
  compose->add_option("--image", compose_args.image, "base PPM image")->required();
  compose->add_option("--landmarks", compose_args.landmarks, "landmark JSON document")
      ->required();
  compose->add_option("--out", compose_args.out, "output PPM path")->required();
  compose->add_option("--thickness", compose_args.thickness, "bone line thickness")
      ->check(CLI::PositiveNumber);
  compose->add_option("--radius", compose_args.radius, "joint disc radius")
      ->check(CLI::NonNegativeNumber);

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "train a single-view classifier");
  train->add_option("--data", train_args.data, "dataset root (with manifest.tsv)")->required();
  train->add_option("--view", train_args.view, "camera view to train on")
      ->required()
      ->check(CLI::IsMember(view_names));
  train->add_option("--out", train_args.out, "checkpoint output path")->required();
  train->add_option("--report", train_args.report, "per-epoch CSV report path");
  train->add_option("--epochs", train_args.epochs, "training epochs")
      ->check(CLI::PositiveNumber);
  train->add_option("--batch", train_args.batch, "minibatch size")->check(CLI::PositiveNumber);
  train->add_option("--lr", train_args.lr, "learning rate")->check(CLI::PositiveNumber);
  train->add_option("--wd", train_args.wd, "decoupled weight decay")
      ->check(CLI::NonNegativeNumber);
  train->add_option("--depth", train_args.depth, "encoder blocks")
      ->check(CLI::PositiveNumber);
  train->add_option("--heads", train_args.heads, "attention heads")
      ->check(CLI::PositiveNumber);
  train->add_option("--embed-dim", train_args.embed_dim, "token width")
      ->check(CLI::PositiveNumber);
  train->add_option("--patch", train_args.patch, "patch edge (also the stride)")
      ->check(CLI::PositiveNumber);
  train->add_option("--mlp-hidden", train_args.mlp_hidden, "MLP hidden width")
      ->check(CLI::PositiveNumber);
  train->add_option("--image-size", train_args.image_size,
                    "resize samples to this edge (0 keeps stored size)")
      ->check(CLI::NonNegativeNumber);
  train->add_option("--classes", train_args.classes,
                    "class count (0 infers from the manifest)")
      ->check(CLI::NonNegativeNumber);
  train->add_option("--seed", train_args.seed, "split/init/shuffle/dropout seed");
  train->add_option("--stop-acc", train_args.stop_acc,
                    "stop once training accuracy reaches this (values >1 disable)");

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "score a checkpoint on a dataset split");
  eval->add_option("--ckpt", eval_args.ckpt, "checkpoint path")->required();
  eval->add_option("--data", eval_args.data, "dataset root (with manifest.tsv)")->required();
  eval->add_option("--split", eval_args.split, "train, val, test, or all")
      ->check(CLI::IsMember({"train", "val", "test", "all"}));
  eval->add_option("--view", eval_args.view, "restrict to one camera view")
      ->check(CLI::IsMember(view_names));
  eval->add_option("--seed", eval_args.seed, "split seed (match the training run)");
  eval->add_option("--metrics", eval_args.metrics, "metrics CSV path (default stdout)");
  eval->add_option("--confusion", eval_args.confusion, "confusion matrix CSV path");

  InferArgs infer_args;
  CLI::App* infer = app.add_subcommand("infer", "classify one image");
  infer->add_option("--ckpt", infer_args.ckpt, "checkpoint path")->required();
  infer->add_option("--image", infer_args.image, "input PPM image")->required();
  infer->add_option("--landmarks", infer_args.landmarks,
                    "landmark JSON document to composite before classification");
  infer->add_option("--out", infer_args.out, "write the distribution document here");
  infer->add_option("--view", infer_args.view, "view tag recorded in the output")
      ->check(CLI::IsMember(view_names));
  infer->add_option("--thickness", infer_args.thickness, "bone line thickness")
      ->check(CLI::PositiveNumber);
  infer->add_option("--radius", infer_args.radius, "joint disc radius")
      ->check(CLI::NonNegativeNumber);

  FuseArgs fuse_args;
  CLI::App* fuse = app.add_subcommand("fuse", "fuse three per-view distribution documents");
  fuse->add_option("--dash", fuse_args.dash, "dashboard distribution document");
  fuse->add_option("--rear", fuse_args.rear, "rearview distribution document");
  fuse->add_option("--side", fuse_args.side, "rightside distribution document");
  fuse->add_option("--threshold", fuse_args.threshold, "peak-confidence election threshold")
      ->check(CLI::Range(0.0, 1.0));
  fuse->add_option("--out", fuse_args.out, "fusion document path (default stdout)");

  GradcheckArgs grad_args;
  CLI::App* grad = app.add_subcommand(
      "gradcheck", "compare analytic gradients against central differences");
  grad->add_option("--seed", grad_args.seed, "parameter/input seed");
  grad->add_option("--tol", grad_args.tol, "relative error tolerance")
      ->check(CLI::PositiveNumber);
  grad->add_option("--step", grad_args.step, "finite difference step")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  if (*fuse && (fuse_args.dash.empty() || fuse_args.rear.empty() || fuse_args.side.empty())) {
    std::cerr << "error: three views required (--dash, --rear, --side)\n";
    return kExitUsage;
  }

  if (*gen) return run_gen_data(gen_args);
  if (*compose) return run_compose(compose_args);
  if (*train) return run_train(train_args);
  if (*eval) return run_eval(eval_args);
  if (*infer) return run_infer(infer_args);
  if (*fuse) return run_fuse(fuse_args);
  if (*grad) return run_gradcheck(grad_args);
  std::cerr << "error: no subcommand selected\n";
  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

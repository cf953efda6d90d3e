#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "evjrs/instances.hpp"
#include "evjrs/mat.hpp"
#include "evjrs/mip.hpp"

namespace evjrs::learner {

struct ModelConfig {
  int d_model = 64;
  int heads = 4;
  int layers = 2;  // encoder depth
  int cls_hidden1 = 128;
  int cls_hidden2 = 128;
  int n_per_ev = 0;  // binary bits owned by one EV, from the column registry
  int horizon = 0;   // timesteps; feature rows have this many columns
  int token_types = 4;

  int d_k() const { return d_model / heads; }
  int ffn_hidden() const { return 4 * d_model; }
};

struct EncoderLayerParams {
  std::vector<Mat> wq, wk, wv;  // per head, d_model x d_k
  Mat wm;                       // d_model x d_model
  std::vector<double> ln1_gain, ln1_bias;
  Mat ffn_w1;  // ffn_hidden x d_model
  std::vector<double> ffn_b1;
  Mat ffn_w2;  // d_model x ffn_hidden
  std::vector<double> ffn_b2;
  std::vector<double> ln2_gain, ln2_bias;
};

struct TransformerParams {
  ModelConfig cfg;
  Mat embed_w;  // d_model x horizon
  std::vector<double> embed_b;
  Mat token_embed;  // token_types x d_model, added after the embedding FFN
  std::vector<EncoderLayerParams> encoder;
  Mat cls_w1;  // cls_hidden1 x d_model
  std::vector<double> cls_b1;
  Mat cls_w2;  // cls_hidden2 x cls_hidden1
  std::vector<double> cls_b2;
  Mat cls_w3;  // n_per_ev x cls_hidden2
  std::vector<double> cls_b3;
};

// Visits every trainable tensor as a flat double vector, in a fixed declared
// order shared by the optimizer, the checkpoint format and the gradient tests.
using ParamVisitor = std::function<void(const std::string&, std::vector<double>&)>;
void visit_params(TransformerParams& p, const ParamVisitor& fn);

// Seeded Xavier-uniform weights, zero biases, unit layer-norm gains.
TransformerParams init_params(const ModelConfig& cfg, uint64_t seed);
TransformerParams zeros_like(const TransformerParams& p);

struct EncoderLayerCache {
  Mat x_in;
  std::vector<Mat> q, k, v, att;  // per head
  Mat concat, mhsa;
  Mat sum1, norm1;
  std::vector<double> inv_std1;
  Mat y1;
  Mat ffn_z, ffn_r, ffn_out;
  Mat sum2, norm2;
  std::vector<double> inv_std2;
  Mat y2;
};

struct ForwardCache {
  Mat input;  // token rows as given
  std::vector<int> token_type;
  Mat embed_z;  // pre-activation
  Mat x0;       // embedded rows + token-type embedding
  std::vector<EncoderLayerCache> layers;
  std::vector<int> ev_rows;
  Mat cls_in, cls_z1, cls_h1, cls_z2, cls_h2, logits, probs;
};

// Probabilities for every EV token row, shape ev_count x n_per_ev; row k is
// EV k in canonical order. Works for any fleet size without retraining.
Mat forward(const TransformerParams& p, const instances::FeatureTensor& features,
            ForwardCache* cache = nullptr);

// Mean over all bits of -[y ln p + (1-y) ln(1-p)], probabilities clamped to
// [1e-12, 1 - 1e-12].
double bce_loss(const Mat& probs, const std::vector<uint8_t>& labels);

// Accumulates the loss gradient for one sample into `grads` (same shapes as
// `p`, typically from zeros_like).
void backward(const TransformerParams& p, const ForwardCache& cache,
              const std::vector<uint8_t>& labels, TransformerParams& grads);

struct Thresholds {
  double thr_0 = 1.0;
  double thr_1 = 1.0;
};

struct LabeledSample {
  instances::FeatureTensor features;  // normalized
  std::vector<uint8_t> labels;        // ev_count x n_per_ev bits, EV-major
  std::string instance_hash;
  double objective = 0.0;
  double solve_seconds = 0.0;
};

struct TrainConfig {
  int batch = 8;
  int epochs = 20;
  double lr = 1e-3;
  uint64_t seed = 1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
};

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> val_loss;  // NaN entries when no validation split given
};

// Seeded single-worker training with adaptive-moment updates; batches group
// samples of equal fleet size. Logs one line per epoch when `log` is set.
std::pair<TransformerParams, TrainHistory> train(const std::vector<LabeledSample>& train_set,
                                                 const std::vector<LabeledSample>& val_set,
                                                 const ModelConfig& mc, const TrainConfig& tc,
                                                 std::ostream* log = nullptr);

// Class-mean prediction probabilities over every validation bit: p = yhat for
// label-1 bits and 1 - yhat for label-0 bits; each class mean becomes its
// fixing threshold. Throws when a class is absent.
Thresholds calibrate_thresholds(const TransformerParams& p,
                                const std::vector<LabeledSample>& val);

// Runs one prediction per scenario on the instance's features and keeps the
// confident bits: fix 1 when yhat >= thr_1, fix 0 when 1 - yhat >= thr_0.
// Keys follow the stochastic model's scenario-major binary block.
mip::PartialAssignment predict_and_filter(const TransformerParams& p, const Thresholds& th,
                                          const instances::NormStats& stats,
                                          const instances::ProblemInstance& inst);

struct Checkpoint {
  TransformerParams params;
  instances::NormStats norm;
  Thresholds thresholds;
  bool has_thresholds = false;
};

// Binary checkpoint: magic, version, config integers, normalization
// statistics and thresholds, then parameter tensors in declared order as
// little-endian f64.
void write_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint read_checkpoint(const std::string& path);

}  // namespace evjrs::learner

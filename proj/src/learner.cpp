#include "evjrs/learner.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <string>

#include "evjrs/common.hpp"
#include "evjrs/hashutil.hpp"
#include "evjrs/kernels.hpp"
#include "evjrs/rng.hpp"

namespace evjrs::learner {

namespace {

constexpr double kLnEps = 1e-9;  // layer-norm variance floor
constexpr double kClamp = 1e-12;

void add_row_bias(Mat& m, const std::vector<double>& b) {
  for (int r = 0; r < m.rows; ++r) {
    double* row = m.row_ptr(r);
    for (int c = 0; c < m.cols; ++c) row[c] += b[c];
  }
}

Mat relu(const Mat& z) {
  Mat out = z;
  for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  return out;
}

// dz = dout masked by the pre-activation sign.
Mat relu_backward(const Mat& dout, const Mat& z) {
  Mat dz = dout;
  for (size_t i = 0; i < dz.data.size(); ++i)
    if (z.data[i] <= 0.0) dz.data[i] = 0.0;
  return dz;
}

void add_col_sums(const Mat& m, std::vector<double>& acc) {
  for (int r = 0; r < m.rows; ++r) {
    const double* row = m.row_ptr(r);
    for (int c = 0; c < m.cols; ++c) acc[c] += row[c];
  }
}

// Row-wise normalization over the feature dimension; stores the normalized
// rows and per-row inverse deviations for the backward pass.
Mat layer_norm(const Mat& s, const std::vector<double>& gain, const std::vector<double>& bias,
               Mat& normed, std::vector<double>& inv_std) {
  int n = s.rows, d = s.cols;
  normed = Mat(n, d);
  inv_std.assign(n, 0.0);
  Mat out(n, d);
  for (int r = 0; r < n; ++r) {
    const double* row = s.row_ptr(r);
    double mean = 0.0;
    for (int c = 0; c < d; ++c) mean += row[c];
    mean /= d;
    double var = 0.0;
    for (int c = 0; c < d; ++c) var += (row[c] - mean) * (row[c] - mean);
    var /= d;
    double is = 1.0 / std::sqrt(var + kLnEps);
    inv_std[r] = is;
    for (int c = 0; c < d; ++c) {
      double nv = (row[c] - mean) * is;
      normed(r, c) = nv;
      out(r, c) = gain[c] * nv + bias[c];
    }
  }
  return out;
}

Mat layer_norm_backward(const Mat& dout, const Mat& normed, const std::vector<double>& inv_std,
                        const std::vector<double>& gain, std::vector<double>& dgain,
                        std::vector<double>& dbias) {
  int n = dout.rows, d = dout.cols;
  Mat ds(n, d);
  std::vector<double> dn(d);
  for (int r = 0; r < n; ++r) {
    const double* dy = dout.row_ptr(r);
    const double* nv = normed.row_ptr(r);
    double sum_dn = 0.0, sum_dn_n = 0.0;
    for (int c = 0; c < d; ++c) {
      dbias[c] += dy[c];
      dgain[c] += dy[c] * nv[c];
      dn[c] = dy[c] * gain[c];
      sum_dn += dn[c];
      sum_dn_n += dn[c] * nv[c];
    }
    for (int c = 0; c < d; ++c)
      ds(r, c) = inv_std[r] * (dn[c] - sum_dn / d - nv[c] * sum_dn_n / d);
  }
  return ds;
}

void softmax_rows(Mat& m) {
  for (int r = 0; r < m.rows; ++r) {
    double* row = m.row_ptr(r);
    double mx = row[0];
    for (int c = 1; c < m.cols; ++c) mx = std::max(mx, row[c]);
    double sum = 0.0;
    for (int c = 0; c < m.cols; ++c) {
      row[c] = std::exp(row[c] - mx);
      sum += row[c];
    }
    for (int c = 0; c < m.cols; ++c) row[c] /= sum;
  }
}

// dS for S = softmax input, given dA and A = softmax(S), row-wise.
Mat softmax_backward(const Mat& da, const Mat& a) {
  Mat ds(a.rows, a.cols);
  for (int r = 0; r < a.rows; ++r) {
    const double* arow = a.row_ptr(r);
    const double* drow = da.row_ptr(r);
    double dot = 0.0;
    for (int c = 0; c < a.cols; ++c) dot += drow[c] * arow[c];
    for (int c = 0; c < a.cols; ++c) ds(r, c) = arow[c] * (drow[c] - dot);
  }
  return ds;
}

void check_config(const ModelConfig& cfg) {
  if (cfg.d_model <= 0 || cfg.heads <= 0 || cfg.d_model % cfg.heads != 0)
    throw Error(ErrorCategory::config, "d_model " + std::to_string(cfg.d_model) +
                                           " is not divisible by heads " +
                                           std::to_string(cfg.heads));
  if (cfg.layers <= 0 || cfg.cls_hidden1 <= 0 || cfg.cls_hidden2 <= 0)
    throw Error(ErrorCategory::config, "model sizes must be positive");
  if (cfg.n_per_ev <= 0 || cfg.horizon <= 0)
    throw Error(ErrorCategory::config, "n_per_ev and horizon must be set before building params");
}

Mat xavier(Rng& rng, int rows, int cols) {
  double limit = std::sqrt(6.0 / (rows + cols));
  Mat m(rows, cols);
  for (double& v : m.data) v = rng.uniform(-limit, limit);
  return m;
}

}  // namespace

void visit_params(TransformerParams& p, const ParamVisitor& fn) {
  fn("embed_w", p.embed_w.data);
  fn("embed_b", p.embed_b);
  fn("token_embed", p.token_embed.data);
  for (size_t l = 0; l < p.encoder.size(); ++l) {
    EncoderLayerParams& e = p.encoder[l];
    std::string base = "enc" + std::to_string(l) + ".";
    for (size_t h = 0; h < e.wq.size(); ++h) {
      std::string hh = std::to_string(h);
      fn(base + "wq" + hh, e.wq[h].data);
      fn(base + "wk" + hh, e.wk[h].data);
      fn(base + "wv" + hh, e.wv[h].data);
    }
    fn(base + "wm", e.wm.data);
    fn(base + "ln1_gain", e.ln1_gain);
    fn(base + "ln1_bias", e.ln1_bias);
    fn(base + "ffn_w1", e.ffn_w1.data);
    fn(base + "ffn_b1", e.ffn_b1);
    fn(base + "ffn_w2", e.ffn_w2.data);
    fn(base + "ffn_b2", e.ffn_b2);
    fn(base + "ln2_gain", e.ln2_gain);
    fn(base + "ln2_bias", e.ln2_bias);
  }
  fn("cls_w1", p.cls_w1.data);
  fn("cls_b1", p.cls_b1);
  fn("cls_w2", p.cls_w2.data);
  fn("cls_b2", p.cls_b2);
  fn("cls_w3", p.cls_w3.data);
  fn("cls_b3", p.cls_b3);
}

TransformerParams init_params(const ModelConfig& cfg, uint64_t seed) {
  check_config(cfg);
  Rng rng(seed);
  TransformerParams p;
  p.cfg = cfg;
  p.embed_w = xavier(rng, cfg.d_model, cfg.horizon);
  p.embed_b.assign(cfg.d_model, 0.0);
  p.token_embed = Mat(cfg.token_types, cfg.d_model);
  for (double& v : p.token_embed.data) v = rng.normal(0.0, 0.02);
  p.encoder.resize(cfg.layers);
  for (EncoderLayerParams& e : p.encoder) {
    e.wq.resize(cfg.heads);
    e.wk.resize(cfg.heads);
    e.wv.resize(cfg.heads);
    for (int h = 0; h < cfg.heads; ++h) {
      e.wq[h] = xavier(rng, cfg.d_model, cfg.d_k());
      e.wk[h] = xavier(rng, cfg.d_model, cfg.d_k());
      e.wv[h] = xavier(rng, cfg.d_model, cfg.d_k());
    }
    e.wm = xavier(rng, cfg.d_model, cfg.d_model);
    e.ln1_gain.assign(cfg.d_model, 1.0);
    e.ln1_bias.assign(cfg.d_model, 0.0);
    e.ffn_w1 = xavier(rng, cfg.ffn_hidden(), cfg.d_model);
    e.ffn_b1.assign(cfg.ffn_hidden(), 0.0);
    e.ffn_w2 = xavier(rng, cfg.d_model, cfg.ffn_hidden());
    e.ffn_b2.assign(cfg.d_model, 0.0);
    e.ln2_gain.assign(cfg.d_model, 1.0);
    e.ln2_bias.assign(cfg.d_model, 0.0);
  }
  p.cls_w1 = xavier(rng, cfg.cls_hidden1, cfg.d_model);
  p.cls_b1.assign(cfg.cls_hidden1, 0.0);
  p.cls_w2 = xavier(rng, cfg.cls_hidden2, cfg.cls_hidden1);
  p.cls_b2.assign(cfg.cls_hidden2, 0.0);
  p.cls_w3 = xavier(rng, cfg.n_per_ev, cfg.cls_hidden2);
  p.cls_b3.assign(cfg.n_per_ev, 0.0);
  return p;
}

TransformerParams zeros_like(const TransformerParams& p) {
  TransformerParams z = p;
  visit_params(z, [](const std::string&, std::vector<double>& v) {
    std::fill(v.begin(), v.end(), 0.0);
  });
  return z;
}

Mat forward(const TransformerParams& p, const instances::FeatureTensor& features,
            ForwardCache* cache) {
  const ModelConfig& cfg = p.cfg;
  const Mat& x = features.tokens;
  if (x.cols != cfg.horizon)
    throw Error(ErrorCategory::validation,
                "feature rows have " + std::to_string(x.cols) + " columns, model expects " +
                    std::to_string(cfg.horizon));
  if (static_cast<int>(features.token_type.size()) != x.rows)
    throw Error(ErrorCategory::validation,
                "token type count " + std::to_string(features.token_type.size()) +
                    " does not match " + std::to_string(x.rows) + " feature rows");

  // Row-wise embedding FFN plus the learned token-type vector.
  Mat embed_z = kernels::matmul_nt(x, p.embed_w);
  add_row_bias(embed_z, p.embed_b);
  Mat cur = relu(embed_z);
  for (int r = 0; r < cur.rows; ++r) {
    int ty = features.token_type[r];
    if (ty < 0 || ty >= cfg.token_types)
      throw Error(ErrorCategory::validation, "token type " + std::to_string(ty) + " out of range");
    const double* te = p.token_embed.row_ptr(ty);
    double* row = cur.row_ptr(r);
    for (int c = 0; c < cfg.d_model; ++c) row[c] += te[c];
  }

  if (cache) {
    cache->input = x;
    cache->token_type = features.token_type;
    cache->embed_z = embed_z;
    cache->x0 = cur;
    cache->layers.assign(cfg.layers, {});
  }

  double scale = 1.0 / std::sqrt(static_cast<double>(cfg.d_k()));
  for (int l = 0; l < cfg.layers; ++l) {
    const EncoderLayerParams& e = p.encoder[l];
    EncoderLayerCache lc;
    lc.x_in = cur;

    Mat concat(cur.rows, cfg.d_model);
    lc.q.resize(cfg.heads);
    lc.k.resize(cfg.heads);
    lc.v.resize(cfg.heads);
    lc.att.resize(cfg.heads);
    for (int h = 0; h < cfg.heads; ++h) {
      Mat q = kernels::matmul(cur, e.wq[h]);
      Mat k = kernels::matmul(cur, e.wk[h]);
      Mat v = kernels::matmul(cur, e.wv[h]);
      Mat att = kernels::matmul_nt(q, k);
      for (double& s : att.data) s *= scale;
      softmax_rows(att);
      Mat head = kernels::matmul(att, v);
      for (int r = 0; r < head.rows; ++r)
        std::memcpy(concat.row_ptr(r) + h * cfg.d_k(), head.row_ptr(r),
                    sizeof(double) * cfg.d_k());
      lc.q[h] = std::move(q);
      lc.k[h] = std::move(k);
      lc.v[h] = std::move(v);
      lc.att[h] = std::move(att);
    }
    Mat mhsa = kernels::matmul(concat, e.wm);

    Mat sum1 = cur;
    for (size_t i = 0; i < sum1.data.size(); ++i) sum1.data[i] += mhsa.data[i];
    Mat y1 = layer_norm(sum1, e.ln1_gain, e.ln1_bias, lc.norm1, lc.inv_std1);

    Mat ffn_z = kernels::matmul_nt(y1, e.ffn_w1);
    add_row_bias(ffn_z, e.ffn_b1);
    Mat ffn_r = relu(ffn_z);
    Mat ffn_out = kernels::matmul_nt(ffn_r, e.ffn_w2);
    add_row_bias(ffn_out, e.ffn_b2);

    Mat sum2 = y1;
    for (size_t i = 0; i < sum2.data.size(); ++i) sum2.data[i] += ffn_out.data[i];
    Mat y2 = layer_norm(sum2, e.ln2_gain, e.ln2_bias, lc.norm2, lc.inv_std2);

    cur = y2;
    if (cache) {
      lc.concat = std::move(concat);
      lc.mhsa = std::move(mhsa);
      lc.sum1 = std::move(sum1);
      lc.y1 = std::move(y1);
      lc.ffn_z = std::move(ffn_z);
      lc.ffn_r = std::move(ffn_r);
      lc.ffn_out = std::move(ffn_out);
      lc.sum2 = std::move(sum2);
      lc.y2 = cur;
      cache->layers[l] = std::move(lc);
    }
  }

  // Classification head, applied only to the EV token rows.
  std::vector<int> ev_rows;
  for (int r = 0; r < x.rows; ++r)
    if (features.token_type[r] == static_cast<int>(instances::TokenType::ev)) ev_rows.push_back(r);
  if (static_cast<int>(ev_rows.size()) != features.ev_count)
    throw Error(ErrorCategory::validation,
                "feature tensor declares " + std::to_string(features.ev_count) +
                    " EVs but has " + std::to_string(ev_rows.size()) + " EV token rows");

  Mat cls_in(static_cast<int>(ev_rows.size()), cfg.d_model);
  for (size_t i = 0; i < ev_rows.size(); ++i)
    std::memcpy(cls_in.row_ptr(static_cast<int>(i)), cur.row_ptr(ev_rows[i]),
                sizeof(double) * cfg.d_model);

  Mat z1 = kernels::matmul_nt(cls_in, p.cls_w1);
  add_row_bias(z1, p.cls_b1);
  Mat h1 = relu(z1);
  Mat z2 = kernels::matmul_nt(h1, p.cls_w2);
  add_row_bias(z2, p.cls_b2);
  Mat h2 = relu(z2);
  Mat logits = kernels::matmul_nt(h2, p.cls_w3);
  add_row_bias(logits, p.cls_b3);

  Mat probs = logits;
  for (double& v : probs.data) v = 1.0 / (1.0 + std::exp(-v));

  if (cache) {
    cache->ev_rows = std::move(ev_rows);
    cache->cls_in = std::move(cls_in);
    cache->cls_z1 = std::move(z1);
    cache->cls_h1 = std::move(h1);
    cache->cls_z2 = std::move(z2);
    cache->cls_h2 = std::move(h2);
    cache->logits = std::move(logits);
    cache->probs = probs;
  }
  return probs;
}

double bce_loss(const Mat& probs, const std::vector<uint8_t>& labels) {
  if (labels.size() != probs.data.size())
    throw Error(ErrorCategory::validation,
                "label count " + std::to_string(labels.size()) + " does not match " +
                    std::to_string(probs.data.size()) + " predictions");
  double sum = 0.0;
  for (size_t i = 0; i < labels.size(); ++i) {
    double p = std::clamp(probs.data[i], kClamp, 1.0 - kClamp);
    sum -= labels[i] ? std::log(p) : std::log(1.0 - p);
  }
  return sum / static_cast<double>(labels.size());
}

void backward(const TransformerParams& p, const ForwardCache& cache,
              const std::vector<uint8_t>& labels, TransformerParams& grads) {
  const ModelConfig& cfg = p.cfg;
  const Mat& probs = cache.probs;
  if (labels.size() != probs.data.size())
    throw Error(ErrorCategory::validation,
                "label count " + std::to_string(labels.size()) + " does not match " +
                    std::to_string(probs.data.size()) + " predictions");

  // d loss / d logits for mean BCE through the sigmoid.
  Mat dlogits(probs.rows, probs.cols);
  double inv_count = 1.0 / static_cast<double>(probs.data.size());
  for (size_t i = 0; i < probs.data.size(); ++i)
    dlogits.data[i] = (probs.data[i] - labels[i]) * inv_count;

  // Classification head.
  {
    Mat dw3 = kernels::matmul_tn(dlogits, cache.cls_h2);
    for (size_t i = 0; i < dw3.data.size(); ++i) grads.cls_w3.data[i] += dw3.data[i];
    add_col_sums(dlogits, grads.cls_b3);
  }
  Mat dh2 = kernels::matmul(dlogits, p.cls_w3);
  Mat dz2 = relu_backward(dh2, cache.cls_z2);
  {
    Mat dw2 = kernels::matmul_tn(dz2, cache.cls_h1);
    for (size_t i = 0; i < dw2.data.size(); ++i) grads.cls_w2.data[i] += dw2.data[i];
    add_col_sums(dz2, grads.cls_b2);
  }
  Mat dh1 = kernels::matmul(dz2, p.cls_w2);
  Mat dz1 = relu_backward(dh1, cache.cls_z1);
  {
    Mat dw1 = kernels::matmul_tn(dz1, cache.cls_in);
    for (size_t i = 0; i < dw1.data.size(); ++i) grads.cls_w1.data[i] += dw1.data[i];
    add_col_sums(dz1, grads.cls_b1);
  }
  Mat dcls_in = kernels::matmul(dz1, p.cls_w1);

  // Scatter the head gradient back onto the EV token rows.
  int n = cache.input.rows;
  Mat dcur(n, cfg.d_model);
  for (size_t i = 0; i < cache.ev_rows.size(); ++i)
    std::memcpy(dcur.row_ptr(cache.ev_rows[i]), dcls_in.row_ptr(static_cast<int>(i)),
                sizeof(double) * cfg.d_model);

  double scale = 1.0 / std::sqrt(static_cast<double>(cfg.d_k()));
  for (int l = cfg.layers - 1; l >= 0; --l) {
    const EncoderLayerParams& e = p.encoder[l];
    EncoderLayerParams& ge = grads.encoder[l];
    const EncoderLayerCache& lc = cache.layers[l];

    Mat dsum2 =
        layer_norm_backward(dcur, lc.norm2, lc.inv_std2, e.ln2_gain, ge.ln2_gain, ge.ln2_bias);

    // Position-wise FFN sublayer; dsum2 also flows through the residual.
    Mat dffn_out = dsum2;
    {
      Mat dw2 = kernels::matmul_tn(dffn_out, lc.ffn_r);
      for (size_t i = 0; i < dw2.data.size(); ++i) ge.ffn_w2.data[i] += dw2.data[i];
      add_col_sums(dffn_out, ge.ffn_b2);
    }
    Mat dr = kernels::matmul(dffn_out, e.ffn_w2);
    Mat dz = relu_backward(dr, lc.ffn_z);
    {
      Mat dw1 = kernels::matmul_tn(dz, lc.y1);
      for (size_t i = 0; i < dw1.data.size(); ++i) ge.ffn_w1.data[i] += dw1.data[i];
      add_col_sums(dz, ge.ffn_b1);
    }
    Mat dy1 = dsum2;
    {
      Mat through = kernels::matmul(dz, e.ffn_w1);
      for (size_t i = 0; i < dy1.data.size(); ++i) dy1.data[i] += through.data[i];
    }

    Mat dsum1 =
        layer_norm_backward(dy1, lc.norm1, lc.inv_std1, e.ln1_gain, ge.ln1_gain, ge.ln1_bias);

    // Attention sublayer; dsum1 also flows through the residual.
    Mat dmhsa = dsum1;
    Mat dx = dsum1;
    {
      Mat dwm = kernels::matmul_tn(lc.concat, dmhsa);
      for (size_t i = 0; i < dwm.data.size(); ++i) ge.wm.data[i] += dwm.data[i];
    }
    Mat dconcat = kernels::matmul_nt(dmhsa, e.wm);
    for (int h = 0; h < cfg.heads; ++h) {
      Mat dhead(n, cfg.d_k());
      for (int r = 0; r < n; ++r)
        std::memcpy(dhead.row_ptr(r), dconcat.row_ptr(r) + h * cfg.d_k(),
                    sizeof(double) * cfg.d_k());
      Mat dv = kernels::matmul_tn(lc.att[h], dhead);
      Mat datt = kernels::matmul_nt(dhead, lc.v[h]);
      Mat dscores = softmax_backward(datt, lc.att[h]);
      for (double& v : dscores.data) v *= scale;
      Mat dq = kernels::matmul(dscores, lc.k[h]);
      Mat dk = kernels::matmul_tn(dscores, lc.q[h]);
      {
        Mat dwq = kernels::matmul_tn(lc.x_in, dq);
        Mat dwk = kernels::matmul_tn(lc.x_in, dk);
        Mat dwv = kernels::matmul_tn(lc.x_in, dv);
        for (size_t i = 0; i < dwq.data.size(); ++i) {
          ge.wq[h].data[i] += dwq.data[i];
          ge.wk[h].data[i] += dwk.data[i];
          ge.wv[h].data[i] += dwv.data[i];
        }
      }
      Mat tq = kernels::matmul_nt(dq, e.wq[h]);
      Mat tk = kernels::matmul_nt(dk, e.wk[h]);
      Mat tv = kernels::matmul_nt(dv, e.wv[h]);
      for (size_t i = 0; i < dx.data.size(); ++i)
        dx.data[i] += tq.data[i] + tk.data[i] + tv.data[i];
    }
    dcur = std::move(dx);
  }

  // Embedding FFN and token-type table.
  for (int r = 0; r < n; ++r) {
    double* te = grads.token_embed.row_ptr(cache.token_type[r]);
    const double* row = dcur.row_ptr(r);
    for (int c = 0; c < cfg.d_model; ++c) te[c] += row[c];
  }
  Mat dembed_z = relu_backward(dcur, cache.embed_z);
  {
    Mat dw = kernels::matmul_tn(dembed_z, cache.input);
    for (size_t i = 0; i < dw.data.size(); ++i) grads.embed_w.data[i] += dw.data[i];
    add_col_sums(dembed_z, grads.embed_b);
  }
}

namespace {

// Flat views over every tensor, shared by the optimizer and checkpointing.
std::vector<std::vector<double>*> tensor_list(TransformerParams& p) {
  std::vector<std::vector<double>*> out;
  visit_params(p, [&](const std::string&, std::vector<double>& v) { out.push_back(&v); });
  return out;
}

double mean_loss(const TransformerParams& p, const std::vector<LabeledSample>& set) {
  if (set.empty()) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  for (const LabeledSample& s : set) sum += bce_loss(forward(p, s.features), s.labels);
  return sum / static_cast<double>(set.size());
}

}  // namespace

std::pair<TransformerParams, TrainHistory> train(const std::vector<LabeledSample>& train_set,
                                                 const std::vector<LabeledSample>& val_set,
                                                 const ModelConfig& mc, const TrainConfig& tc,
                                                 std::ostream* log) {
  if (train_set.empty())
    throw Error(ErrorCategory::validation, "cannot train on an empty dataset");
  if (tc.batch < 1) throw Error(ErrorCategory::config, "batch size must be at least 1");

  TransformerParams params = init_params(mc, tc.seed);
  TransformerParams grads = zeros_like(params);
  auto ptensors = tensor_list(params);
  auto gtensors = tensor_list(grads);

  size_t total = 0;
  for (auto* t : ptensors) total += t->size();
  std::vector<double> adam_m(total, 0.0), adam_v(total, 0.0);
  long step = 0;

  Rng shuffle_rng(child_seed(tc.seed, 1));
  TrainHistory history;

  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    std::vector<int> order(train_set.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    shuffle_rng.shuffle(order.begin(), order.end());

    // Same-fleet-size batches, filled in shuffled order.
    std::vector<std::vector<int>> batches;
    std::map<int, std::vector<int>> buckets;
    for (int idx : order) {
      auto& bucket = buckets[train_set[idx].features.ev_count];
      bucket.push_back(idx);
      if (static_cast<int>(bucket.size()) == tc.batch) {
        batches.push_back(std::move(bucket));
        bucket.clear();
      }
    }
    for (auto& [e, bucket] : buckets)
      if (!bucket.empty()) batches.push_back(std::move(bucket));

    double epoch_loss = 0.0;
    for (const auto& batch : batches) {
      for (auto* t : gtensors) std::fill(t->begin(), t->end(), 0.0);
      for (int idx : batch) {
        ForwardCache cache;
        Mat probs = forward(params, train_set[idx].features, &cache);
        epoch_loss += bce_loss(probs, train_set[idx].labels);
        backward(params, cache, train_set[idx].labels, grads);
      }
      double inv_b = 1.0 / static_cast<double>(batch.size());
      ++step;
      double corr1 = 1.0 - std::pow(tc.beta1, step);
      double corr2 = 1.0 - std::pow(tc.beta2, step);
      size_t off = 0;
      for (size_t t = 0; t < ptensors.size(); ++t) {
        std::vector<double>& pv = *ptensors[t];
        std::vector<double>& gv = *gtensors[t];
        for (size_t i = 0; i < pv.size(); ++i) {
          double g = gv[i] * inv_b;
          double& m = adam_m[off + i];
          double& v = adam_v[off + i];
          m = tc.beta1 * m + (1.0 - tc.beta1) * g;
          v = tc.beta2 * v + (1.0 - tc.beta2) * g * g;
          pv[i] -= tc.lr * (m / corr1) / (std::sqrt(v / corr2) + tc.adam_eps);
        }
        off += pv.size();
      }
    }

    history.train_loss.push_back(epoch_loss / static_cast<double>(train_set.size()));
    history.val_loss.push_back(mean_loss(params, val_set));
    if (log)
      *log << "epoch " << epoch << " train " << history.train_loss.back() << " val "
           << history.val_loss.back() << "\n";
  }
  return {std::move(params), std::move(history)};
}

Thresholds calibrate_thresholds(const TransformerParams& p,
                                const std::vector<LabeledSample>& val) {
  double sum[2] = {0.0, 0.0};
  long count[2] = {0, 0};
  for (const LabeledSample& s : val) {
    Mat probs = forward(p, s.features);
    if (s.labels.size() != probs.data.size())
      throw Error(ErrorCategory::validation, "sample label count does not match predictions");
    for (size_t i = 0; i < s.labels.size(); ++i) {
      int y = s.labels[i] ? 1 : 0;
      sum[y] += y ? probs.data[i] : 1.0 - probs.data[i];
      ++count[y];
    }
  }
  for (int c = 0; c < 2; ++c)
    if (count[c] == 0)
      throw Error(ErrorCategory::validation,
                  "calibration set has no class-" + std::to_string(c) + " bits");
  return {sum[0] / count[0], sum[1] / count[1]};
}

mip::PartialAssignment predict_and_filter(const TransformerParams& p, const Thresholds& th,
                                          const instances::NormStats& stats,
                                          const instances::ProblemInstance& inst) {
  mip::PartialAssignment pa;
  int e = inst.fleet_size();
  int npe = p.cfg.n_per_ev;
  for (int sc = 0; sc < inst.scenarios.count(); ++sc) {
    instances::FeatureTensor ft = instances::encode_features(inst, sc);
    instances::apply_normalization(ft, stats);
    Mat probs = forward(p, ft);
    for (int k = 0; k < e; ++k)
      for (int i = 0; i < npe; ++i) {
        double yhat = probs(k, i);
        int col = (sc * e + k) * npe + i;
        if (yhat >= th.thr_1)
          pa.fixes[col] = 1;
        else if (1.0 - yhat >= th.thr_0)
          pa.fixes[col] = 0;
      }
  }
  return pa;
}

// ---- Checkpoint files ----

namespace {

constexpr char kCkptMagic[4] = {'E', 'V', 'C', 'K'};
constexpr uint32_t kCkptVersion = 1;

void put_i32(std::string& s, int32_t v) { s.append(reinterpret_cast<const char*>(&v), 4); }
void put_u64(std::string& s, uint64_t v) { s.append(reinterpret_cast<const char*>(&v), 8); }
void put_f64(std::string& s, double v) { s.append(reinterpret_cast<const char*>(&v), 8); }

struct ByteReader {
  const std::string& bytes;
  const std::string& path;
  size_t pos = 0;

  void need(size_t n) const {
    if (pos + n > bytes.size())
      throw Error(ErrorCategory::io, path + ": truncated checkpoint at byte " +
                                         std::to_string(bytes.size()) + " (needed " +
                                         std::to_string(pos + n) + ")");
  }
  template <typename T>
  T take() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
  }
};

}  // namespace

void write_checkpoint(const std::string& path, const Checkpoint& ck) {
  std::string bytes;
  bytes.append(kCkptMagic, 4);
  uint32_t ver = kCkptVersion;
  bytes.append(reinterpret_cast<const char*>(&ver), 4);
  const ModelConfig& c = ck.params.cfg;
  put_i32(bytes, c.d_model);
  put_i32(bytes, c.heads);
  put_i32(bytes, c.layers);
  put_i32(bytes, c.cls_hidden1);
  put_i32(bytes, c.cls_hidden2);
  put_i32(bytes, c.n_per_ev);
  put_i32(bytes, c.horizon);
  put_i32(bytes, c.token_types);
  bytes.push_back(ck.norm.valid ? 1 : 0);
  for (double v : ck.norm.lo) put_f64(bytes, v);
  for (double v : ck.norm.hi) put_f64(bytes, v);
  bytes.push_back(ck.has_thresholds ? 1 : 0);
  put_f64(bytes, ck.thresholds.thr_0);
  put_f64(bytes, ck.thresholds.thr_1);

  TransformerParams copy = ck.params;
  visit_params(copy, [&](const std::string&, std::vector<double>& v) {
    put_u64(bytes, v.size());
    bytes.append(reinterpret_cast<const char*>(v.data()), v.size() * 8);
  });
  write_file(path, bytes);
}

Checkpoint read_checkpoint(const std::string& path) {
  std::string bytes = read_file(path);
  ByteReader rd{bytes, path};
  rd.need(4);
  if (std::memcmp(bytes.data(), kCkptMagic, 4) != 0)
    throw Error(ErrorCategory::io, path + ": not a checkpoint file (bad magic)");
  rd.pos = 4;
  uint32_t ver = rd.take<uint32_t>();
  if (ver != kCkptVersion)
    throw Error(ErrorCategory::io,
                path + ": unsupported checkpoint schema version " + std::to_string(ver));
  ModelConfig cfg;
  cfg.d_model = rd.take<int32_t>();
  cfg.heads = rd.take<int32_t>();
  cfg.layers = rd.take<int32_t>();
  cfg.cls_hidden1 = rd.take<int32_t>();
  cfg.cls_hidden2 = rd.take<int32_t>();
  cfg.n_per_ev = rd.take<int32_t>();
  cfg.horizon = rd.take<int32_t>();
  cfg.token_types = rd.take<int32_t>();

  Checkpoint ck;
  ck.norm.valid = rd.take<uint8_t>() != 0;
  for (double& v : ck.norm.lo) v = rd.take<double>();
  for (double& v : ck.norm.hi) v = rd.take<double>();
  ck.has_thresholds = rd.take<uint8_t>() != 0;
  ck.thresholds.thr_0 = rd.take<double>();
  ck.thresholds.thr_1 = rd.take<double>();

  ck.params = init_params(cfg, 0);
  visit_params(ck.params, [&](const std::string& name, std::vector<double>& v) {
    uint64_t len = rd.take<uint64_t>();
    if (len != v.size())
      throw Error(ErrorCategory::io, path + ": tensor " + name + " holds " + std::to_string(len) +
                                         " values, expected " + std::to_string(v.size()));
    rd.need(len * 8);
    std::memcpy(v.data(), bytes.data() + rd.pos, len * 8);
    rd.pos += len * 8;
  });
  if (rd.pos != bytes.size())
    throw Error(ErrorCategory::io, path + ": " + std::to_string(bytes.size() - rd.pos) +
                                       " trailing bytes after parameters");
  return ck;
}

}  // namespace evjrs::learner

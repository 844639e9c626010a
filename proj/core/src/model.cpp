#include "reqgen/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "reqgen/rng.hpp"

namespace reqgen {

namespace {

constexpr double kLnEps = 1e-5;
const double kNegInf = -std::numeric_limits<double>::infinity();

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::sqrt(2.0)));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  return cdf + x * pdf;
}

double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

// Row-wise y = gain .* (x - mean)/sqrt(var + eps) + bias, caching xhat and the
// inverse stddev for the backward pass.
void layer_norm(const Matrix& x, const Matrix& gain, const Matrix& bias, Matrix& xhat,
                Vector& inv_std, Matrix& y) {
  const auto n = x.rows();
  const auto d = x.cols();
  xhat.resize(n, d);
  y.resize(n, d);
  inv_std.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mu = x.row(i).mean();
    const double var = (x.row(i).array() - mu).square().mean();
    const double inv = 1.0 / std::sqrt(var + kLnEps);
    inv_std(i) = inv;
    xhat.row(i) = (x.row(i).array() - mu) * inv;
    y.row(i) = xhat.row(i).cwiseProduct(gain.row(0)) + bias.row(0);
  }
}

void layer_norm_backward(const Matrix& dy, const Matrix& xhat, const Vector& inv_std,
                         const Matrix& gain, Matrix& dx, Matrix& dgain, Matrix& dbias) {
  const auto n = dy.rows();
  const auto d = dy.cols();
  dx.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    dgain.row(0) += dy.row(i).cwiseProduct(xhat.row(i));
    dbias.row(0) += dy.row(i);
    const Eigen::RowVectorXd dxhat = dy.row(i).cwiseProduct(gain.row(0));
    const double m1 = dxhat.mean();
    const double m2 = dxhat.cwiseProduct(xhat.row(i)).mean();
    dx.row(i) = inv_std(i) * (dxhat.array() - m1 - xhat.row(i).array() * m2);
  }
  (void)d;
}

// Softmax over rows of scores (additive mask already applied; -inf entries
// come out as exact zeros).
Matrix softmax_rows(const Matrix& scores) {
  Matrix p(scores.rows(), scores.cols());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const double m = scores.row(i).maxCoeff();
    Eigen::RowVectorXd e = (scores.row(i).array() - m).exp();
    p.row(i) = e / e.sum();
  }
  return p;
}

Matrix softmax_rows_backward(const Matrix& p, const Matrix& dp) {
  Matrix ds(p.rows(), p.cols());
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const double dot = dp.row(i).dot(p.row(i));
    ds.row(i) = p.row(i).cwiseProduct((dp.row(i).array() - dot).matrix());
  }
  return ds;
}

void gru_direction(const Matrix& embed, const GruParams& cell, bool reverse, Matrix& h, Matrix& z,
                   Matrix& r, Matrix& hc) {
  const auto n = embed.rows();
  const auto hidden = cell.bz.cols();
  h.setZero(n, hidden);
  z.setZero(n, hidden);
  r.setZero(n, hidden);
  hc.setZero(n, hidden);
  Eigen::RowVectorXd hprev = Eigen::RowVectorXd::Zero(hidden);
  for (Eigen::Index step = 0; step < n; ++step) {
    const Eigen::Index t = reverse ? n - 1 - step : step;
    const Eigen::RowVectorXd x = embed.row(t);
    Eigen::RowVectorXd zt = x * cell.wz + hprev * cell.uz + cell.bz.row(0);
    Eigen::RowVectorXd rt = x * cell.wr + hprev * cell.ur + cell.br.row(0);
    for (Eigen::Index j = 0; j < hidden; ++j) {
      zt(j) = sigmoid(zt(j));
      rt(j) = sigmoid(rt(j));
    }
    Eigen::RowVectorXd hct =
        (x * cell.wh + rt.cwiseProduct(hprev) * cell.uh + cell.bh.row(0)).array().tanh();
    Eigen::RowVectorXd ht =
        (1.0 - zt.array()) * hprev.array() + zt.array() * hct.array();
    z.row(t) = zt;
    r.row(t) = rt;
    hc.row(t) = hct;
    h.row(t) = ht;
    hprev = ht;
  }
}

void gru_direction_backward(const Matrix& embed, const GruParams& cell, bool reverse,
                            const Matrix& h, const Matrix& z, const Matrix& r, const Matrix& hc,
                            const Matrix& dh_direct, Matrix& dembed, GruParams& grad) {
  const auto n = embed.rows();
  const auto hidden = cell.bz.cols();
  Eigen::RowVectorXd carry = Eigen::RowVectorXd::Zero(hidden);
  for (Eigen::Index step = n - 1; step >= 0; --step) {
    const Eigen::Index t = reverse ? n - 1 - step : step;
    const Eigen::Index tprev = reverse ? t + 1 : t - 1;
    const bool first = step == 0;
    const Eigen::RowVectorXd hprev =
        first ? Eigen::RowVectorXd::Zero(hidden) : Eigen::RowVectorXd(h.row(tprev));
    const Eigen::RowVectorXd x = embed.row(t);
    const Eigen::RowVectorXd dh = dh_direct.row(t) + carry;

    const Eigen::RowVectorXd dz = dh.cwiseProduct(hc.row(t) - hprev);
    const Eigen::RowVectorXd dhc = dh.cwiseProduct(z.row(t));
    Eigen::RowVectorXd dhprev = dh.cwiseProduct(Eigen::RowVectorXd::Ones(hidden) - z.row(t));

    const Eigen::RowVectorXd dhc_pre =
        dhc.array() * (1.0 - hc.row(t).array().square());
    grad.wh += x.transpose() * dhc_pre;
    grad.uh += (r.row(t).cwiseProduct(hprev)).transpose() * dhc_pre;
    grad.bh.row(0) += dhc_pre;
    Eigen::RowVectorXd dx = dhc_pre * cell.wh.transpose();
    const Eigen::RowVectorXd drh = dhc_pre * cell.uh.transpose();
    const Eigen::RowVectorXd dr = drh.cwiseProduct(hprev);
    dhprev += drh.cwiseProduct(r.row(t));

    const Eigen::RowVectorXd dz_pre =
        dz.array() * z.row(t).array() * (1.0 - z.row(t).array());
    const Eigen::RowVectorXd dr_pre =
        dr.array() * r.row(t).array() * (1.0 - r.row(t).array());
    grad.wz += x.transpose() * dz_pre;
    grad.uz += hprev.transpose() * dz_pre;
    grad.bz.row(0) += dz_pre;
    dx += dz_pre * cell.wz.transpose();
    dhprev += dz_pre * cell.uz.transpose();
    grad.wr += x.transpose() * dr_pre;
    grad.ur += hprev.transpose() * dr_pre;
    grad.br.row(0) += dr_pre;
    dx += dr_pre * cell.wr.transpose();
    dhprev += dr_pre * cell.ur.transpose();

    dembed.row(t) += dx;
    carry = dhprev;
  }
}

void check_ids(const std::vector<int>& ids, int vocab_size) {
  for (int id : ids)
    if (id < 0 || id >= vocab_size) throw std::out_of_range("token id outside vocabulary");
}

}  // namespace

void ModelConfig::validate() const {
  if (depth < 1 || d_model < 1 || heads < 1 || d_ffn < 1 || max_len < 2 || vocab_size < 5 ||
      knowledge_hidden < 1 || batch_size < 1)
    throw std::invalid_argument("model dimensions must be positive");
  if (d_model % heads != 0) throw std::invalid_argument("d_model must be divisible by heads");
  for (int layer : injection_layers)
    if (layer < 1 || layer > depth)
      throw std::invalid_argument("injection layer outside [1, depth]");
}

bool ModelConfig::injects_at(int layer) const {
  return std::find(injection_layers.begin(), injection_layers.end(), layer) !=
         injection_layers.end();
}

void Parameters::visit(const std::function<void(const std::string&, Matrix&)>& fn) {
  fn("tok_embed", tok_embed);
  fn("pos_embed", pos_embed);
  fn("seg_embed", seg_embed);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string p = "layer" + std::to_string(i) + ".";
    LayerParams& l = layers[i];
    fn(p + "ln1.gain", l.ln1_gain);
    fn(p + "ln1.bias", l.ln1_bias);
    fn(p + "attn.wq", l.wq);
    fn(p + "attn.wk", l.wk);
    fn(p + "attn.wv", l.wv);
    fn(p + "attn.wo", l.wo);
    fn(p + "ln2.gain", l.ln2_gain);
    fn(p + "ln2.bias", l.ln2_bias);
    fn(p + "ffn.w1", l.ffn_w1);
    fn(p + "ffn.b1", l.ffn_b1);
    fn(p + "ffn.w2", l.ffn_w2);
    fn(p + "ffn.b2", l.ffn_b2);
  }
  for (auto& [layer, inj] : injections) {
    const std::string p = "inject" + std::to_string(layer) + ".";
    fn(p + "w", inj.w);
    fn(p + "ln.gain", inj.ln_gain);
    fn(p + "ln.bias", inj.ln_bias);
  }
  if (!injections.empty()) {
    auto visit_gru = [&](const std::string& p, GruParams& g) {
      fn(p + "wz", g.wz);
      fn(p + "uz", g.uz);
      fn(p + "bz", g.bz);
      fn(p + "wr", g.wr);
      fn(p + "ur", g.ur);
      fn(p + "br", g.br);
      fn(p + "wh", g.wh);
      fn(p + "uh", g.uh);
      fn(p + "bh", g.bh);
    };
    visit_gru("know.fwd.", gru_fwd);
    visit_gru("know.bwd.", gru_bwd);
    fn("know.proj", know_proj);
    fn("know.bias", know_bias);
  }
  fn("copy.w", copy_w);
  fn("copy.b", copy_b);
}

void Parameters::visit(const std::function<void(const std::string&, const Matrix&)>& fn) const {
  const_cast<Parameters*>(this)->visit(
      [&](const std::string& name, Matrix& m) { fn(name, static_cast<const Matrix&>(m)); });
}

Parameters Parameters::init(const ModelConfig& config) {
  config.validate();
  Parameters p;
  p.config = config;
  const int d = config.d_model;
  const int f = config.d_ffn;
  const int hk = config.knowledge_hidden;
  p.tok_embed.resize(config.vocab_size, d);
  p.pos_embed.resize(config.max_len, d);
  p.seg_embed.resize(2, d);
  p.layers.resize(static_cast<std::size_t>(config.depth));
  for (auto& l : p.layers) {
    l.ln1_gain.resize(1, d);
    l.ln1_bias.resize(1, d);
    l.wq.resize(d, d);
    l.wk.resize(d, d);
    l.wv.resize(d, d);
    l.wo.resize(d, d);
    l.ln2_gain.resize(1, d);
    l.ln2_bias.resize(1, d);
    l.ffn_w1.resize(d, f);
    l.ffn_b1.resize(1, f);
    l.ffn_w2.resize(f, d);
    l.ffn_b2.resize(1, d);
  }
  for (int layer : config.injection_layers) {
    InjectionParams inj;
    inj.w.resize(d, d);
    inj.ln_gain.resize(1, d);
    inj.ln_bias.resize(1, d);
    p.injections.emplace(layer, std::move(inj));
  }
  if (config.has_injection()) {
    for (GruParams* g : {&p.gru_fwd, &p.gru_bwd}) {
      g->wz.resize(d, hk);
      g->uz.resize(hk, hk);
      g->bz.resize(1, hk);
      g->wr.resize(d, hk);
      g->ur.resize(hk, hk);
      g->br.resize(1, hk);
      g->wh.resize(d, hk);
      g->uh.resize(hk, hk);
      g->bh.resize(1, hk);
    }
    p.know_proj.resize(2 * hk, d);
    p.know_bias.resize(1, d);
  }
  p.copy_w.resize(d, 1);
  p.copy_b.resize(1, 1);

  Rng rng(config.rng_seed);
  p.visit([&](const std::string& name, Matrix& m) {
    const bool is_ln = name.find("ln1.") != std::string::npos ||
                       name.find("ln2.") != std::string::npos ||
                       name.find(".ln.") != std::string::npos;
    if (is_ln) {
      const double value = name.ends_with(".gain") ? 1.0 : 0.0;
      m.setConstant(value);
      return;
    }
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.next_double(-0.05, 0.05);
  });
  return p;
}

Parameters Parameters::zeros_like(const Parameters& other) {
  Parameters p = other;
  p.visit([](const std::string&, Matrix& m) { m.setZero(); });
  return p;
}

Matrix embed_input(const std::vector<int>& ids, const std::vector<int>& segments,
                   const Parameters& params) {
  if (ids.size() != segments.size()) throw std::invalid_argument("ids/segments length mismatch");
  const int n = static_cast<int>(ids.size());
  if (n > params.config.max_len) throw std::invalid_argument("sequence exceeds max_len");
  check_ids(ids, params.config.vocab_size);
  Matrix x(n, params.config.d_model);
  for (int i = 0; i < n; ++i) {
    if (segments[i] != 0 && segments[i] != 1) throw std::invalid_argument("segment must be 0/1");
    x.row(i) = params.tok_embed.row(ids[i]) + params.pos_embed.row(i) +
               params.seg_embed.row(segments[i]);
  }
  return x;
}

KnowledgeEncoding encode_knowledge_ids(const std::vector<int>& ids, const Parameters& params) {
  KnowledgeEncoding ke;
  ke.ids = ids;
  ke.n_k = static_cast<int>(ids.size());
  if (ke.n_k == 0) return ke;
  if (!params.config.has_injection())
    throw std::invalid_argument("model has no knowledge encoder");
  check_ids(ids, params.config.vocab_size);
  ke.mask.assign(ids.size(), 1);
  ke.embed.resize(ke.n_k, params.config.d_model);
  for (int t = 0; t < ke.n_k; ++t) ke.embed.row(t) = params.tok_embed.row(ids[t]);
  gru_direction(ke.embed, params.gru_fwd, false, ke.h_fwd, ke.z_f, ke.r_f, ke.hc_f);
  gru_direction(ke.embed, params.gru_bwd, true, ke.h_bwd, ke.z_b, ke.r_b, ke.hc_b);
  ke.concat.resize(ke.n_k, 2 * params.config.knowledge_hidden);
  ke.concat << ke.h_fwd, ke.h_bwd;
  ke.matrix = ke.concat * params.know_proj;
  ke.matrix.rowwise() += params.know_bias.row(0);
  return ke;
}

KnowledgeEncoding encode_knowledge(const std::vector<PseudoSentence>& sentences,
                                   const Vocabulary& vocab, const Parameters& params,
                                   int max_tokens) {
  std::vector<int> ids;
  for (const auto& s : sentences) {
    if (!ids.empty()) ids.push_back(kSepId);
    for (int id : vocab.encode(tokenize(s.text))) ids.push_back(id);
  }
  if (max_tokens > 0 && static_cast<int>(ids.size()) > max_tokens) ids.resize(max_tokens);
  return encode_knowledge_ids(ids, params);
}

Matrix seq2seq_mask(int src_len, int tgt_len) {
  const int n = src_len + tgt_len;
  Matrix mask = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const bool allowed = j < src_len || (i >= src_len && j <= i);
      mask(i, j) = allowed ? 1.0 : 0.0;
    }
  return mask;
}

Matrix inject_knowledge(const Matrix& h, const KnowledgeEncoding& ke, const Parameters& params,
                        int layer, InjectionTrace* trace) {
  if (ke.n_k == 0) {
    if (trace) trace->applied = false;
    return h;
  }
  auto it = params.injections.find(layer);
  if (it == params.injections.end())
    throw std::invalid_argument("layer " + std::to_string(layer) + " is not an injection layer");
  const InjectionParams& inj = it->second;
  const double scale = 1.0 / std::sqrt(static_cast<double>(params.config.d_model));
  Matrix scores = h * ke.matrix.transpose() * scale;
  for (int j = 0; j < ke.n_k; ++j)
    if (!ke.mask[static_cast<std::size_t>(j)]) scores.col(j).setConstant(kNegInf);
  const Matrix attn = softmax_rows(scores);
  const Matrix hctxt = attn * ke.matrix;
  Matrix z = hctxt * inj.w + h;
  Matrix xhat, out;
  Vector inv_std;
  layer_norm(z, inj.ln_gain, inj.ln_bias, xhat, inv_std, out);
  if (trace) {
    trace->applied = true;
    trace->attn = attn;
    trace->hctxt = hctxt;
    trace->z = std::move(z);
    trace->xhat = std::move(xhat);
    trace->inv_std = std::move(inv_std);
  }
  return out;
}

namespace {

// One full pass over src+tgt ids; fills everything gradients() needs.
void run_encoder(const std::vector<int>& ids, const std::vector<int>& segments, int src_len,
                 const std::map<int, KnowledgeEncoding>& knowledge, const Parameters& params,
                 ForwardTrace& trace) {
  const ModelConfig& cfg = params.config;
  const int n = static_cast<int>(ids.size());
  const int tgt_len = n - src_len;
  const int dh = cfg.d_model / cfg.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  trace.ids = ids;
  trace.segments = segments;
  trace.src_len = src_len;
  trace.tgt_len = tgt_len;
  trace.knowledge = knowledge;
  trace.x0 = embed_input(ids, segments, params);

  const Matrix allowed = seq2seq_mask(src_len, tgt_len);
  Matrix mask_add = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (allowed(i, j) == 0.0) mask_add(i, j) = kNegInf;

  Matrix x = trace.x0;
  trace.layers.clear();
  trace.layers.resize(static_cast<std::size_t>(cfg.depth));
  for (int layer = 1; layer <= cfg.depth; ++layer) {
    LayerTrace& lt = trace.layers[static_cast<std::size_t>(layer - 1)];
    const LayerParams& lp = params.layers[static_cast<std::size_t>(layer - 1)];
    lt.x_in = x;
    layer_norm(lt.x_in, lp.ln1_gain, lp.ln1_bias, lt.xhat1, lt.inv_std1, lt.xn1);
    lt.q = lt.xn1 * lp.wq;
    lt.k = lt.xn1 * lp.wk;
    lt.v = lt.xn1 * lp.wv;
    lt.attn.resize(static_cast<std::size_t>(cfg.heads));
    lt.heads_concat.resize(n, cfg.d_model);
    for (int head = 0; head < cfg.heads; ++head) {
      const auto qh = lt.q.middleCols(head * dh, dh);
      const auto kh = lt.k.middleCols(head * dh, dh);
      const auto vh = lt.v.middleCols(head * dh, dh);
      Matrix scores = qh * kh.transpose() * scale + mask_add;
      lt.attn[static_cast<std::size_t>(head)] = softmax_rows(scores);
      lt.heads_concat.middleCols(head * dh, dh) =
          lt.attn[static_cast<std::size_t>(head)] * vh;
    }
    lt.x_mid = lt.x_in + lt.heads_concat * lp.wo;
    layer_norm(lt.x_mid, lp.ln2_gain, lp.ln2_bias, lt.xhat2, lt.inv_std2, lt.xn2);
    lt.ffn_pre = lt.xn2 * lp.ffn_w1;
    lt.ffn_pre.rowwise() += lp.ffn_b1.row(0);
    lt.ffn_act = lt.ffn_pre.unaryExpr([](double v) { return gelu(v); });
    Matrix ffn_out = lt.ffn_act * lp.ffn_w2;
    ffn_out.rowwise() += lp.ffn_b2.row(0);
    lt.x_out = lt.x_mid + ffn_out;
    x = lt.x_out;
    if (cfg.injects_at(layer)) {
      auto kit = knowledge.find(layer);
      const KnowledgeEncoding empty;
      const KnowledgeEncoding& ke = kit == knowledge.end() ? empty : kit->second;
      InjectionTrace itrace;
      x = inject_knowledge(x, ke, params, layer, &itrace);
      trace.injection_traces[layer] = std::move(itrace);
    }
  }
  trace.hidden = x;
}

}  // namespace

ForwardTrace forward(const EncodedPair& pair, const std::map<int, KnowledgeEncoding>& knowledge,
                     const Parameters& params) {
  if (pair.tgt_ids.empty()) throw std::invalid_argument("pair has no target tokens");
  std::vector<int> ids = pair.src_ids;
  ids.insert(ids.end(), pair.tgt_ids.begin(), pair.tgt_ids.end());
  if (pair.segments.size() != ids.size())
    throw std::invalid_argument("segments length mismatch");
  if (pair.copy_labels.size() != pair.tgt_ids.size())
    throw std::invalid_argument("copy_labels length mismatch");

  ForwardTrace trace;
  run_encoder(ids, pair.segments, static_cast<int>(pair.src_ids.size()), knowledge, params, trace);
  trace.tgt_ids = pair.tgt_ids;
  trace.copy_labels = pair.copy_labels;

  const int s = trace.src_len;
  const int m = trace.tgt_len;
  trace.pred_states = trace.hidden.middleRows(s - 1, m);
  trace.lm_logits = trace.pred_states * params.tok_embed.transpose();
  trace.copy_logits = (trace.pred_states * params.copy_w).col(0);
  trace.copy_logits.array() += params.copy_b(0, 0);
  return trace;
}

double loss(const Matrix& lm_logits, const Vector& copy_logits, const std::vector<int>& tgt_ids,
            const std::vector<int>& copy_labels, double copy_loss_weight) {
  const int m = static_cast<int>(tgt_ids.size());
  if (lm_logits.rows() != m || copy_logits.size() != m ||
      static_cast<int>(copy_labels.size()) != m)
    throw std::invalid_argument("loss shape mismatch");
  double ce = 0.0, bce = 0.0;
  int valid = 0;
  for (int i = 0; i < m; ++i) {
    if (tgt_ids[static_cast<std::size_t>(i)] == kPadId) continue;
    ++valid;
    const double mx = lm_logits.row(i).maxCoeff();
    const double lse = mx + std::log((lm_logits.row(i).array() - mx).exp().sum());
    ce += lse - lm_logits(i, tgt_ids[static_cast<std::size_t>(i)]);
    const double c = copy_logits(i);
    const double y = copy_labels[static_cast<std::size_t>(i)];
    bce += std::max(c, 0.0) - c * y + std::log1p(std::exp(-std::abs(c)));
  }
  if (valid == 0) return 0.0;
  return ce / valid + copy_loss_weight * bce / valid;
}

double loss(const ForwardTrace& trace, double copy_loss_weight) {
  return loss(trace.lm_logits, trace.copy_logits, trace.tgt_ids, trace.copy_labels,
              copy_loss_weight);
}

Parameters gradients(const ForwardTrace& trace, const Parameters& params) {
  const ModelConfig& cfg = params.config;
  Parameters grad = Parameters::zeros_like(params);
  const int n = static_cast<int>(trace.ids.size());
  const int s = trace.src_len;
  const int m = trace.tgt_len;
  const int dh = cfg.d_model / cfg.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  int valid = 0;
  for (int id : trace.tgt_ids)
    if (id != kPadId) ++valid;
  if (valid == 0) return grad;

  // loss head
  Matrix dlm = Matrix::Zero(m, cfg.vocab_size);
  Vector dcopy = Vector::Zero(m);
  for (int i = 0; i < m; ++i) {
    const int tgt = trace.tgt_ids[static_cast<std::size_t>(i)];
    if (tgt == kPadId) continue;
    const double mx = trace.lm_logits.row(i).maxCoeff();
    Eigen::RowVectorXd p = (trace.lm_logits.row(i).array() - mx).exp();
    p /= p.sum();
    dlm.row(i) = p / valid;
    dlm(i, tgt) -= 1.0 / valid;
    const double y = trace.copy_labels[static_cast<std::size_t>(i)];
    dcopy(i) = cfg.copy_loss_weight * (sigmoid(trace.copy_logits(i)) - y) / valid;
  }

  Matrix dpred = dlm * params.tok_embed;
  dpred += dcopy * params.copy_w.transpose();
  grad.tok_embed += dlm.transpose() * trace.pred_states;
  grad.copy_w += trace.pred_states.transpose() * dcopy;
  grad.copy_b(0, 0) += dcopy.sum();

  Matrix dx = Matrix::Zero(n, cfg.d_model);
  dx.middleRows(s - 1, m) += dpred;

  std::map<int, Matrix> dknowledge;  // layer -> dKE matrix

  for (int layer = cfg.depth; layer >= 1; --layer) {
    const LayerTrace& lt = trace.layers[static_cast<std::size_t>(layer - 1)];
    const LayerParams& lp = params.layers[static_cast<std::size_t>(layer - 1)];
    LayerParams& lg = grad.layers[static_cast<std::size_t>(layer - 1)];

    if (cfg.injects_at(layer)) {
      const InjectionTrace& it = trace.injection_traces.at(layer);
      if (it.applied) {
        const KnowledgeEncoding& ke = trace.knowledge.at(layer);
        const InjectionParams& inj = params.injections.at(layer);
        InjectionParams& injg = grad.injections.at(layer);
        Matrix dz;
        layer_norm_backward(dx, it.xhat, it.inv_std, inj.ln_gain, dz, injg.ln_gain, injg.ln_bias);
        Matrix dhctxt = dz * inj.w.transpose();
        injg.w += it.hctxt.transpose() * dz;
        Matrix dxin = dz;  // residual
        Matrix dp = dhctxt * ke.matrix.transpose();
        Matrix dke = it.attn.transpose() * dhctxt;
        Matrix ds = softmax_rows_backward(it.attn, dp);
        const double kscale = 1.0 / std::sqrt(static_cast<double>(cfg.d_model));
        dxin += ds * ke.matrix * kscale;
        dke += ds.transpose() * lt.x_out * kscale;
        dknowledge[layer] = std::move(dke);
        dx = std::move(dxin);
      }
    }

    // ffn block: x_out = x_mid + gelu(xn2*w1+b1)*w2 + b2
    Matrix dact = dx * lp.ffn_w2.transpose();
    lg.ffn_w2 += lt.ffn_act.transpose() * dx;
    lg.ffn_b2.row(0) += dx.colwise().sum();
    Matrix dpre = dact.cwiseProduct(lt.ffn_pre.unaryExpr([](double v) { return gelu_grad(v); }));
    Matrix dxn2 = dpre * lp.ffn_w1.transpose();
    lg.ffn_w1 += lt.xn2.transpose() * dpre;
    lg.ffn_b1.row(0) += dpre.colwise().sum();
    Matrix dx_mid;
    layer_norm_backward(dxn2, lt.xhat2, lt.inv_std2, lp.ln2_gain, dx_mid, lg.ln2_gain,
                        lg.ln2_bias);
    dx_mid += dx;  // residual

    // attention block: x_mid = x_in + concat*wo
    Matrix dconcat = dx_mid * lp.wo.transpose();
    lg.wo += lt.heads_concat.transpose() * dx_mid;
    Matrix dq = Matrix::Zero(n, cfg.d_model);
    Matrix dk = Matrix::Zero(n, cfg.d_model);
    Matrix dv = Matrix::Zero(n, cfg.d_model);
    for (int head = 0; head < cfg.heads; ++head) {
      const auto qh = lt.q.middleCols(head * dh, dh);
      const auto kh = lt.k.middleCols(head * dh, dh);
      const auto vh = lt.v.middleCols(head * dh, dh);
      const Matrix& p = lt.attn[static_cast<std::size_t>(head)];
      const auto dch = dconcat.middleCols(head * dh, dh);
      Matrix dp = dch * vh.transpose();
      dv.middleCols(head * dh, dh) += p.transpose() * dch;
      Matrix ds = softmax_rows_backward(p, dp);
      dq.middleCols(head * dh, dh) += ds * kh * scale;
      dk.middleCols(head * dh, dh) += ds.transpose() * qh * scale;
    }
    Matrix dxn1 = dq * lp.wq.transpose() + dk * lp.wk.transpose() + dv * lp.wv.transpose();
    lg.wq += lt.xn1.transpose() * dq;
    lg.wk += lt.xn1.transpose() * dk;
    lg.wv += lt.xn1.transpose() * dv;
    Matrix dx_in;
    layer_norm_backward(dxn1, lt.xhat1, lt.inv_std1, lp.ln1_gain, dx_in, lg.ln1_gain, lg.ln1_bias);
    dx_in += dx_mid;  // residual
    dx = std::move(dx_in);
  }

  // embeddings
  for (int i = 0; i < n; ++i) {
    grad.tok_embed.row(trace.ids[static_cast<std::size_t>(i)]) += dx.row(i);
    grad.pos_embed.row(i) += dx.row(i);
    grad.seg_embed.row(trace.segments[static_cast<std::size_t>(i)]) += dx.row(i);
  }

  // knowledge encoder, per injected layer with gradient flow
  for (auto& [layer, dke] : dknowledge) {
    const KnowledgeEncoding& ke = trace.knowledge.at(layer);
    grad.know_proj += ke.concat.transpose() * dke;
    grad.know_bias.row(0) += dke.colwise().sum();
    Matrix dconcat = dke * params.know_proj.transpose();
    const int hk = cfg.knowledge_hidden;
    Matrix dembed = Matrix::Zero(ke.n_k, cfg.d_model);
    gru_direction_backward(ke.embed, params.gru_fwd, false, ke.h_fwd, ke.z_f, ke.r_f, ke.hc_f,
                           dconcat.leftCols(hk), dembed, grad.gru_fwd);
    gru_direction_backward(ke.embed, params.gru_bwd, true, ke.h_bwd, ke.z_b, ke.r_b, ke.hc_b,
                           dconcat.rightCols(hk), dembed, grad.gru_bwd);
    for (int t = 0; t < ke.n_k; ++t)
      grad.tok_embed.row(ke.ids[static_cast<std::size_t>(t)]) += dembed.row(t);
  }
  return grad;
}

NextTokenOutput next_token(const std::vector<int>& src_ids, const std::vector<int>& prefix_ids,
                           const std::map<int, KnowledgeEncoding>& knowledge,
                           const Parameters& params) {
  std::vector<int> ids = src_ids;
  ids.insert(ids.end(), prefix_ids.begin(), prefix_ids.end());
  std::vector<int> segments(src_ids.size(), 0);
  segments.insert(segments.end(), prefix_ids.size(), 1);
  ForwardTrace trace;
  run_encoder(ids, segments, static_cast<int>(src_ids.size()), knowledge, params, trace);
  const Eigen::RowVectorXd state = trace.hidden.row(trace.hidden.rows() - 1);
  Eigen::RowVectorXd logits = state * params.tok_embed.transpose();
  const double mx = logits.maxCoeff();
  const double lse = mx + std::log((logits.array() - mx).exp().sum());
  NextTokenOutput out;
  out.log_probs = (logits.array() - lse).matrix().transpose();
  out.p_copy = sigmoid(state.dot(params.copy_w.col(0)) + params.copy_b(0, 0));
  return out;
}

std::vector<TrainExample> build_train_examples(const std::vector<RequirementRecord>& records,
                                               const Vocabulary& vocab, const ModelConfig& config,
                                               const KnowledgeProvider& provider) {
  std::vector<TrainExample> out;
  out.reserve(records.size());
  for (const auto& rec : records) {
    TrainExample ex;
    ex.pair = encode_pair(rec, vocab, config.max_len);
    if (config.has_injection() && provider) {
      auto sentences = provider(rec.keywords);
      for (const auto& [layer, sents] : sentences) {
        if (!config.injects_at(layer)) continue;
        std::vector<int> ids;
        for (const auto& s : sents) {
          if (!ids.empty()) ids.push_back(kSepId);
          for (int id : vocab.encode(tokenize(s.text))) ids.push_back(id);
        }
        ex.knowledge_ids[layer] = std::move(ids);
      }
    }
    out.push_back(std::move(ex));
  }
  return out;
}

namespace {

std::map<int, KnowledgeEncoding> encode_example_knowledge(const TrainExample& ex,
                                                          const Parameters& params) {
  std::map<int, KnowledgeEncoding> out;
  for (const auto& [layer, ids] : ex.knowledge_ids)
    out[layer] = encode_knowledge_ids(ids, params);
  return out;
}

}  // namespace

TrainResult train(const std::vector<TrainExample>& examples, const ModelConfig& config) {
  if (examples.empty()) throw std::invalid_argument("empty training set");
  config.validate();
  Parameters params = Parameters::init(config);
  Parameters m1 = Parameters::zeros_like(params);
  Parameters m2 = Parameters::zeros_like(params);

  // flat views in canonical order for the Adam update
  std::vector<Matrix*> theta, mom1, mom2;
  params.visit([&](const std::string&, Matrix& m) { theta.push_back(&m); });
  m1.visit([&](const std::string&, Matrix& m) { mom1.push_back(&m); });
  m2.visit([&](const std::string&, Matrix& m) { mom2.push_back(&m); });

  TrainResult result;
  std::int64_t step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng order_rng(mix_seed(config.rng_seed, 0x5eed0000ULL + static_cast<std::uint64_t>(epoch)));
    std::vector<std::size_t> order(examples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    order_rng.shuffle(order);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      Parameters grad = Parameters::zeros_like(params);
      std::vector<Matrix*> gview;
      grad.visit([&](const std::string&, Matrix& m) { gview.push_back(&m); });

      const double inv_batch = 1.0 / static_cast<double>(end - start);
      for (std::size_t i = start; i < end; ++i) {
        const TrainExample& ex = examples[order[i]];
        auto knowledge = encode_example_knowledge(ex, params);
        ForwardTrace trace = forward(ex.pair, knowledge, params);
        const double example_loss = loss(trace, config.copy_loss_weight);
        if (!std::isfinite(example_loss))
          throw std::runtime_error("training diverged: non-finite loss at epoch " +
                                   std::to_string(epoch + 1));
        epoch_loss += example_loss;
        Parameters g = gradients(trace, params);
        std::size_t idx = 0;
        g.visit([&](const std::string&, Matrix& m) { *gview[idx++] += m * inv_batch; });
      }

      ++step;
      const double bc1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(step));
      for (std::size_t i = 0; i < theta.size(); ++i) {
        Matrix& g = *gview[i];
        Matrix& m = *mom1[i];
        Matrix& v = *mom2[i];
        m = config.adam_beta1 * m + (1.0 - config.adam_beta1) * g;
        v = config.adam_beta2 * v + (1.0 - config.adam_beta2) * g.cwiseProduct(g);
        theta[i]->array() -=
            config.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + config.adam_eps);
      }
    }
    result.epoch_losses.push_back(epoch_loss / static_cast<double>(examples.size()));
  }
  result.params = std::move(params);
  return result;
}

TrainResult train(const std::vector<RequirementRecord>& records, const Vocabulary& vocab,
                  const ModelConfig& config, const KnowledgeProvider& provider) {
  return train(build_train_examples(records, vocab, config, provider), config);
}

double teacher_forced_accuracy(const std::vector<TrainExample>& examples,
                               const Parameters& params) {
  std::int64_t hits = 0, total = 0;
  for (const auto& ex : examples) {
    auto knowledge = encode_example_knowledge(ex, params);
    ForwardTrace trace = forward(ex.pair, knowledge, params);
    for (int i = 0; i < trace.tgt_len; ++i) {
      const int tgt = trace.tgt_ids[static_cast<std::size_t>(i)];
      if (tgt == kPadId) continue;
      Eigen::Index argmax;
      trace.lm_logits.row(i).maxCoeff(&argmax);
      hits += (static_cast<int>(argmax) == tgt);
      ++total;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace reqgen

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "reqgen/corpus.hpp"
#include "reqgen/ontology.hpp"

namespace reqgen {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct ModelConfig {
  int depth = 4;
  int d_model = 128;
  int heads = 4;
  int d_ffn = 256;
  int max_len = 128;
  int vocab_size = 0;
  std::vector<int> injection_layers = {1, 2, 4};
  int knowledge_hidden = 64;  // per direction
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch_size = 8;
  int epochs = 30;
  std::uint64_t rng_seed = 1;
  double copy_loss_weight = 1.0;

  void validate() const;
  bool injects_at(int layer) const;
  bool has_injection() const { return !injection_layers.empty(); }
};

struct LayerParams {
  Matrix ln1_gain, ln1_bias;
  Matrix wq, wk, wv, wo;
  Matrix ln2_gain, ln2_bias;
  Matrix ffn_w1, ffn_b1, ffn_w2, ffn_b2;
};

struct InjectionParams {
  Matrix w;  // applied as H_ctxt * w
  Matrix ln_gain, ln_bias;
};

struct GruParams {
  Matrix wz, uz, bz, wr, ur, br, wh, uh, bh;
};

// Every learnable tensor of the model. Vectors are stored as 1xN matrices so
// the named registry can drive init, Adam, serialization, and gradient
// checking uniformly.
struct Parameters {
  ModelConfig config;
  Matrix tok_embed;  // [vocab, d]; also the tied output projection
  Matrix pos_embed;  // [max_len, d]
  Matrix seg_embed;  // [2, d]
  std::vector<LayerParams> layers;
  std::map<int, InjectionParams> injections;  // keyed by 1-based layer
  GruParams gru_fwd, gru_bwd;
  Matrix know_proj, know_bias;  // [2*knowledge_hidden, d], [1, d]
  Matrix copy_w, copy_b;        // [d, 1], [1, 1]

  // Canonical iteration order shared by init, Adam, and checkpoints.
  void visit(const std::function<void(const std::string&, Matrix&)>& fn);
  void visit(const std::function<void(const std::string&, const Matrix&)>& fn) const;

  static Parameters init(const ModelConfig& config);        // seeded uniform(-0.05, 0.05)
  static Parameters zeros_like(const Parameters& other);    // gradient/moment buffers
};

// Sum of the token, absolute-position, and segment lookups, one row per
// sequence position.
Matrix embed_input(const std::vector<int>& ids, const std::vector<int>& segments,
                   const Parameters& params);

struct KnowledgeEncoding {
  int n_k = 0;
  Matrix matrix;          // [n_k, d_model]
  std::vector<int> mask;  // 1 = attendable

  // cached intermediates for backprop
  std::vector<int> ids;
  Matrix embed;                    // [n_k, d]
  Matrix h_fwd, h_bwd;             // [n_k, H]
  Matrix z_f, r_f, hc_f;           // forward gates
  Matrix z_b, r_b, hc_b;           // backward gates
  Matrix concat;                   // [n_k, 2H]
};

// Pseudo-sentence token ids joined with [SEP], embedded with the shared token
// table, run through the two gated recurrent directions, concatenated, and
// projected to d_model. max_tokens 0 means no extra truncation.
KnowledgeEncoding encode_knowledge(const std::vector<PseudoSentence>& sentences,
                                   const Vocabulary& vocab, const Parameters& params,
                                   int max_tokens = 0);
KnowledgeEncoding encode_knowledge_ids(const std::vector<int>& ids, const Parameters& params);

// 1 = attention allowed. Source rows see the whole source; target row i sees
// the source plus target columns <= i.
Matrix seq2seq_mask(int src_len, int tgt_len);

struct LayerTrace {
  Matrix x_in;
  Matrix xhat1, xn1;
  Vector inv_std1;
  Matrix q, k, v;
  std::vector<Matrix> attn;  // per head, [n, n]
  Matrix heads_concat;
  Matrix x_mid;
  Matrix xhat2, xn2;
  Vector inv_std2;
  Matrix ffn_pre, ffn_act;
  Matrix x_out;
};

struct InjectionTrace {
  bool applied = false;
  Matrix attn;   // [n, n_k]
  Matrix hctxt;  // [n, d]
  Matrix z;      // pre-normalization sum
  Matrix xhat;
  Vector inv_std;
};

struct ForwardTrace {
  int src_len = 0, tgt_len = 0;
  std::vector<int> ids, segments, tgt_ids, copy_labels;
  Matrix x0;
  std::vector<LayerTrace> layers;
  std::map<int, InjectionTrace> injection_traces;
  std::map<int, KnowledgeEncoding> knowledge;
  Matrix hidden;       // final encoder states [n, d]
  Matrix pred_states;  // states that predict each target token [m, d]
  Matrix lm_logits;    // [m, vocab]
  Vector copy_logits;  // [m]
};

// Attention re-weighting of H against an encoded knowledge block (Eq-style
// scaled dot product with the joint mask), residual added and normalized.
// Empty knowledge returns H unchanged.
Matrix inject_knowledge(const Matrix& h, const KnowledgeEncoding& ke, const Parameters& params,
                        int layer, InjectionTrace* trace = nullptr);

// Full seq2seq pass. Target token t is predicted from the state at the
// position immediately before it (the last source position for t = 0), which
// keeps the autoregressive factorization honest.
ForwardTrace forward(const EncodedPair& pair, const std::map<int, KnowledgeEncoding>& knowledge,
                     const Parameters& params);

// Mean target-token cross entropy plus copy_loss_weight times mean binary
// cross entropy of the copy head; [PAD] target positions are skipped.
double loss(const Matrix& lm_logits, const Vector& copy_logits, const std::vector<int>& tgt_ids,
            const std::vector<int>& copy_labels, double copy_loss_weight);
double loss(const ForwardTrace& trace, double copy_loss_weight);

// Exact reverse-mode gradients for every tensor in Parameters, including the
// injection sublayers and the knowledge encoder.
Parameters gradients(const ForwardTrace& trace, const Parameters& params);

// Next-token interface used by the decoder: states for src + generated prefix,
// returning the last position's vocabulary log-probabilities and copy gate.
struct NextTokenOutput {
  Vector log_probs;  // [vocab]
  double p_copy = 0.0;
};
NextTokenOutput next_token(const std::vector<int>& src_ids, const std::vector<int>& prefix_ids,
                           const std::map<int, KnowledgeEncoding>& knowledge,
                           const Parameters& params);

struct TrainExample {
  EncodedPair pair;
  std::map<int, std::vector<int>> knowledge_ids;  // per injected layer
};

using KnowledgeProvider =
    std::function<std::map<int, std::vector<PseudoSentence>>(const std::vector<Phrase>&)>;

struct TrainResult {
  Parameters params;
  std::vector<double> epoch_losses;
};

std::vector<TrainExample> build_train_examples(const std::vector<RequirementRecord>& records,
                                               const Vocabulary& vocab, const ModelConfig& config,
                                               const KnowledgeProvider& provider);

// Adam over seeded shuffled mini-batches; throws on non-finite loss.
TrainResult train(const std::vector<TrainExample>& examples, const ModelConfig& config);
TrainResult train(const std::vector<RequirementRecord>& records, const Vocabulary& vocab,
                  const ModelConfig& config, const KnowledgeProvider& provider);

// Fraction of non-[PAD] target positions whose argmax logit hits the target.
double teacher_forced_accuracy(const std::vector<TrainExample>& examples,
                               const Parameters& params);

}  // namespace reqgen

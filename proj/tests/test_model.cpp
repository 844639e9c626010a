#include <doctest.h>

#include <cmath>

#include "reqgen/model.hpp"
#include "support/toydata.hpp"

using namespace reqgen;

namespace {

ModelConfig tiny_config(int vocab_size) {
  ModelConfig cfg;
  cfg.depth = 2;
  cfg.d_model = 8;
  cfg.heads = 2;
  cfg.d_ffn = 12;
  cfg.max_len = 24;
  cfg.vocab_size = vocab_size;
  cfg.injection_layers = {2};
  cfg.knowledge_hidden = 3;
  cfg.rng_seed = 11;
  return cfg;
}

EncodedPair tiny_pair() {
  EncodedPair pair;
  pair.src_ids = {kClsId, 5, kSepId, 6, kSepId};
  pair.tgt_ids = {7, 8, 9, kSepId};
  pair.copy_labels = {1, 0, 1, 0};
  pair.segments.assign(pair.src_ids.size(), 0);
  pair.segments.insert(pair.segments.end(), pair.tgt_ids.size(), 1);
  return pair;
}

}  // namespace

TEST_CASE("embed_input sums the three lookups") {
  const ModelConfig cfg = tiny_config(16);
  Parameters params = Parameters::init(cfg);
  SUBCASE("zeroed tables give a zero matrix") {
    params.tok_embed.setZero();
    params.pos_embed.setZero();
    params.seg_embed.setZero();
    const Matrix x = embed_input({4, 5, 6}, {0, 0, 1}, params);
    CHECK(x.rows() == 3);
    CHECK(x.cols() == cfg.d_model);
    CHECK(x.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("shape covers src+tgt") {
    const EncodedPair pair = tiny_pair();
    std::vector<int> ids = pair.src_ids;
    ids.insert(ids.end(), pair.tgt_ids.begin(), pair.tgt_ids.end());
    const Matrix x = embed_input(ids, pair.segments, params);
    CHECK(x.rows() == static_cast<Eigen::Index>(ids.size()));
    CHECK(x.cols() == cfg.d_model);
  }
  SUBCASE("changing the segment of one position changes only that row") {
    const Matrix a = embed_input({4, 5, 6}, {0, 0, 1}, params);
    const Matrix b = embed_input({4, 5, 6}, {0, 1, 1}, params);
    CHECK((a.row(0) - b.row(0)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.row(2) - b.row(2)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.row(1) - b.row(1)).cwiseAbs().maxCoeff() > 0.0);
  }
  SUBCASE("out-of-range id throws") { CHECK_THROWS(embed_input({99}, {0}, params)); }
}

TEST_CASE("seq2seq_mask structure") {
  SUBCASE("src 2, tgt 2 allowed sets") {
    const Matrix m = seq2seq_mask(2, 2);
    const std::vector<std::vector<int>> expected = {
        {1, 1, 0, 0}, {1, 1, 0, 0}, {1, 1, 1, 0}, {1, 1, 1, 1}};
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) CHECK(m(i, j) == expected[i][j]);
  }
  SUBCASE("tgt 0 means full bidirectional source attention") {
    const Matrix m = seq2seq_mask(3, 0);
    CHECK(m.minCoeff() == 1.0);
  }
  SUBCASE("target-target block is lower triangular") {
    const Matrix m = seq2seq_mask(2, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) CHECK(m(2 + i, 2 + j) == (j <= i ? 1.0 : 0.0));
  }
}

TEST_CASE("encode_knowledge") {
  const ModelConfig cfg = tiny_config(16);
  Parameters params = Parameters::init(cfg);
  SUBCASE("empty input gives n_k = 0") {
    const KnowledgeEncoding ke = encode_knowledge_ids({}, params);
    CHECK(ke.n_k == 0);
  }
  SUBCASE("output shape [n_k, d_model]") {
    const KnowledgeEncoding ke = encode_knowledge_ids({4, 5, 6, 7}, params);
    CHECK(ke.n_k == 4);
    CHECK(ke.matrix.rows() == 4);
    CHECK(ke.matrix.cols() == cfg.d_model);
    CHECK(ke.mask == std::vector<int>{1, 1, 1, 1});
  }
  SUBCASE("with tied directions, reversing tokens swaps the projection halves") {
    params.gru_bwd = params.gru_fwd;
    const KnowledgeEncoding fwd = encode_knowledge_ids({4, 9}, params);
    const KnowledgeEncoding rev = encode_knowledge_ids({9, 4}, params);
    const int hk = cfg.knowledge_hidden;
    for (int i = 0; i < 2; ++i) {
      const Eigen::RowVectorXd left = rev.concat.row(i).head(hk);
      const Eigen::RowVectorXd right = rev.concat.row(i).tail(hk);
      CHECK((left - fwd.concat.row(1 - i).tail(hk)).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((right - fwd.concat.row(1 - i).head(hk)).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  SUBCASE("sentence texts are joined with [SEP] and capped") {
    std::vector<RequirementRecord> recs(1);
    recs[0].text = "alpha beta gamma";
    const Vocabulary vocab = build_vocabulary(recs, {}, 1);
    std::vector<PseudoSentence> sentences(2);
    sentences[0].text = "alpha beta";
    sentences[1].text = "gamma";
    ModelConfig cfg2 = tiny_config(vocab.size());
    const Parameters p2 = Parameters::init(cfg2);
    const KnowledgeEncoding ke = encode_knowledge(sentences, vocab, p2, 0);
    CHECK(ke.ids == std::vector<int>{vocab.id_of("alpha"), vocab.id_of("beta"), kSepId,
                                     vocab.id_of("gamma")});
    const KnowledgeEncoding capped = encode_knowledge(sentences, vocab, p2, 2);
    CHECK(capped.n_k == 2);
  }
}

TEST_CASE("inject_knowledge") {
  const ModelConfig cfg = tiny_config(16);
  Parameters params = Parameters::init(cfg);
  const Matrix h = Matrix::Random(5, cfg.d_model);
  SUBCASE("empty knowledge is the exact identity") {
    const KnowledgeEncoding empty;
    const Matrix out = inject_knowledge(h, empty, params, 2);
    CHECK((out - h).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("single knowledge token gives attention rows [1.0]") {
    const KnowledgeEncoding ke = encode_knowledge_ids({4}, params);
    InjectionTrace trace;
    inject_knowledge(h, ke, params, 2, &trace);
    REQUIRE(trace.applied);
    CHECK(trace.attn.rows() == 5);
    CHECK(trace.attn.cols() == 1);
    for (int i = 0; i < 5; ++i) CHECK(trace.attn(i, 0) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("attention rows sum to 1; masked columns carry exactly 0") {
    KnowledgeEncoding ke = encode_knowledge_ids({4, 5, 6}, params);
    ke.mask = {1, 0, 1};
    InjectionTrace trace;
    inject_knowledge(h, ke, params, 2, &trace);
    for (int i = 0; i < trace.attn.rows(); ++i) {
      CHECK(trace.attn.row(i).sum() == doctest::Approx(1.0).epsilon(1e-6));
      CHECK(trace.attn(i, 1) == 0.0);
    }
  }
  SUBCASE("injection at a non-injection layer throws") {
    const KnowledgeEncoding ke = encode_knowledge_ids({4}, params);
    CHECK_THROWS(inject_knowledge(h, ke, params, 1));
  }
}

TEST_CASE("forward") {
  const ModelConfig cfg = tiny_config(16);
  const Parameters params = Parameters::init(cfg);
  const EncodedPair pair = tiny_pair();
  SUBCASE("output shapes") {
    const ForwardTrace trace = forward(pair, {}, params);
    CHECK(trace.lm_logits.rows() == static_cast<Eigen::Index>(pair.tgt_ids.size()));
    CHECK(trace.lm_logits.cols() == cfg.vocab_size);
    CHECK(trace.copy_logits.size() == static_cast<Eigen::Index>(pair.tgt_ids.size()));
  }
  SUBCASE("self-attention rows sum to 1 within 1e-6") {
    const ForwardTrace trace = forward(pair, {}, params);
    for (const auto& lt : trace.layers)
      for (const auto& head : lt.attn)
        for (int i = 0; i < head.rows(); ++i)
          CHECK(head.row(i).sum() == doctest::Approx(1.0).epsilon(1e-6));
  }
  SUBCASE("empty knowledge equals a plain transformer forward bit-for-bit") {
    ModelConfig plain_cfg = cfg;
    plain_cfg.injection_layers.clear();
    Parameters plain = Parameters::init(plain_cfg);
    std::map<std::string, const Matrix*> named;
    params.visit([&](const std::string& name, const Matrix& m) { named[name] = &m; });
    plain.visit([&](const std::string& name, Matrix& m) {
      auto it = named.find(name);
      if (it != named.end()) m = *it->second;
    });
    const ForwardTrace with_injection = forward(pair, {}, params);
    const ForwardTrace without = forward(pair, {}, plain);
    CHECK((with_injection.lm_logits - without.lm_logits).cwiseAbs().maxCoeff() == 0.0);
    CHECK((Vector(with_injection.copy_logits - without.copy_logits)).cwiseAbs().maxCoeff() ==
          0.0);
  }
  SUBCASE("causality: target logits at position i ignore later target tokens") {
    EncodedPair perturbed = tiny_pair();
    perturbed.tgt_ids[2] = 10;  // was 9
    const ForwardTrace a = forward(pair, {}, params);
    const ForwardTrace b = forward(perturbed, {}, params);
    for (int i = 0; i <= 2; ++i)
      CHECK((a.lm_logits.row(i) - b.lm_logits.row(i)).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((a.lm_logits.row(3) - b.lm_logits.row(3)).cwiseAbs().maxCoeff() > 0.0);
  }
  SUBCASE("knowledge attends through the injected layer") {
    const KnowledgeEncoding ke = encode_knowledge_ids({4, 5}, params);
    const ForwardTrace trace = forward(pair, {{2, ke}}, params);
    REQUIRE(trace.injection_traces.count(2) == 1);
    CHECK(trace.injection_traces.at(2).applied);
    CHECK(trace.injection_traces.at(2).attn.cols() == 2);
  }
}

TEST_CASE("loss") {
  SUBCASE("probability-1 predictions give zero loss") {
    Matrix lm = Matrix::Zero(2, 4);
    lm(0, 2) = 200.0;
    lm(1, 3) = 200.0;
    Vector copy(2);
    copy << 200.0, -200.0;
    const double l = loss(lm, copy, {2, 3}, {1, 0}, 1.0);
    CHECK(l == doctest::Approx(0.0).epsilon(1e-30));
  }
  SUBCASE("uniform distribution over vocab 4 gives ln 4") {
    const Matrix lm = Matrix::Zero(3, 4);
    const Vector copy = Vector::Zero(3);
    const double l = loss(lm, copy, {1, 2, 3}, {0, 0, 0}, 0.0);
    CHECK(l == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    CHECK(l == doctest::Approx(1.386294).epsilon(1e-6));
  }
  SUBCASE("copy weight 0 removes any dependence on copy logits") {
    const Matrix lm = Matrix::Random(2, 4);
    Vector a(2), b(2);
    a << 5.0, -3.0;
    b << -7.0, 2.0;
    CHECK(loss(lm, a, {1, 2}, {1, 0}, 0.0) == loss(lm, b, {1, 2}, {1, 0}, 0.0));
  }
  SUBCASE("[PAD] targets are excluded") {
    Matrix lm = Matrix::Zero(2, 4);
    lm(0, 2) = 200.0;
    const Vector copy = Vector::Zero(2);
    const double l = loss(lm, copy, {2, kPadId}, {0, 0}, 0.0);
    CHECK(l == doctest::Approx(0.0).epsilon(1e-30));
  }
}

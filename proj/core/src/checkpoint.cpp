#include "reqgen/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace reqgen {

namespace {

using nlohmann::json;

json config_to_json(const ModelConfig& c) {
  return json{{"depth", c.depth},
              {"d_model", c.d_model},
              {"heads", c.heads},
              {"d_ffn", c.d_ffn},
              {"max_len", c.max_len},
              {"vocab_size", c.vocab_size},
              {"injection_layers", c.injection_layers},
              {"knowledge_hidden", c.knowledge_hidden},
              {"learning_rate", c.learning_rate},
              {"adam_beta1", c.adam_beta1},
              {"adam_beta2", c.adam_beta2},
              {"adam_eps", c.adam_eps},
              {"batch_size", c.batch_size},
              {"epochs", c.epochs},
              {"rng_seed", c.rng_seed},
              {"copy_loss_weight", c.copy_loss_weight}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.depth = j.at("depth").get<int>();
  c.d_model = j.at("d_model").get<int>();
  c.heads = j.at("heads").get<int>();
  c.d_ffn = j.at("d_ffn").get<int>();
  c.max_len = j.at("max_len").get<int>();
  c.vocab_size = j.at("vocab_size").get<int>();
  c.injection_layers = j.at("injection_layers").get<std::vector<int>>();
  c.knowledge_hidden = j.at("knowledge_hidden").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.adam_beta1 = j.at("adam_beta1").get<double>();
  c.adam_beta2 = j.at("adam_beta2").get<double>();
  c.adam_eps = j.at("adam_eps").get<double>();
  c.batch_size = j.at("batch_size").get<int>();
  c.epochs = j.at("epochs").get<int>();
  c.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  c.copy_loss_weight = j.at("copy_loss_weight").get<double>();
  return c;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

void matrix_from_json(const json& j, Matrix& m) {
  if (!j.is_array()) throw std::runtime_error("parameter tensor must be an array of rows");
  if (j.empty() || static_cast<Eigen::Index>(j.size()) != m.rows() ||
      static_cast<Eigen::Index>(j[0].size()) != m.cols())
    throw std::runtime_error("parameter tensor shape mismatch");
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      m(r, c) = j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
}

}  // namespace

std::string checkpoint_to_json(const Checkpoint& ckpt) {
  json doc;
  doc["version"] = ckpt.version;
  doc["config"] = config_to_json(ckpt.params.config);
  doc["vocabulary"] = ckpt.vocab.tokens();
  json tensors = json::object();
  ckpt.params.visit(
      [&](const std::string& name, const Matrix& m) { tensors[name] = matrix_to_json(m); });
  doc["parameters"] = std::move(tensors);
  return doc.dump();
}

Checkpoint checkpoint_from_json(const std::string& text) {
  const json doc = json::parse(text);
  Checkpoint ckpt;
  ckpt.version = doc.at("version").get<int>();
  if (ckpt.version != 1) throw std::runtime_error("unsupported checkpoint version");
  const ModelConfig config = config_from_json(doc.at("config"));
  ckpt.vocab = Vocabulary::from_tokens(doc.at("vocabulary").get<std::vector<std::string>>());
  if (ckpt.vocab.size() != config.vocab_size)
    throw std::runtime_error("vocabulary size does not match config");
  ckpt.params = Parameters::init(config);
  const json& tensors = doc.at("parameters");
  ckpt.params.visit([&](const std::string& name, Matrix& m) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw std::runtime_error("checkpoint missing tensor " + name);
    matrix_from_json(*it, m);
  });
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << checkpoint_to_json(ckpt);
  out.put('\n');
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return checkpoint_from_json(text);
}

}  // namespace reqgen

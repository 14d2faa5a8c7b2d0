#include "mcsql/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "json.hpp"
#include "mcsql/dataset.hpp"

namespace mcsql {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'M', 'C', 'S', 'Q', 'L', 'C', 'K', 'P'};

json encoder_config_to_json(const EncoderConfig& c) {
  return json{{"d", c.d},
              {"d_e", c.d_e},
              {"d_t", c.d_t},
              {"bilstm_layers", c.bilstm_layers},
              {"context_encoder",
               c.context_encoder == ContextEncoderKind::TinyTransformer ? "tiny-transformer"
                                                                        : "bilstm"},
              {"transformer_layers", c.transformer_layers},
              {"transformer_heads", c.transformer_heads},
              {"transformer_ffn", c.transformer_ffn},
              {"position_mode",
               c.position_mode == PositionMode::SegmentRelative ? "segment-relative"
                                                                : "absolute"},
              {"max_positions", c.max_positions}};
}

EncoderConfig encoder_config_from_json(const json& j) {
  EncoderConfig c;
  c.d = j.at("d").get<int>();
  c.d_e = j.at("d_e").get<int>();
  c.d_t = j.at("d_t").get<int>();
  c.bilstm_layers = j.at("bilstm_layers").get<int>();
  c.context_encoder = j.at("context_encoder").get<std::string>() == "bilstm"
                          ? ContextEncoderKind::BiLstm
                          : ContextEncoderKind::TinyTransformer;
  c.transformer_layers = j.at("transformer_layers").get<int>();
  c.transformer_heads = j.at("transformer_heads").get<int>();
  c.transformer_ffn = j.at("transformer_ffn").get<int>();
  c.position_mode = j.at("position_mode").get<std::string>() == "absolute"
                        ? PositionMode::Absolute
                        : PositionMode::SegmentRelative;
  c.max_positions = j.at("max_positions").get<int>();
  return c;
}

json model_config_to_json(const ModelConfig& c) {
  return json{{"encoder", encoder_config_to_json(c.encoder)},
              {"max_conds", c.max_conds},
              {"sigma", c.sigma},
              {"n_max", c.n_max},
              {"use_tc", c.ablation.use_tc},
              {"use_vl", c.ablation.use_vl},
              {"init_seed", c.init_seed}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  c.encoder = encoder_config_from_json(j.at("encoder"));
  c.max_conds = j.at("max_conds").get<int>();
  c.sigma = j.at("sigma").get<double>();
  c.n_max = j.at("n_max").get<int>();
  c.ablation.use_tc = j.at("use_tc").get<bool>();
  c.ablation.use_vl = j.at("use_vl").get<bool>();
  c.init_seed = j.at("init_seed").get<uint64_t>();
  return c;
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model) {
  json header;
  header["format_version"] = kCheckpointVersion;
  header["config"] = model_config_to_json(model.config());
  header["vocab"] = {{"words", model.vocab().words}, {"chars", model.vocab().chars}};
  json index = json::array();
  for (const auto& [name, t] : model.params().tensors()) {
    index.push_back({{"name", name},
                     {"rows", t.value.rows()},
                     {"cols", t.value.cols()},
                     {"group", t.group == ParamGroup::Encoder ? "encoder" : "sub"}});
  }
  header["tensors"] = std::move(index);
  const std::string header_str = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw FatalIoError("cannot write checkpoint " + path);
  out.write(kMagic, sizeof(kMagic));
  const uint64_t len = header_str.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(header_str.data(), static_cast<std::streamsize>(len));
  for (const auto& [name, t] : model.params().tensors()) {
    out.write(reinterpret_cast<const char*>(t.value.data()),
              static_cast<std::streamsize>(sizeof(double) * t.value.size()));
  }
  if (!out) throw FatalIoError("short write on checkpoint " + path);
}

std::unique_ptr<Model> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FatalIoError("cannot open checkpoint " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw FatalIoError("not a checkpoint file: " + path);
  uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string header_str(len, '\0');
  in.read(header_str.data(), static_cast<std::streamsize>(len));
  if (!in) throw FatalIoError("truncated checkpoint header: " + path);
  json header = json::parse(header_str);
  const uint32_t version = header.at("format_version").get<uint32_t>();
  if (version != kCheckpointVersion)
    throw FatalIoError("checkpoint version mismatch: found " + std::to_string(version) +
                       ", expected " + std::to_string(kCheckpointVersion));

  ModelConfig cfg = model_config_from_json(header.at("config"));
  Vocab vocab;
  vocab.words.clear();
  vocab.word_index.clear();
  for (const auto& w : header.at("vocab").at("words")) {
    const std::string word = w.get<std::string>();
    vocab.word_index.emplace(word, static_cast<int>(vocab.words.size()));
    vocab.words.push_back(word);
  }
  vocab.chars.clear();
  vocab.char_index.clear();
  for (const auto& c : header.at("vocab").at("chars")) {
    const std::string s = c.get<std::string>();
    if (s.size() == 1)
      vocab.char_index.emplace(s[0], static_cast<int>(vocab.chars.size()));
    vocab.chars.push_back(s);
  }

  auto model = std::make_unique<Model>(cfg, std::move(vocab));
  for (const auto& entry : header.at("tensors")) {
    const std::string name = entry.at("name").get<std::string>();
    const int rows = entry.at("rows").get<int>();
    const int cols = entry.at("cols").get<int>();
    if (!model->params().contains(name))
      throw FatalIoError("checkpoint tensor " + name + " unknown to this model");
    auto& t = model->params().at(name);
    if (t.value.rows() != rows || t.value.cols() != cols)
      throw FatalIoError("checkpoint tensor " + name + " shape mismatch");
    in.read(reinterpret_cast<char*>(t.value.data()),
            static_cast<std::streamsize>(sizeof(double) * t.value.size()));
    if (!in) throw FatalIoError("truncated checkpoint data: " + path);
  }
  return model;
}

}  // namespace mcsql

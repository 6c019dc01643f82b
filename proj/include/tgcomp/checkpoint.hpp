#pragma once

// Checkpoint container: a magic line, the byte length of a JSON header, the
// header (spec, vocabularies, tensor directory), then raw little-endian
// doubles for every parameter in directory order.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "tgcomp/model.hpp"
#include "tgcomp/vocab.hpp"

namespace tgc {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes little-endian");

inline constexpr const char* kCheckpointMagic = "TGCOMP-CHECKPOINT 1";

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  ModelParams params;
  Vocab words;
  Vocab tags;
  nlohmann::json meta = nlohmann::json::object();
};

inline nlohmann::json spec_to_json(const ModelSpec& s) {
  return {{"variant", variant_name(s.variant)},
          {"fusion", fusion_name(s.fusion)},
          {"dims",
           {{"word", s.dims.word},
            {"hidden", s.dims.hidden},
            {"hyper_h", s.dims.hyper_h},
            {"hyper_d", s.dims.hyper_d},
            {"tag", s.dims.tag}}},
          {"task", task_name(s.task)},
          {"num_classes", s.num_classes},
          {"num_words", s.num_words},
          {"num_tags", s.num_tags},
          {"mlp_hidden", s.mlp_hidden}};
}

inline ModelSpec spec_from_json(const nlohmann::json& j) {
  ModelSpec s;
  s.variant = variant_from_string(j.at("variant").get<std::string>());
  s.fusion = fusion_from_string(j.at("fusion").get<std::string>());
  const auto& d = j.at("dims");
  s.dims.word = d.at("word").get<int>();
  s.dims.hidden = d.at("hidden").get<int>();
  s.dims.hyper_h = d.at("hyper_h").get<int>();
  s.dims.hyper_d = d.at("hyper_d").get<int>();
  s.dims.tag = d.at("tag").get<int>();
  s.task = task_from_string(j.at("task").get<std::string>());
  s.num_classes = j.at("num_classes").get<int>();
  s.num_words = j.at("num_words").get<std::size_t>();
  s.num_tags = j.at("num_tags").get<std::size_t>();
  s.mlp_hidden = j.at("mlp_hidden").get<int>();
  return s;
}

inline void save_checkpoint(const Checkpoint& ck, std::ostream& out) {
  nlohmann::json header;
  header["spec"] = spec_to_json(ck.params.spec());
  header["words"] = ck.words.tokens();
  header["tags"] = ck.tags.tokens();
  header["meta"] = ck.meta;
  header["params"] = nlohmann::json::array();
  std::size_t offset = 0;
  ck.params.for_each([&](PId id, const Param& p) {
    header["params"].push_back({{"name", param_name(id)}, {"shape", p.value.shape}, {"offset", offset}});
    offset += p.value.size();
  });
  const std::string text = header.dump();
  out << kCheckpointMagic << '\n' << text.size() << '\n' << text;
  ck.params.for_each([&](PId, const Param& p) {
    out.write(reinterpret_cast<const char*>(p.value.data.data()),
              static_cast<std::streamsize>(p.value.size() * sizeof(double)));
  });
  if (!out) throw CheckpointError("checkpoint: write failed");
}

inline void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("checkpoint: cannot write " + path);
  save_checkpoint(ck, out);
}

inline Checkpoint load_checkpoint(std::istream& in) {
  std::string magic;
  std::getline(in, magic);
  if (magic != kCheckpointMagic) throw CheckpointError("checkpoint: bad magic line");
  std::string len_line;
  std::getline(in, len_line);
  std::size_t len = 0;
  try {
    len = std::stoul(len_line);
  } catch (const std::exception&) {
    throw CheckpointError("checkpoint: bad header length");
  }
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw CheckpointError("checkpoint: truncated header");

  Checkpoint ck;
  try {
    const auto header = nlohmann::json::parse(text);
    const ModelSpec spec = spec_from_json(header.at("spec"));
    ck.words = Vocab::from_tokens(header.at("words").get<std::vector<std::string>>());
    ck.tags = Vocab::from_tokens(header.at("tags").get<std::vector<std::string>>());
    ck.meta = header.value("meta", nlohmann::json::object());
    ck.params = ModelParams::empty(spec);
    for (const auto& e : header.at("params")) {
      const auto name = e.at("name").get<std::string>();
      const auto id = param_id(name);
      if (!id) throw CheckpointError("checkpoint: unknown parameter " + name);
      const auto shape = e.at("shape").get<std::vector<std::size_t>>();
      Tensor t(shape, std::vector<double>(Tensor::count(shape)));
      in.read(reinterpret_cast<char*>(t.data.data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
      if (!in) throw CheckpointError("checkpoint: truncated tensor " + name);
      ck.params.set(*id, std::move(t));
    }
    for (const auto& ps : param_layout(spec)) {
      if (!ck.params.has(ps.id)) {
        throw CheckpointError(std::string("checkpoint: missing parameter ") + param_name(ps.id));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint: malformed header: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("checkpoint: ") + e.what());
  }
  return ck;
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("checkpoint: cannot open " + path);
  return load_checkpoint(in);
}

}  // namespace tgc

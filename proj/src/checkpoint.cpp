#include "adr/checkpoint.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "adr/errors.hpp"
#include "adr/text.hpp"

namespace adr {
namespace {

constexpr const char* kMagic = "adrkit-checkpoint\t1";

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void put_f32(std::string& out, float f) {
  const auto bits = std::bit_cast<std::uint32_t>(f);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

float get_f32(const unsigned char* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return std::bit_cast<float>(bits);
}

std::size_t to_size(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw DataError("checkpoint: bad value for " + what + ": '" + s + "'");
  }
}

}  // namespace

const std::string* Checkpoint::find_metadata(const std::string& key) const {
  for (const auto& [k, v] : metadata)
    if (k == key) return &v;
  return nullptr;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  const auto& c = ckpt.params.config;
  std::string out = std::string(kMagic) + "\n";
  out += "config\tvocab_size\t" + std::to_string(c.vocab_size) + "\n";
  out += "config\td_model\t" + std::to_string(c.d_model) + "\n";
  out += "config\tn_layers\t" + std::to_string(c.n_layers) + "\n";
  out += "config\tn_heads\t" + std::to_string(c.n_heads) + "\n";
  out += "config\tffn_dim\t" + std::to_string(c.ffn_dim) + "\n";
  out += "config\tmax_len\t" + std::to_string(c.max_len) + "\n";
  out += "config\tdropout\t" + format_double(c.dropout) + "\n";
  out += "config\tn_bio_labels\t" + std::to_string(c.n_bio_labels) + "\n";
  out += "config\tn_concepts\t" + std::to_string(c.n_concepts) + "\n";
  for (const auto& [k, v] : ckpt.metadata)
    out += "meta\t" + text::escape_field(k) + "\t" + text::escape_field(v) + "\n";
  for (const auto& con : ckpt.concepts)
    out += "concept\t" + text::escape_field(con.code) + "\t" + text::escape_field(con.term) + "\n";
  for (const auto& t : ckpt.params.tensors)
    out += "tensor\t" + t.name + "\t" + std::to_string(t.value.rows()) + "\t" +
           std::to_string(t.value.cols()) + "\n";
  out += "data\n";
  for (const auto& t : ckpt.params.tensors)
    for (Eigen::Index r = 0; r < t.value.rows(); ++r)
      for (Eigen::Index col = 0; col < t.value.cols(); ++col)
        put_f32(out, static_cast<float>(t.value(r, col)));
  text::write_file(path, out);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string blob = buffer.str();

  Checkpoint ckpt;
  EncoderConfig cfg;
  std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> manifest;
  std::size_t pos = 0;
  bool first = true, saw_data = false;
  while (pos < blob.size()) {
    const auto nl = blob.find('\n', pos);
    if (nl == std::string::npos) break;
    const std::string line = blob.substr(pos, nl - pos);
    pos = nl + 1;
    if (first) {
      if (line != kMagic) throw DataError(path + ": not an adrkit checkpoint");
      first = false;
      continue;
    }
    if (line == "data") {
      saw_data = true;
      break;
    }
    const auto f = text::split(line, '\t');
    if (f[0] == "config" && f.size() == 3) {
      const auto& key = f[1];
      if (key == "dropout") cfg.dropout = std::stod(f[2]);
      else if (key == "vocab_size") cfg.vocab_size = to_size(f[2], key);
      else if (key == "d_model") cfg.d_model = to_size(f[2], key);
      else if (key == "n_layers") cfg.n_layers = to_size(f[2], key);
      else if (key == "n_heads") cfg.n_heads = to_size(f[2], key);
      else if (key == "ffn_dim") cfg.ffn_dim = to_size(f[2], key);
      else if (key == "max_len") cfg.max_len = to_size(f[2], key);
      else if (key == "n_bio_labels") cfg.n_bio_labels = to_size(f[2], key);
      else if (key == "n_concepts") cfg.n_concepts = to_size(f[2], key);
      else throw DataError(path + ": unknown config key '" + key + "'");
    } else if (f[0] == "meta" && f.size() == 3) {
      ckpt.metadata.emplace_back(text::unescape_field(f[1]), text::unescape_field(f[2]));
    } else if (f[0] == "concept" && f.size() == 3) {
      ckpt.concepts.push_back({text::unescape_field(f[1]), text::unescape_field(f[2])});
    } else if (f[0] == "tensor" && f.size() == 4) {
      manifest.push_back({f[1], {to_size(f[2], "rows"), to_size(f[3], "cols")}});
    } else {
      throw DataError(path + ": malformed header line '" + line + "'");
    }
  }
  if (!saw_data) throw DataError(path + ": missing data section");
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(path + ": " + e.what());
  }

  // The manifest must agree with the architecture implied by the config.
  ckpt.params = init_params(cfg, 0);
  if (manifest.size() != ckpt.params.tensors.size())
    throw DataError(path + ": tensor count disagrees with config");
  std::size_t need = 0;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const auto& t = ckpt.params.tensors[i];
    if (manifest[i].first != t.name ||
        manifest[i].second.first != static_cast<std::size_t>(t.value.rows()) ||
        manifest[i].second.second != static_cast<std::size_t>(t.value.cols()))
      throw DataError(path + ": tensor '" + manifest[i].first + "' does not match the config");
    need += static_cast<std::size_t>(t.value.size()) * 4;
  }
  if (blob.size() - pos != need) throw DataError(path + ": tensor data has the wrong size");
  const auto* p = reinterpret_cast<const unsigned char*>(blob.data() + pos);
  for (auto& t : ckpt.params.tensors)
    for (Eigen::Index r = 0; r < t.value.rows(); ++r)
      for (Eigen::Index col = 0; col < t.value.cols(); ++col, p += 4) t.value(r, col) = get_f32(p);
  if (!ckpt.concepts.empty() && ckpt.concepts.size() != cfg.n_concepts)
    throw DataError(path + ": concept list disagrees with n_concepts");
  return ckpt;
}

}  // namespace adr

#include "adr/config.hpp"

#include <algorithm>
#include <stdexcept>

#include "adr/errors.hpp"
#include "adr/text.hpp"

namespace adr {

const std::vector<std::string>& RunConfig::known_keys() {
  static const std::vector<std::string> keys = {
      "task",       "train_data", "train_tweets", "train_spans",  "data",     "spans",
      "resources",  "vocab",      "checkpoint",   "norm_checkpoint", "output", "log",
      "seed",       "threads",    "learning_rate", "batch_size",  "epochs",   "lambda",
      "mtl",        "dropout",    "weight_decay", "beta1",        "beta2",    "epsilon",
      "d_model",    "n_layers",   "n_heads",      "ffn_dim",      "max_len"};
  return keys;
}

const std::vector<std::string>& RunConfig::architecture_keys() {
  static const std::vector<std::string> keys = {"d_model", "n_layers", "n_heads", "ffn_dim",
                                                "max_len", "dropout"};
  return keys;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::vector<std::string> lines;
  try {
    lines = text::read_lines(path);
  } catch (const DataError&) {
    throw ConfigError("cannot read config file: " + path);
  }
  RunConfig cfg;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string line = text::trim(lines[i]);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(i + 1) + ": expected key = value");
    cfg.set(text::trim(line.substr(0, eq)), text::trim(line.substr(eq + 1)));
  }
  return cfg;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto& keys = known_keys();
  if (std::find(keys.begin(), keys.end(), key) == keys.end())
    throw ConfigError("unknown config key '" + key + "'");
  values_[key] = value;
}

std::optional<std::string> RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string RunConfig::require(const std::string& key) const {
  auto v = get(key);
  if (!v || v->empty()) throw ConfigError("missing required setting '" + key + "'");
  return *v;
}

std::string RunConfig::get_or(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

std::size_t RunConfig::get_size(const std::string& key, std::size_t fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    const auto n = std::stoull(*v, &used);
    if (used != v->size() || (*v)[0] == '-') throw std::invalid_argument(*v);
    return static_cast<std::size_t>(n);
  } catch (const std::exception&) {
    throw ConfigError("setting '" + key + "' must be a non-negative integer, got '" + *v + "'");
  }
}

double RunConfig::get_double(const std::string& key, double fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    const double d = std::stod(*v, &used);
    if (used != v->size()) throw std::invalid_argument(*v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("setting '" + key + "' must be a number, got '" + *v + "'");
  }
}

bool RunConfig::get_bool(const std::string& key, bool fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw ConfigError("setting '" + key + "' must be true or false, got '" + *v + "'");
}

Task RunConfig::task() const {
  try {
    return parse_task(require("task"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

Hyperparams RunConfig::hyperparams() const {
  Hyperparams hp = Hyperparams::defaults_for(task(), multi_task());
  hp.learning_rate = get_double("learning_rate", hp.learning_rate);
  hp.batch_size = get_size("batch_size", hp.batch_size);
  hp.epochs = get_size("epochs", hp.epochs);
  hp.lambda = get_double("lambda", hp.lambda);
  hp.weight_decay = get_double("weight_decay", hp.weight_decay);
  hp.beta1 = get_double("beta1", hp.beta1);
  hp.beta2 = get_double("beta2", hp.beta2);
  hp.epsilon = get_double("epsilon", hp.epsilon);
  hp.seed = get_size("seed", 0);
  try {
    hp.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return hp;
}

EncoderConfig RunConfig::encoder(std::size_t vocab_size, std::size_t n_concepts) const {
  EncoderConfig c;
  c.vocab_size = vocab_size;
  c.d_model = get_size("d_model", c.d_model);
  c.n_layers = get_size("n_layers", c.n_layers);
  c.n_heads = get_size("n_heads", c.n_heads);
  c.ffn_dim = get_size("ffn_dim", c.ffn_dim);
  c.max_len = get_size("max_len", c.max_len);
  c.dropout = get_double("dropout", c.dropout);
  c.n_concepts = n_concepts;
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

}  // namespace adr

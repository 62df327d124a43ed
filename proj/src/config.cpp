#include "ehfl/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace ehfl {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_int(const std::string& key, const std::string& v) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) throw ConfigError(key, "expected an integer, got '" + v + "'");
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  double out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) throw ConfigError(key, "expected a number, got '" + v + "'");
  return out;
}

std::string real_text(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

struct KeyCodec {
  std::function<void(Config&, const std::string&)> set;
  std::function<std::string(const Config&)> get;
};

template <typename T>
KeyCodec int_key(const char* key, T Config::*field) {
  return {[=](Config& c, const std::string& v) { c.*field = parse_int<T>(key, v); },
          [=](const Config& c) { return std::to_string(c.*field); }};
}

KeyCodec real_key(const char* key, double Config::*field) {
  return {[=](Config& c, const std::string& v) { c.*field = parse_real(key, v); },
          [=](const Config& c) { return real_text(c.*field); }};
}

KeyCodec string_key(std::string Config::*field) {
  return {[=](Config& c, const std::string& v) { c.*field = v; }, [=](const Config& c) { return c.*field; }};
}

const std::vector<std::pair<std::string, KeyCodec>>& codecs() {
  static const std::vector<std::pair<std::string, KeyCodec>> table = {
      {"clients", int_key("clients", &Config::clients)},
      {"epochs", int_key("epochs", &Config::epochs)},
      {"slots_per_epoch", int_key("slots_per_epoch", &Config::slots_per_epoch)},
      {"kappa", int_key("kappa", &Config::kappa)},
      {"p_bc", real_key("p_bc", &Config::p_bc)},
      {"e_max", int_key("e_max", &Config::e_max)},
      {"e_init", int_key("e_init", &Config::e_init)},
      {"gamma", real_key("gamma", &Config::gamma)},
      {"hidden",
       {[](Config& c, const std::string& v) {
          c.hidden.clear();
          if (v.empty() || v == "none") return;
          std::stringstream ss(v);
          std::string item;
          while (std::getline(ss, item, ',')) c.hidden.push_back(parse_int<std::size_t>("hidden", trim(item)));
        },
        [](const Config& c) {
          if (c.hidden.empty()) return std::string("none");
          std::string s;
          for (std::size_t i = 0; i < c.hidden.size(); ++i) s += (i ? "," : "") + std::to_string(c.hidden[i]);
          return s;
        }}},
      {"feature_layer",
       {[](Config& c, const std::string& v) {
          c.feature_layer = (v == "output") ? 0 : parse_int<std::size_t>("feature_layer", v);
        },
        [](const Config& c) { return c.feature_layer == 0 ? std::string("output") : std::to_string(c.feature_layer); }}},
      {"init",
       {[](Config& c, const std::string& v) {
          if (v == "zero") c.init = InitKind::Zero;
          else if (v == "uniform") c.init = InitKind::Uniform;
          else throw ConfigError("init", "expected 'zero' or 'uniform', got '" + v + "'");
        },
        [](const Config& c) { return std::string(c.init == InitKind::Zero ? "zero" : "uniform"); }}},
      {"init_scale", real_key("init_scale", &Config::init_scale)},
      {"classes", int_key("classes", &Config::classes)},
      {"input_dim", int_key("input_dim", &Config::input_dim)},
      {"alpha", real_key("alpha", &Config::alpha)},
      {"samples_per_client", int_key("samples_per_client", &Config::samples_per_client)},
      {"batch_size", int_key("batch_size", &Config::batch_size)},
      {"test_per_class", int_key("test_per_class", &Config::test_per_class)},
      {"class_spread", real_key("class_spread", &Config::class_spread)},
      {"dataset", string_key(&Config::dataset)},
      {"test_dataset", string_key(&Config::test_dataset)},
      {"policy",
       {[](Config& c, const std::string& v) {
          auto p = parse_policy(v);
          if (!p) throw ConfigError("policy", "unknown policy '" + v + "' (vaoi, fedavg, fedbacys, fedbacys_odd)");
          c.policy = *p;
        },
        [](const Config& c) { return std::string(to_string(c.policy)); }}},
      {"k", int_key("k", &Config::k)},
      {"mu", real_key("mu", &Config::mu)},
      {"groups", int_key("groups", &Config::groups)},
      {"selection",
       {[](Config& c, const std::string& v) {
          if (v == "topk") c.selection = SelectionVariant::TopK;
          else if (v == "proportional") c.selection = SelectionVariant::Proportional;
          else throw ConfigError("selection", "expected 'topk' or 'proportional', got '" + v + "'");
        },
        [](const Config& c) {
          return std::string(c.selection == SelectionVariant::TopK ? "topk" : "proportional");
        }}},
      {"seed",
       {[](Config& c, const std::string& v) { c.seed = parse_int<std::uint64_t>("seed", v); },
        [](const Config& c) { return c.seed ? std::to_string(*c.seed) : std::string(); }}},
      {"output", string_key(&Config::output)},
  };
  return table;
}

const KeyCodec* find_codec(const std::string& key) {
  for (const auto& [name, codec] : codecs())
    if (name == key) return &codec;
  return nullptr;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, _] : codecs()) k.push_back(name);
    return k;
  }();
  return keys;
}

void set_key(Config& config, const std::string& key, const std::string& value) {
  const KeyCodec* codec = find_codec(key);
  if (!codec) throw ConfigError(key, "unknown configuration key");
  codec->set(config, trim(value));
}

void apply_config_text(Config& config, const std::string& text, const std::string& origin) {
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("", origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    set_key(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void apply_config_file(Config& config, const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("", "cannot read config file " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  apply_config_text(config, ss.str(), path.string());
}

std::string Config::to_text() const {
  std::string out;
  for (const auto& [name, codec] : codecs()) {
    const std::string v = codec.get(*this);
    if (name == "seed" && v.empty()) continue;
    out += name + " = " + v + "\n";
  }
  return out;
}

std::vector<std::size_t> Config::layer_sizes() const {
  std::vector<std::size_t> sizes{input_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(static_cast<std::size_t>(classes));
  return sizes;
}

std::size_t Config::resolved_feature_layer() const { return feature_layer == 0 ? hidden.size() + 1 : feature_layer; }

std::size_t Config::resolved_groups() const {
  if (groups != 0) return groups;
  return k == 0 ? 1 : std::max<std::size_t>(1, clients / k);
}

PolicyConfig Config::policy_config() const {
  return PolicyConfig{policy, k, resolved_groups(), mu, selection};
}

std::vector<std::string> Config::validate() const {
  std::vector<std::string> warnings;
  if (!seed) throw ConfigError("seed", "a seed is required; runs are never seeded from the clock");
  if (clients == 0) throw ConfigError("clients", "must be >= 1");
  if (epochs < 1) throw ConfigError("epochs", "must be >= 1");
  if (kappa < 1) throw ConfigError("kappa", "must be >= 1");
  if (e_max < 1) throw ConfigError("e_max", "must be >= 1");
  if (kappa > e_max) throw ConfigError("kappa", "constraint kappa <= e_max violated");
  if (slots_per_epoch <= kappa) throw ConfigError("slots_per_epoch", "constraint slots_per_epoch > kappa violated");
  if (e_init < 0 || e_init > e_max) throw ConfigError("e_init", "must lie in [0, e_max]");
  if (!(p_bc >= 0.0 && p_bc <= 1.0)) throw ConfigError("p_bc", "must lie in [0, 1]");
  if (!(gamma > 0.0)) throw ConfigError("gamma", "must be > 0");
  if (!(alpha > 0.0)) throw ConfigError("alpha", "must be > 0");
  if (!(mu >= 0.0)) throw ConfigError("mu", "must be >= 0");
  if (!(init_scale >= 0.0)) throw ConfigError("init_scale", "must be >= 0");
  if (k < 1 || k > clients) throw ConfigError("k", "constraint 1 <= k <= clients violated");
  if (classes < 2) throw ConfigError("classes", "must be >= 2");
  if (input_dim == 0) throw ConfigError("input_dim", "must be >= 1");
  for (std::size_t h : hidden)
    if (h == 0) throw ConfigError("hidden", "layer widths must be >= 1");
  if (feature_layer > hidden.size() + 1) throw ConfigError("feature_layer", "exceeds the number of layers");
  if (samples_per_client == 0) throw ConfigError("samples_per_client", "must be >= 1");
  if (batch_size == 0 || batch_size > samples_per_client)
    throw ConfigError("batch_size", "must lie in [1, samples_per_client]");
  if (test_per_class == 0 && dataset.empty()) throw ConfigError("test_per_class", "must be >= 1");
  if (!dataset.empty() && test_dataset.empty()) throw ConfigError("test_dataset", "required when dataset is set");
  if (groups > clients) throw ConfigError("groups", "must not exceed clients");
  if (output.empty()) throw ConfigError("output", "must not be empty");
  if (batch_size * static_cast<std::size_t>(kappa) > samples_per_client)
    warnings.push_back("batch_size * kappa exceeds samples_per_client; a training run sweeps the data more than once");
  else if (batch_size * static_cast<std::size_t>(kappa) != samples_per_client)
    warnings.push_back("batch_size * kappa != samples_per_client; historical moments use samples seen");
  return warnings;
}

Config preset(const std::string& name) {
  Config c;  // defaults are the desk preset
  if (name == "desk") return c;
  if (name == "paper") {
    c.clients = 100;
    c.epochs = 500;
    c.slots_per_epoch = 30;
    c.kappa = 20;
    c.e_max = 25;
    c.e_init = 0;
    c.gamma = 0.01;
    c.k = 10;
    c.mu = 0.5;
    c.groups = 10;
    c.classes = 10;
    c.input_dim = 32;
    c.hidden = {64};
    c.samples_per_client = 300;
    c.batch_size = 15;
    c.test_per_class = 1000;
    return c;
  }
  throw ConfigError("preset", "unknown preset '" + name + "' (desk, paper)");
}

}  // namespace ehfl

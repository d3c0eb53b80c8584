#include "rhgcn/run_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <type_traits>
#include <sstream>

#include "rhgcn/error.hpp"
#include "rhgcn/product.hpp"

namespace rhgcn {

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text, const std::string& what) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) throw ConfigError(what + ": '" + text + "' is not a number");
  return v;
}

namespace {

std::int64_t parse_int(const std::string& text, const std::string& what) {
  std::int64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ConfigError(what + ": '" + text + "' is not an integer");
  }
  return v;
}

std::uint64_t parse_uint(const std::string& text, const std::string& what) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ConfigError(what + ": '" + text + "' is not a non-negative integer");
  }
  return v;
}

bool parse_bool(const std::string& text, const std::string& what) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError(what + ": '" + text + "' is not a boolean");
}

int to_int(const std::string& text, const std::string& what) {
  const auto v = parse_int(text, what);
  if (v < -2147483647 || v > 2147483647) throw ConfigError(what + ": out of range");
  return static_cast<int>(v);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Field {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

template <typename T>
Field make_field(T RunConfig::* member) {
  Field f;
  f.get = [member](const RunConfig& c) {
    const T& v = c.*member;
    if constexpr (std::is_same_v<T, std::string>) {
      return v;
    } else if constexpr (std::is_same_v<T, bool>) {
      return std::string(v ? "true" : "false");
    } else if constexpr (std::is_same_v<T, double>) {
      return format_double(v);
    } else {
      return std::to_string(v);
    }
  };
  return f;
}

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = [] {
    std::vector<std::pair<std::string, Field>> t;
    auto str = [&t](const char* key, std::string RunConfig::* m) {
      Field f = make_field(m);
      f.set = [m](RunConfig& c, const std::string& v) { c.*m = v; };
      t.emplace_back(key, f);
    };
    auto dbl = [&t](const char* key, double RunConfig::* m) {
      Field f = make_field(m);
      f.set = [m, key](RunConfig& c, const std::string& v) { c.*m = parse_double(v, key); };
      t.emplace_back(key, f);
    };
    auto integer = [&t](const char* key, int RunConfig::* m) {
      Field f = make_field(m);
      f.set = [m, key](RunConfig& c, const std::string& v) { c.*m = to_int(v, key); };
      t.emplace_back(key, f);
    };
    auto u64 = [&t](const char* key, std::uint64_t RunConfig::* m) {
      Field f = make_field(m);
      f.set = [m, key](RunConfig& c, const std::string& v) { c.*m = parse_uint(v, key); };
      t.emplace_back(key, f);
    };
    auto boolean = [&t](const char* key, bool RunConfig::* m) {
      Field f = make_field(m);
      f.set = [m, key](RunConfig& c, const std::string& v) { c.*m = parse_bool(v, key); };
      t.emplace_back(key, f);
    };
    str("dataset", &RunConfig::dataset);
    str("synth", &RunConfig::synth);
    u64("data_seed", &RunConfig::data_seed);
    str("signature", &RunConfig::signature);
    dbl("origin_radius", &RunConfig::origin_radius);
    integer("layers", &RunConfig::layers);
    dbl("alpha", &RunConfig::alpha);
    dbl("beta_base", &RunConfig::beta_base);
    dbl("drop_rate", &RunConfig::drop_rate);
    str("noise_granularity", &RunConfig::noise_granularity);
    boolean("noise_clamp", &RunConfig::noise_clamp);
    str("activation", &RunConfig::activation);
    str("optimizer", &RunConfig::optimizer);
    dbl("lr", &RunConfig::lr);
    dbl("weight_decay", &RunConfig::weight_decay);
    dbl("momentum", &RunConfig::momentum);
    dbl("adam_beta1", &RunConfig::adam_beta1);
    dbl("adam_beta2", &RunConfig::adam_beta2);
    dbl("adam_eps", &RunConfig::adam_eps);
    integer("epochs", &RunConfig::epochs);
    integer("patience", &RunConfig::patience);
    u64("seed", &RunConfig::seed);
    str("out", &RunConfig::out);
    integer("sweep_seeds", &RunConfig::sweep_seeds);
    integer("threads", &RunConfig::threads);
    return t;
  }();
  return table;
}

const Field& field(const std::string& key) {
  for (const auto& [k, f] : fields()) {
    if (k == key) return f;
  }
  throw ConfigError("unknown configuration key '" + key + "'");
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace

std::vector<std::string> run_config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, f] : fields()) keys.push_back(k);
  return keys;
}

void RunConfig::set(const std::string& key, const std::string& value) { field(key).set(*this, value); }

std::string RunConfig::get(const std::string& key) const { return field(key).get(*this); }

std::vector<std::pair<std::string, std::string>> RunConfig::entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [k, f] : fields()) out.emplace_back(k, f.get(*this));
  return out;
}

void RunConfig::validate() const {
  require(!dataset.empty() || !synth.empty(), "either dataset or synth must be set");
  require(!signature.empty(), "signature must not be empty");
  parse_signature(signature);
  require(std::isfinite(origin_radius) && origin_radius >= 0.0, "origin_radius must be finite and >= 0");
  require(layers >= 1 && layers <= 1024, "layers must lie in [1, 1024]");
  require(alpha >= 0.0 && alpha <= 1.0, "alpha must lie in [0, 1]");
  require(std::isfinite(beta_base) && beta_base >= 0.0, "beta_base must be finite and >= 0");
  require(drop_rate >= 0.0 && drop_rate < 1.0, "drop_rate must lie in [0, 1)");
  require(noise_granularity == "per_node_component" || noise_granularity == "per_component",
          "noise_granularity must be per_node_component or per_component");
  require(activation == "relu" || activation == "identity", "activation must be relu or identity");
  require(optimizer == "adam" || optimizer == "sgd", "optimizer must be adam or sgd");
  require(std::isfinite(lr) && lr > 0.0, "lr must be finite and > 0");
  require(std::isfinite(weight_decay) && weight_decay >= 0.0, "weight_decay must be finite and >= 0");
  require(momentum >= 0.0 && momentum < 1.0, "momentum must lie in [0, 1)");
  require(adam_beta1 >= 0.0 && adam_beta1 < 1.0, "adam_beta1 must lie in [0, 1)");
  require(adam_beta2 >= 0.0 && adam_beta2 < 1.0, "adam_beta2 must lie in [0, 1)");
  require(std::isfinite(adam_eps) && adam_eps > 0.0, "adam_eps must be finite and > 0");
  require(epochs >= 0 && epochs <= 1000000, "epochs must lie in [0, 1000000]");
  require(patience >= 1, "patience must be >= 1");
  require(sweep_seeds >= 1 && sweep_seeds <= 1000, "sweep_seeds must lie in [1, 1000]");
  require(threads >= 1 && threads <= 256, "threads must lie in [1, 256]");
}

std::string RunConfig::serialize() const {
  std::ostringstream out;
  for (const auto& [k, v] : entries()) out << k << " = " << v << '\n';
  return out.str();
}

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(number) + ": expected 'key = value'");
    }
    try {
      c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(number) + ": " + e.what());
    }
  }
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

void RunConfig::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << serialize();
}

}  // namespace rhgcn

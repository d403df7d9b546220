#ifndef RADSPEC_TOOLS_CLI_SUPPORT_HPP
#define RADSPEC_TOOLS_CLI_SUPPORT_HPP

#include <radspec/io.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

namespace cli {

using radspec::json;

enum Exit : int { ok = 0, config_error = 2, accuracy_failure = 3, unresolved = 4 };

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline std::string read_file(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  if (!in)
    throw ConfigError("cannot read " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_file(const std::filesystem::path &p, const std::string &text) {
  std::ofstream out(p, std::ios::binary);
  if (!out)
    throw ConfigError("cannot write " + p.string());
  out << text;
}

// Typed access to a flat JSON config. Every key read is echoed, with its
// default when absent, into the resolved config; unread keys are errors.
class Params {
public:
  explicit Params(json src) : src_(std::move(src)) {
    if (!src_.is_object())
      throw ConfigError("config must be a JSON object");
  }

  double num(const std::string &key, std::optional<double> fallback = {}) {
    return get<double>(key, fallback, [](const json &j) { return j.is_number(); }, "a number");
  }

  int integer(const std::string &key, std::optional<int> fallback = {}) {
    return get<int>(key, fallback, [](const json &j) { return j.is_number_integer(); },
                    "an integer");
  }

  bool flag(const std::string &key, bool fallback) {
    return get<bool>(key, fallback, [](const json &j) { return j.is_boolean(); }, "a boolean");
  }

  std::string str(const std::string &key, std::optional<std::string> fallback = {}) {
    return get<std::string>(key, fallback, [](const json &j) { return j.is_string(); },
                            "a string");
  }

  std::vector<double> list(const std::string &key, std::optional<std::vector<double>> fallback = {}) {
    auto v = get<std::vector<double>>(
        key, fallback,
        [](const json &j) {
          return j.is_array() && std::all_of(j.begin(), j.end(), [](const json &x) { return x.is_number(); });
        },
        "an array of numbers");
    if (v.empty())
      throw ConfigError("'" + key + "' must not be empty");
    return v;
  }

  std::optional<json> raw(const std::string &key) {
    used_.insert(key);
    if (!src_.contains(key))
      return std::nullopt;
    resolved_[key] = src_.at(key);
    return src_.at(key);
  }

  bool has(const std::string &key) const { return src_.contains(key); }

  // Marks keys consumed outside the typed accessors.
  void note(const std::string &key, json value) {
    used_.insert(key);
    resolved_[key] = std::move(value);
  }

  void finish() const {
    for (const auto &[k, v] : src_.items())
      if (!used_.count(k))
        throw ConfigError("unknown config key '" + k + "'");
  }

  const json &resolved() const { return resolved_; }

private:
  template <typename T, typename Check>
  T get(const std::string &key, std::optional<T> fallback, Check ok, const char *what) {
    used_.insert(key);
    if (!src_.contains(key)) {
      if (!fallback)
        throw ConfigError("missing required key '" + key + "'");
      resolved_[key] = *fallback;
      return *fallback;
    }
    const json &j = src_.at(key);
    if (!ok(j))
      throw ConfigError("'" + key + "' must be " + what);
    resolved_[key] = j;
    return j.get<T>();
  }

  json src_;
  json resolved_ = json::object();
  std::set<std::string> used_;
};

// Profile from a config entry: {"file": path}, an inline profile document
// (with "values"), or {"name": ..., <numeric parameters>} for the built-in
// families.
inline radspec::RadialProfile profile_from_spec(const json &spec, const std::string &key) {
  if (!spec.is_object())
    throw ConfigError("'" + key + "' must be an object");
  if (spec.contains("file"))
    return radspec::profile_from_json(json::parse(read_file(spec.at("file").get<std::string>())))
        .profile;
  if (spec.contains("values"))
    return radspec::profile_from_json(spec).profile;
  if (!spec.contains("name") || !spec.at("name").is_string())
    throw ConfigError("'" + key + "' needs 'file', 'values' or 'name'");
  radspec::ParamMap pm;
  for (const auto &[k, v] : spec.items()) {
    if (k == "name")
      continue;
    if (!v.is_number())
      throw ConfigError("'" + key + "." + k + "' must be a number");
    pm[k] = v.get<double>();
  }
  return radspec::standard_profile(spec.at("name").get<std::string>(), pm);
}

inline radspec::RadialProfile profile_param(Params &p, const std::string &key) {
  const auto spec = p.raw(key);
  if (!spec)
    throw ConfigError("missing required key '" + key + "'");
  return profile_from_spec(*spec, key);
}

inline json report(const std::string &command, std::uint64_t seed, const Params &p,
                   const std::string &status, json results) {
  return json{{"schema_version", radspec::schema_version},
              {"command", command},
              {"seed", seed},
              {"config", p.resolved()},
              {"status", status},
              {"results", std::move(results)}};
}

inline void emit(const std::filesystem::path &dir, const std::string &command, const json &rep,
                 const std::vector<std::pair<std::string, std::string>> &csvs) {
  std::filesystem::create_directories(dir);
  write_file(dir / (command + ".json"), rep.dump(2) + "\n");
  for (const auto &[suffix, text] : csvs)
    write_file(dir / (command + suffix + ".csv"), text);
}

} // namespace cli

#endif

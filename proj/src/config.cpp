#include "ttrnn/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "ttrnn/error.hpp"

namespace ttrnn {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty() || !std::isfinite(out)) {
    throw ConfigError(key + ": expected a finite number, got '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::optional<ModeDims> parse_modes(const std::string& key, const std::string& v) {
  if (v.empty()) return std::nullopt;
  try {
    return ModeDims::parse(v);
  } catch (const Error& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

std::string fmt_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

TaskName parse_task(const std::string& v) {
  if (v == "mnist_row") return TaskName::MnistRow;
  if (v == "mnist_pixel") return TaskName::MnistPixel;
  if (v == "mnist_permuted") return TaskName::MnistPermuted;
  if (v == "pianoroll") return TaskName::PianoRoll;
  throw ConfigError("task: expected mnist_row, mnist_pixel, mnist_permuted or pianoroll, got '" + v + "'");
}

CellKind parse_cell(const std::string& v) {
  if (v == "srnn" || v == "rnn") return CellKind::SRNN;
  if (v == "gru") return CellKind::GRU;
  throw ConfigError("model: expected srnn or gru, got '" + v + "'");
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    if (!out.emplace(key, value).second) {
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
  }
  return out;
}

std::map<std::string, std::string> read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str());
}

std::string task_name(TaskName task) {
  switch (task) {
    case TaskName::MnistRow: return "mnist_row";
    case TaskName::MnistPixel: return "mnist_pixel";
    case TaskName::MnistPermuted: return "mnist_permuted";
    case TaskName::PianoRoll: return "pianoroll";
  }
  return "?";
}

TrainConfig TrainConfig::from_keys(const std::map<std::string, std::string>& keys) {
  TrainConfig c;
  bool hidden_given = false;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  auto size = [](std::size_t& f) -> Setter {
    return [&f](const std::string& k, const std::string& v) { f = parse_uint(k, v); };
  };
  auto u64 = [](std::uint64_t& f) -> Setter {
    return [&f](const std::string& k, const std::string& v) { f = parse_uint(k, v); };
  };
  auto real = [](double& f) -> Setter {
    return [&f](const std::string& k, const std::string& v) { f = parse_double(k, v); };
  };
  auto text = [](std::string& f) -> Setter {
    return [&f](const std::string&, const std::string& v) { f = v; };
  };
  const std::map<std::string, Setter> setters{
      {"task", [&](const std::string&, const std::string& v) { c.task = parse_task(v); }},
      {"model", [&](const std::string&, const std::string& v) { c.model = parse_cell(v); }},
      {"tt", [&](const std::string& k, const std::string& v) { c.tt = parse_bool(k, v); }},
      {"hidden",
       [&](const std::string& k, const std::string& v) {
         c.hidden = parse_uint(k, v);
         hidden_given = true;
       }},
      {"hidden_modes", [&](const std::string& k, const std::string& v) { c.hidden_modes = parse_modes(k, v); }},
      {"input_modes", [&](const std::string& k, const std::string& v) { c.input_modes = parse_modes(k, v); }},
      {"rank", size(c.rank)},
      {"projection", size(c.projection)},
      {"baseline_hidden", size(c.baseline_hidden)},
      {"baseline_input", size(c.baseline_input)},
      {"lr", real(c.adam.learning_rate)},
      {"beta1", real(c.adam.beta1)},
      {"beta2", real(c.adam.beta2)},
      {"eps", real(c.adam.epsilon)},
      {"clip_norm", real(c.clip_norm)},
      {"batch_size", size(c.batch_size)},
      {"epochs", size(c.epochs)},
      {"max_steps", size(c.max_steps)},
      {"patience", size(c.patience)},
      {"seed", u64(c.seed)},
      {"data_seed", u64(c.data_seed)},
      {"perm_seed", u64(c.perm_seed)},
      {"train_images", text(c.train_images)},
      {"train_labels", text(c.train_labels)},
      {"test_images", text(c.test_images)},
      {"test_labels", text(c.test_labels)},
      {"train_subset", size(c.train_subset)},
      {"valid_subset", size(c.valid_subset)},
      {"train_path", text(c.train_path)},
      {"valid_path", text(c.valid_path)},
      {"test_path", text(c.test_path)},
      {"synthetic", [&](const std::string& k, const std::string& v) { c.synthetic = parse_bool(k, v); }},
      {"synthetic_songs", size(c.synthetic_songs)},
      {"synthetic_steps", size(c.synthetic_steps)},
      {"synthetic_period", size(c.synthetic_period)},
      {"out", text(c.out)},
  };
  for (const auto& [k, v] : keys) {
    const auto it = setters.find(k);
    if (it == setters.end()) throw ConfigError("unknown config key '" + k + "'");
    it->second(k, v);
  }

  if (c.projection == 0) throw ConfigError("projection: must be positive");
  if (c.batch_size == 0) throw ConfigError("batch_size: must be positive");
  if (c.rank == 0) throw ConfigError("rank: must be positive");
  if (!(c.adam.learning_rate > 0)) throw ConfigError("lr: must be positive");
  if (!(c.adam.beta1 >= 0 && c.adam.beta1 < 1)) throw ConfigError("beta1: must lie in [0, 1)");
  if (!(c.adam.beta2 >= 0 && c.adam.beta2 < 1)) throw ConfigError("beta2: must lie in [0, 1)");
  if (!(c.adam.epsilon > 0)) throw ConfigError("eps: must be positive");
  if (c.clip_norm < 0) throw ConfigError("clip_norm: must be non-negative");
  if (c.synthetic_period == 0 || c.synthetic_period > 8) {
    throw ConfigError("synthetic_period: must lie in [1, 8]");
  }
  if (c.synthetic_steps < 2) throw ConfigError("synthetic_steps: must be at least 2");

  if (c.tt) {
    if (!c.hidden_modes) throw ConfigError("hidden_modes: required when tt = true");
    if (!c.input_modes) throw ConfigError("input_modes: required when tt = true");
    if (c.hidden_modes->order() != c.input_modes->order()) {
      throw ConfigError("input_modes: must have as many modes as hidden_modes");
    }
    const std::uint64_t h = c.hidden_modes->product();
    if (hidden_given && c.hidden != h) {
      throw ConfigError("hidden: " + std::to_string(c.hidden) + " does not match hidden_modes " +
                        c.hidden_modes->to_string());
    }
    c.hidden = h;
    if (c.input_modes->product() != c.projection) {
      throw ConfigError("input_modes: " + c.input_modes->to_string() +
                        " does not multiply to projection " + std::to_string(c.projection));
    }
  } else if (c.hidden == 0) {
    throw ConfigError("hidden: required and positive when tt = false");
  }
  return c;
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) {
  return from_keys(read_key_values(path));
}

TrainConfig TrainConfig::parse(const std::string& text) { return from_keys(parse_key_values(text)); }

std::string TrainConfig::resolved() const {
  std::map<std::string, std::string> kv{
      {"task", task_name(task)},
      {"model", model == CellKind::SRNN ? "srnn" : "gru"},
      {"tt", tt ? "true" : "false"},
      {"hidden", std::to_string(hidden)},
      {"hidden_modes", hidden_modes ? hidden_modes->to_string() : ""},
      {"input_modes", input_modes ? input_modes->to_string() : ""},
      {"rank", std::to_string(rank)},
      {"projection", std::to_string(projection)},
      {"baseline_hidden", std::to_string(baseline_hidden)},
      {"baseline_input", std::to_string(baseline_input)},
      {"lr", fmt_double(adam.learning_rate)},
      {"beta1", fmt_double(adam.beta1)},
      {"beta2", fmt_double(adam.beta2)},
      {"eps", fmt_double(adam.epsilon)},
      {"clip_norm", fmt_double(clip_norm)},
      {"batch_size", std::to_string(batch_size)},
      {"epochs", std::to_string(epochs)},
      {"max_steps", std::to_string(max_steps)},
      {"patience", std::to_string(patience)},
      {"seed", std::to_string(seed)},
      {"data_seed", std::to_string(data_seed)},
      {"perm_seed", std::to_string(perm_seed)},
      {"train_images", train_images},
      {"train_labels", train_labels},
      {"test_images", test_images},
      {"test_labels", test_labels},
      {"train_subset", std::to_string(train_subset)},
      {"valid_subset", std::to_string(valid_subset)},
      {"train_path", train_path},
      {"valid_path", valid_path},
      {"test_path", test_path},
      {"synthetic", synthetic ? "true" : "false"},
      {"synthetic_songs", std::to_string(synthetic_songs)},
      {"synthetic_steps", std::to_string(synthetic_steps)},
      {"synthetic_period", std::to_string(synthetic_period)},
      {"out", out},
  };
  std::string s;
  for (const auto& [k, v] : kv) s += k + " = " + v + "\n";
  return s;
}

std::string TrainConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(resolved())));
  return buf;
}

CellTopology TrainConfig::cell_topology() const {
  if (tt) return CellTopology::tensor_train(model, *input_modes, *hidden_modes, rank);
  return CellTopology::dense(model, projection, hidden);
}

CellTopology TrainConfig::baseline_topology() const {
  return CellTopology::dense(model, baseline_input ? baseline_input : projection,
                             baseline_hidden ? baseline_hidden : hidden);
}

TaskKind TrainConfig::task_kind() const {
  return task == TaskName::PianoRoll ? TaskKind::Prediction : TaskKind::Classification;
}

ModelShape TrainConfig::model_shape() const {
  ModelShape s;
  s.task = task_kind();
  switch (task) {
    case TaskName::MnistRow: s.raw_input = 28; s.outputs = 10; break;
    case TaskName::MnistPixel:
    case TaskName::MnistPermuted: s.raw_input = 1; s.outputs = 10; break;
    case TaskName::PianoRoll: s.raw_input = kNotes; s.outputs = kNotes; break;
  }
  s.cell = cell_topology();
  return s;
}

SweepConfig sweep_from_keys(const std::map<std::string, std::string>& keys) {
  SweepConfig c;
  for (const auto& [k, v] : keys) {
    if (k == "family") {
      if (v == "tt") c.family = LayerFamily::TT;
      else if (v == "dense") c.family = LayerFamily::Dense;
      else throw ConfigError("family: expected tt or dense, got '" + v + "'");
    } else if (k == "sizes") {
      const auto dots = v.find("..");
      if (dots != std::string::npos) {
        const auto lo = parse_uint(k, trim(v.substr(0, dots)));
        const auto hi = parse_uint(k, trim(v.substr(dots + 2)));
        if (lo == 0 || hi < lo) throw ConfigError("sizes: bad range '" + v + "'");
        for (std::uint64_t s = lo; s <= hi; s *= 2) c.sizes.push_back(s);
      } else {
        std::istringstream in(v);
        std::string item;
        while (std::getline(in, item, ',')) c.sizes.push_back(parse_uint(k, trim(item)));
      }
    } else if (k == "rank") {
      c.rank = parse_uint(k, v);
    } else if (k == "mode") {
      c.mode = parse_uint(k, v);
    } else if (k == "order") {
      c.order = parse_uint(k, v);
    } else if (k == "batch") {
      c.batch = parse_uint(k, v);
    } else if (k == "warmup") {
      c.warmup = static_cast<int>(parse_uint(k, v));
    } else if (k == "repetitions") {
      c.repetitions = static_cast<int>(parse_uint(k, v));
    } else if (k == "seed") {
      c.seed = parse_uint(k, v);
    } else {
      throw ConfigError("unknown sweep key '" + k + "'");
    }
  }
  if (c.sizes.empty()) throw ConfigError("sizes: required");
  for (std::size_t s : c.sizes) {
    if (s < 2) throw ConfigError("sizes: every size must be at least 2");
  }
  if (c.rank == 0) throw ConfigError("rank: must be positive");
  if (c.batch == 0) throw ConfigError("batch: must be positive");
  if (c.repetitions < kMinRepetitions)
    throw ConfigError("repetitions: must be at least " + std::to_string(kMinRepetitions));
  if (c.warmup < kMinWarmup) throw ConfigError("warmup: must be at least " + std::to_string(kMinWarmup));
  return c;
}

}  // namespace ttrnn

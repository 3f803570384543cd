#include "spikelink/config.hpp"

#include <fmt/format.h>

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace spikelink {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& what) { throw std::invalid_argument("config: " + what); }

// Reads fields out of one JSON object and rejects keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_ + " must be an object");
  }
  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) fail(fmt::format("unknown key '{}{}'", prefix(), it.key()));
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      fail(fmt::format("bad value for '{}{}'", prefix(), key));
    }
  }

  void get_size(const std::string& key, std::size_t& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
      fail(fmt::format("'{}{}' must be a non-negative integer", prefix(), key));
    out = v.get<std::size_t>();
  }

  // Accepts either `key` (linear) or `key_db`, never both.
  void get_db(const std::string& key, double& out, double (*convert)(double)) {
    const bool lin = has(key);
    const bool db = has(key + "_db");
    if (lin && db) fail(fmt::format("both '{0}{1}' and '{0}{1}_db' given", prefix(), key));
    if (lin) get(key, out);
    if (db) {
      double v = 0;
      get(key + "_db", v);
      out = convert(v);
    }
  }

  void get_range(const std::string& key, Range& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      fail(fmt::format("'{}{}' must be [lo, hi]", prefix(), key));
    out = {v[0].get<double>(), v[1].get<double>()};
  }

  Section sub(const std::string& key) { return Section(j_.at(key), prefix() + key); }

 private:
  [[nodiscard]] std::string prefix() const { return path_.empty() ? std::string() : path_ + "."; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

ReceiveMode mode_from(Section& s, const std::string& key, ReceiveMode def) {
  std::string name(receive_mode_name(def));
  s.get(key, name);
  try {
    return parse_receive_mode(name);
  } catch (const std::invalid_argument&) {
    fail("unknown receive mode '" + name + "'");
  }
}

json range_json(const Range& r) { return json::array({r.lo, r.hi}); }

}  // namespace

std::string_view receive_mode_name(ReceiveMode mode) {
  switch (mode) {
    case ReceiveMode::kSoft: return "soft";
    case ReceiveMode::kHard: return "hard";
    case ReceiveMode::kBypass: return "bypass";
  }
  return "?";
}

ReceiveMode parse_receive_mode(std::string_view name) {
  if (name == "soft") return ReceiveMode::kSoft;
  if (name == "hard") return ReceiveMode::kHard;
  if (name == "bypass") return ReceiveMode::kBypass;
  throw std::invalid_argument(fmt::format("unknown receive mode '{}'", name));
}

void ExperimentConfig::validate() const {
  if (classes < 2 || classes > events::kMaxClasses)
    fail(fmt::format("dataset.classes must be in [2, {}]", events::kMaxClasses));
  if (per_class < 2 || per_class % 2 != 0) fail("dataset.per_class must be even and >= 2");
  dvs.validate();
  model.encoder.validate();
  model.decoder.validate();
  model.surrogate.validate();
  if (model.encoder.height != dvs.crop_height || model.encoder.width != dvs.crop_width)
    fail("encoder input size must match the crop size");
  if (model.encoder.timesteps != dvs.timesteps) fail("encoder timesteps must match dataset timesteps");
  if (model.decoder.classes != classes) fail("decoder classes must match dataset classes");
  if (!(model.lif.beta >= 0.0 && model.lif.beta <= 1.0)) fail("lif.beta must be in [0, 1]");
  if (!(model.lif.threshold > 0.0)) fail("lif.threshold must be positive");
  link.validate();
  if (training.batch_size == 0) fail("training.batch_size must be positive");
  if (!(training.adam.learning_rate > 0.0)) fail("training.learning_rate must be positive");
  if (!(training.adam.beta1 >= 0.0 && training.adam.beta1 < 1.0)) fail("training.beta1 must be in [0, 1)");
  if (!(training.adam.beta2 >= 0.0 && training.adam.beta2 < 1.0)) fail("training.beta2 must be in [0, 1)");
  if (!(training.adam.epsilon > 0.0)) fail("training.epsilon must be positive");
  const auto& rz = training.randomization;
  auto check_range = [](const Range& r, const char* name, double min) {
    if (!(r.lo <= r.hi) || !(r.lo >= min)) fail(fmt::format("training.randomization.{} is not a valid range", name));
  };
  check_range(rz.responsivity, "responsivity", 0.0);
  check_range(rz.amplifier_gain_db, "amplifier_gain_db", 0.0);
  check_range(rz.free_space_loss_db, "free_space_loss_db", 0.0);
  check_range(rz.pointing_variance, "pointing_variance", 0.0);
  if (!(rz.responsivity.lo > 0.0)) fail("training.randomization.responsivity must be positive");
  if (eval.sigma2g_grid.empty()) fail("eval.sigma2G must not be empty");
  for (double v : eval.sigma2g_grid)
    if (!(v >= 0.0)) fail("eval.sigma2G values must be non-negative");
  if (eval.seeds == 0) fail("eval.seeds must be positive");
  for (double v : ber.sigma2g_grid)
    if (!(v >= 0.0)) fail("ber.sigma2G values must be non-negative");
  for (double v : ber.noise_floor_grid)
    if (!(v >= 0.0)) fail("ber.noise_floor values must be non-negative");
  if (ber.bits == 0) fail("ber.bits must be positive");
  energy_table.validate();
}

ExperimentConfig default_config() {
  ExperimentConfig cfg;
  cfg.link.responsivity = 0.8;
  cfg.link.amplifier_gain = channel::db_to_gain(30.0);
  cfg.link.free_space_loss = channel::loss_db_to_factor(14.3);
  cfg.link.pointing_sensitivity = 1e6;
  cfg.link.on_power = 1e-3;
  // Against the 29.7 mA on-level this gives a raw BER near 7% at zero pointing error.
  cfg.link.noise_floor = 1e-4;
  cfg.link.signal_noise_factor = 1e-5;
  cfg.training.adam.learning_rate = 5e-3;
  return cfg;
}

ExperimentConfig config_from_json(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    fail(std::string("malformed JSON: ") + e.what());
  }
  ExperimentConfig cfg = default_config();
  {
    Section s(root, "");
    s.get("seed", cfg.seed);
    if (s.has("dataset")) {
      auto d = s.sub("dataset");
      d.get_size("classes", cfg.classes);
      d.get_size("per_class", cfg.per_class);
      d.get("path", cfg.dataset_path);
      d.get("contrast_threshold", cfg.dvs.contrast_threshold);
      d.get_size("crop_height", cfg.dvs.crop_height);
      d.get_size("crop_width", cfg.dvs.crop_width);
      d.get_size("shift", cfg.dvs.shift);
      d.get_size("timesteps", cfg.dvs.timesteps);
      d.get_size("scene_size", cfg.dvs.scene_size);
      std::string axis = cfg.dvs.axis == events::Axis::kColumns ? "columns" : "rows";
      d.get("axis", axis);
      if (axis == "columns") cfg.dvs.axis = events::Axis::kColumns;
      else if (axis == "rows") cfg.dvs.axis = events::Axis::kRows;
      else fail("dataset.axis must be 'columns' or 'rows'");
    }
    if (s.has("encoder")) {
      auto e = s.sub("encoder");
      e.get_size("patch", cfg.model.encoder.patch);
      e.get_size("dim", cfg.model.encoder.dim);
      e.get_size("layers", cfg.model.encoder.layers);
      e.get_size("slots", cfg.model.encoder.slots);
    }
    if (s.has("decoder")) {
      auto d = s.sub("decoder");
      d.get_size("embed_dim", cfg.model.decoder.embed_dim);
      d.get_size("heads", cfg.model.decoder.heads);
      d.get_size("layers", cfg.model.decoder.layers);
      d.get_size("ffn_dim", cfg.model.decoder.ffn_dim);
    }
    if (s.has("lif")) {
      auto l = s.sub("lif");
      l.get("beta", cfg.model.lif.beta);
      l.get("threshold", cfg.model.lif.threshold);
    }
    if (s.has("surrogate")) {
      auto g = s.sub("surrogate");
      std::string kind = cfg.model.surrogate.kind == ag::SurrogateSpec::Kind::kBoxcar ? "boxcar" : "fast_sigmoid";
      g.get("kind", kind);
      if (kind == "boxcar") cfg.model.surrogate.kind = ag::SurrogateSpec::Kind::kBoxcar;
      else if (kind == "fast_sigmoid") cfg.model.surrogate.kind = ag::SurrogateSpec::Kind::kFastSigmoid;
      else fail("surrogate.kind must be 'boxcar' or 'fast_sigmoid'");
      g.get("width", cfg.model.surrogate.width);
    }
    if (s.has("channel")) {
      auto c = s.sub("channel");
      c.get("responsivity", cfg.link.responsivity);
      c.get_db("amplifier_gain", cfg.link.amplifier_gain, channel::db_to_gain);
      c.get_db("free_space_loss", cfg.link.free_space_loss, channel::loss_db_to_factor);
      c.get("pointing_sensitivity", cfg.link.pointing_sensitivity);
      c.get("pointing_variance", cfg.link.pointing_variance);
      c.get("noise_floor", cfg.link.noise_floor);
      c.get("signal_noise_factor", cfg.link.signal_noise_factor);
      c.get("on_power", cfg.link.on_power);
    }
    if (s.has("training")) {
      auto t = s.sub("training");
      t.get_size("epochs", cfg.training.epochs);
      t.get_size("batch_size", cfg.training.batch_size);
      t.get("learning_rate", cfg.training.adam.learning_rate);
      t.get("beta1", cfg.training.adam.beta1);
      t.get("beta2", cfg.training.adam.beta2);
      t.get("epsilon", cfg.training.adam.epsilon);
      cfg.training.receive_mode = mode_from(t, "receive_mode", cfg.training.receive_mode);
      if (t.has("randomization")) {
        auto r = t.sub("randomization");
        auto& rz = cfg.training.randomization;
        r.get_range("responsivity", rz.responsivity);
        r.get_range("amplifier_gain_db", rz.amplifier_gain_db);
        r.get_range("free_space_loss_db", rz.free_space_loss_db);
        r.get_range("pointing_variance", rz.pointing_variance);
      }
    }
    if (s.has("eval")) {
      auto e = s.sub("eval");
      e.get("sigma2G", cfg.eval.sigma2g_grid);
      e.get_size("seeds", cfg.eval.seeds);
      cfg.eval.receive_mode = mode_from(e, "receive_mode", cfg.eval.receive_mode);
    }
    if (s.has("ber")) {
      auto b = s.sub("ber");
      b.get("sigma2G", cfg.ber.sigma2g_grid);
      b.get("noise_floor", cfg.ber.noise_floor_grid);
      b.get_size("bits", cfg.ber.bits);
    }
    if (s.has("energy")) {
      auto e = s.sub("energy");
      e.get("accumulate_pj", cfg.energy_table.accumulate_pj);
      e.get("mac_pj", cfg.energy_table.mac_pj);
      e.get("comparison_pj", cfg.energy_table.comparison_pj);
      e.get("random_draw_pj", cfg.energy_table.random_draw_pj);
      e.get("memory_read_pj", cfg.energy_table.memory_read_pj);
      e.get("memory_write_pj", cfg.energy_table.memory_write_pj);
    }
  }
  cfg.model.encoder.height = cfg.dvs.crop_height;
  cfg.model.encoder.width = cfg.dvs.crop_width;
  cfg.model.encoder.timesteps = cfg.dvs.timesteps;
  cfg.model.decoder.classes = cfg.classes;
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["dataset"] = {{"classes", cfg.classes},
                  {"per_class", cfg.per_class},
                  {"path", cfg.dataset_path},
                  {"contrast_threshold", cfg.dvs.contrast_threshold},
                  {"crop_height", cfg.dvs.crop_height},
                  {"crop_width", cfg.dvs.crop_width},
                  {"shift", cfg.dvs.shift},
                  {"timesteps", cfg.dvs.timesteps},
                  {"scene_size", cfg.dvs.scene_size},
                  {"axis", cfg.dvs.axis == events::Axis::kColumns ? "columns" : "rows"}};
  j["encoder"] = {{"patch", cfg.model.encoder.patch},
                  {"dim", cfg.model.encoder.dim},
                  {"layers", cfg.model.encoder.layers},
                  {"slots", cfg.model.encoder.slots}};
  j["decoder"] = {{"embed_dim", cfg.model.decoder.embed_dim},
                  {"heads", cfg.model.decoder.heads},
                  {"layers", cfg.model.decoder.layers},
                  {"ffn_dim", cfg.model.decoder.ffn_dim}};
  j["lif"] = {{"beta", cfg.model.lif.beta}, {"threshold", cfg.model.lif.threshold}};
  j["surrogate"] = {
      {"kind", cfg.model.surrogate.kind == ag::SurrogateSpec::Kind::kBoxcar ? "boxcar" : "fast_sigmoid"},
      {"width", cfg.model.surrogate.width}};
  j["channel"] = {{"responsivity", cfg.link.responsivity},
                  {"amplifier_gain", cfg.link.amplifier_gain},
                  {"free_space_loss", cfg.link.free_space_loss},
                  {"pointing_sensitivity", cfg.link.pointing_sensitivity},
                  {"pointing_variance", cfg.link.pointing_variance},
                  {"noise_floor", cfg.link.noise_floor},
                  {"signal_noise_factor", cfg.link.signal_noise_factor},
                  {"on_power", cfg.link.on_power}};
  const auto& rz = cfg.training.randomization;
  j["training"] = {{"epochs", cfg.training.epochs},
                   {"batch_size", cfg.training.batch_size},
                   {"learning_rate", cfg.training.adam.learning_rate},
                   {"beta1", cfg.training.adam.beta1},
                   {"beta2", cfg.training.adam.beta2},
                   {"epsilon", cfg.training.adam.epsilon},
                   {"receive_mode", receive_mode_name(cfg.training.receive_mode)},
                   {"randomization",
                    {{"responsivity", range_json(rz.responsivity)},
                     {"amplifier_gain_db", range_json(rz.amplifier_gain_db)},
                     {"free_space_loss_db", range_json(rz.free_space_loss_db)},
                     {"pointing_variance", range_json(rz.pointing_variance)}}}};
  j["eval"] = {{"sigma2G", cfg.eval.sigma2g_grid},
               {"seeds", cfg.eval.seeds},
               {"receive_mode", receive_mode_name(cfg.eval.receive_mode)}};
  j["ber"] = {{"sigma2G", cfg.ber.sigma2g_grid}, {"noise_floor", cfg.ber.noise_floor_grid}, {"bits", cfg.ber.bits}};
  const auto& e = cfg.energy_table;
  j["energy"] = {{"accumulate_pj", e.accumulate_pj},       {"mac_pj", e.mac_pj},
                 {"comparison_pj", e.comparison_pj},       {"random_draw_pj", e.random_draw_pj},
                 {"memory_read_pj", e.memory_read_pj},     {"memory_write_pj", e.memory_write_pj}};
  // nlohmann objects are std::map-backed, so dump() is already key-sorted.
  return j.dump(2);
}

std::string config_hash(const ExperimentConfig& cfg) {
  return fmt::format("{:016x}", fnv1a(config_to_json(cfg)));
}

}  // namespace spikelink

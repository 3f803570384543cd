#include "spikelink/harness.hpp"

#include <fmt/format.h>
#include <fmt/os.h>

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "spikelink/channel.hpp"
#include "spikelink/checkpoint.hpp"

namespace spikelink::harness {

using nlohmann::json;

namespace {

constexpr const char* kDatasetFormat = "spikelink-dataset-v1";
constexpr const char* kRunFormat = "spikelink-run-v1";

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(fmt::format("{}: malformed JSON ({})", path.string(), e.what()));
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

json dvs_json(const events::DvsConfig& d) {
  return {{"contrast_threshold", d.contrast_threshold},
          {"crop_height", d.crop_height},
          {"crop_width", d.crop_width},
          {"shift", d.shift},
          {"axis", d.axis == events::Axis::kColumns ? "columns" : "rows"},
          {"timesteps", d.timesteps},
          {"scene_size", d.scene_size}};
}

std::uint64_t dataset_seed(const ExperimentConfig& cfg) { return Rng(cfg.seed).split("dataset").seed(); }

json energy_json(const energy::EnergyReport& r) {
  const double k = r.inferences ? static_cast<double>(r.inferences) : 1.0;
  const double spiking = (r.encoder.joules + r.decoder.joules) / k;
  const double dense = (r.encoder_dense.joules + r.decoder_dense.joules) / k;
  return {{"inferences", r.inferences},
          {"joules_per_inference",
           {{"encoder", r.encoder.joules / k},
            {"decoder", r.decoder.joules / k},
            {"total", spiking},
            {"encoder_dense", r.encoder_dense.joules / k},
            {"decoder_dense", r.decoder_dense.joules / k},
            {"total_dense", dense}}},
          {"dense_over_spiking", spiking > 0 ? dense / spiking : 0.0},
          {"spike_rate", {{"encoder", r.encoder.mean_spike_rate}, {"decoder", r.decoder.mean_spike_rate}}},
          {"table_pj",
           {{"accumulate", r.table.accumulate_pj},
            {"mac", r.table.mac_pj},
            {"comparison", r.table.comparison_pj},
            {"random_draw", r.table.random_draw_pj},
            {"memory_read", r.table.memory_read_pj},
            {"memory_write", r.table.memory_write_pj}}}};
}

std::string energy_csv(const energy::EnergyReport& r) {
  const double k = r.inferences ? static_cast<double>(r.inferences) : 1.0;
  std::string out = "stage,op_category,count_per_inference,pj_per_op,total_pj_per_inference\n";
  const auto& t = r.table;
  auto rows = [&](const char* stage, const energy::OpCounts& c) {
    const std::pair<const char*, std::pair<std::uint64_t, double>> items[] = {
        {"accumulate", {c.accumulates, t.accumulate_pj}},   {"mac", {c.macs, t.mac_pj}},
        {"comparison", {c.comparisons, t.comparison_pj}},   {"random_draw", {c.random_draws, t.random_draw_pj}},
        {"memory_read", {c.memory_reads, t.memory_read_pj}}, {"memory_write", {c.memory_writes, t.memory_write_pj}}};
    for (const auto& [name, v] : items) {
      const double count = static_cast<double>(v.first) / k;
      out += fmt::format("{},{},{},{},{}\n", stage, name, count, v.second, count * v.second);
    }
  };
  rows("encoder", r.encoder.counts);
  rows("decoder", r.decoder.counts);
  rows("encoder_dense", r.encoder_dense.counts);
  rows("decoder_dense", r.decoder_dense.counts);
  return out;
}

std::string sweep_csv(const std::vector<SweepPoint>& points) {
  std::string out = "sigma2G,seed,mode,accuracy,n_samples\n";
  for (const auto& p : points)
    out += fmt::format("{},{},{},{},{}\n", p.sigma2g, p.seed, receive_mode_name(p.mode), p.accuracy, p.samples);
  return out;
}

json sweep_summary(const std::vector<SweepPoint>& points) {
  std::map<double, std::vector<double>> by_point;
  for (const auto& p : points) by_point[p.sigma2g].push_back(p.accuracy);
  json arr = json::array();
  for (const auto& [g, accs] : by_point) {
    double mean = 0.0;
    for (double a : accs) mean += a;
    mean /= static_cast<double>(accs.size());
    double var = 0.0;
    for (double a : accs) var += (a - mean) * (a - mean);
    const double sd = accs.size() > 1 ? std::sqrt(var / static_cast<double>(accs.size() - 1)) : 0.0;
    arr.push_back({{"sigma2G", g}, {"mean", mean}, {"std", sd}, {"per_seed", accs}});
  }
  return arr;
}

}  // namespace

// ---------------------------------------------------------------- dataset

void save_dataset(const events::Dataset& data, const fs::path& dir) {
  fs::create_directories(dir);
  json samples = json::array();
  for (const auto& s : data.samples) {
    const std::string file = fmt::format("seq_{:05d}.bin", s.index);
    std::ofstream out(dir / file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / file).string());
    out.write(reinterpret_cast<const char*>(s.events.data.data()), static_cast<std::streamsize>(s.events.data.size()));
    samples.push_back({{"file", file},
                       {"index", s.index},
                       {"label", s.label},
                       {"split", s.split == events::Split::kTrain ? "train" : "eval"},
                       {"seed", s.seed},
                       {"shape", {s.events.steps, s.events.height, s.events.width}}});
  }
  json index = {{"format", kDatasetFormat}, {"dtype", "int8"},          {"classes", data.classes},
                {"per_class", data.per_class}, {"seed", data.seed},       {"dvs", dvs_json(data.dvs)},
                {"samples", samples}};
  write_text(dir / "index.json", index.dump(2) + "\n");
}

events::Dataset load_dataset(const fs::path& dir) {
  const json index = read_json(dir / "index.json");
  try {
    if (index.at("format").get<std::string>() != kDatasetFormat)
      throw std::runtime_error("unsupported dataset format in " + (dir / "index.json").string());
    events::Dataset data;
    data.classes = index.at("classes").get<std::size_t>();
    data.per_class = index.at("per_class").get<std::size_t>();
    data.seed = index.at("seed").get<std::uint64_t>();
    const auto& d = index.at("dvs");
    data.dvs.contrast_threshold = d.at("contrast_threshold").get<double>();
    data.dvs.crop_height = d.at("crop_height").get<std::size_t>();
    data.dvs.crop_width = d.at("crop_width").get<std::size_t>();
    data.dvs.shift = d.at("shift").get<std::size_t>();
    data.dvs.axis = d.at("axis").get<std::string>() == "rows" ? events::Axis::kRows : events::Axis::kColumns;
    data.dvs.timesteps = d.at("timesteps").get<std::size_t>();
    data.dvs.scene_size = d.at("scene_size").get<std::size_t>();
    for (const auto& j : index.at("samples")) {
      events::Sample s;
      s.index = j.at("index").get<std::size_t>();
      s.label = j.at("label").get<std::size_t>();
      s.split = j.at("split").get<std::string>() == "train" ? events::Split::kTrain : events::Split::kEval;
      s.seed = j.at("seed").get<std::uint64_t>();
      const auto shape = j.at("shape").get<std::vector<std::size_t>>();
      if (shape.size() != 3) throw std::runtime_error("sample shape must be [T, H, W]");
      s.events.steps = shape[0];
      s.events.height = shape[1];
      s.events.width = shape[2];
      const fs::path file = dir / j.at("file").get<std::string>();
      const std::size_t n = shape[0] * shape[1] * shape[2];
      if (!fs::exists(file) || fs::file_size(file) != n)
        throw std::runtime_error(fmt::format("{}: missing or not {} bytes", file.string(), n));
      s.events.data.resize(n);
      std::ifstream in(file, std::ios::binary);
      in.read(reinterpret_cast<char*>(s.events.data.data()), static_cast<std::streamsize>(n));
      for (auto v : s.events.data)
        if (v < -1 || v > 1) throw std::runtime_error(file.string() + ": event values must be in {-1, 0, 1}");
      data.samples.push_back(std::move(s));
    }
    return data;
  } catch (const json::exception& e) {
    throw std::runtime_error(fmt::format("{}: bad index ({})", (dir / "index.json").string(), e.what()));
  }
}

events::Dataset load_dataset_for(const ExperimentConfig& cfg, const fs::path& dir) {
  if (!fs::exists(dir / "index.json"))
    throw std::runtime_error(fmt::format("no dataset at {}; run generate-dataset first", dir.string()));
  events::Dataset data = load_dataset(dir);
  if (data.classes != cfg.classes || data.per_class != cfg.per_class || data.seed != dataset_seed(cfg) ||
      dvs_json(data.dvs) != dvs_json(cfg.dvs)) {
    throw std::runtime_error(fmt::format("dataset at {} was generated with different settings", dir.string()));
  }
  return data;
}

// ---------------------------------------------------------------- model

void save_model(const snn::ModelWeights& weights, const ExperimentConfig& cfg, const fs::path& manifest,
                const std::string& extra_metadata_json) {
  std::vector<NamedArray> arrays;
  for (const auto& [name, t] : weights.named_parameters())
    arrays.push_back({name, t.shape(), std::vector<double>(t.values().begin(), t.values().end())});
  snn::ModelWeights copy = weights.clone();
  for (const auto& [name, buf] : copy.named_buffers()) arrays.push_back({name, {buf->size()}, *buf});
  json meta = json::parse(extra_metadata_json);
  meta["config_hash"] = config_hash(cfg);
  meta["config"] = json::parse(config_to_json(cfg));
  if (manifest.has_parent_path()) fs::create_directories(manifest.parent_path());
  save_checkpoint(manifest, arrays, meta.dump());
}

snn::ModelWeights load_model(const fs::path& manifest, const ExperimentConfig& cfg) {
  const LoadedCheckpoint ck = load_checkpoint(manifest);
  std::map<std::string, const NamedArray*> by_name;
  for (const auto& a : ck.arrays) by_name[a.name] = &a;
  snn::ModelWeights w = snn::zero_weights(cfg.model.encoder, cfg.model.decoder);
  auto take = [&](const std::string& name, std::size_t size) -> const NamedArray& {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw std::runtime_error(fmt::format("{}: missing array '{}'", manifest.string(), name));
    if (it->second->values.size() != size)
      throw std::runtime_error(fmt::format("{}: array '{}' has {} values, model expects {}", manifest.string(), name,
                                           it->second->values.size(), size));
    return *it->second;
  };
  for (auto& [name, t] : w.named_parameters()) {
    const auto& a = take(name, t.size());
    if (a.shape != t.shape())
      throw std::runtime_error(fmt::format("{}: array '{}' has shape {}, model expects {}", manifest.string(), name,
                                           ag::shape_string(a.shape), ag::shape_string(t.shape())));
    auto dst = t.mutable_values();
    std::copy(a.values.begin(), a.values.end(), dst.begin());
  }
  for (auto& [name, buf] : w.named_buffers()) *buf = take(name, buf->size()).values;
  return w;
}

// ---------------------------------------------------------------- experiments

std::vector<SweepPoint> eval_sweep(snn::ModelWeights& weights, const ExperimentConfig& cfg,
                                   const events::Dataset& data, ReceiveMode mode) {
  const auto eval_set = data.split(events::Split::kEval);
  const Rng root = Rng(cfg.seed).split("eval");
  std::vector<SweepPoint> points;
  for (std::size_t s = 0; s < cfg.eval.seeds; ++s) {
    const Rng seed_root = root.split(static_cast<std::uint64_t>(s));
    for (std::size_t g = 0; g < cfg.eval.sigma2g_grid.size(); ++g) {
      pipeline::LinkSetup link{cfg.link, mode};
      link.params.pointing_variance = cfg.eval.sigma2g_grid[g] / cfg.link.pointing_sensitivity;
      const auto r = pipeline::evaluate(weights, cfg.model, eval_set, link,
                                        seed_root.split("channel").split(static_cast<std::uint64_t>(g)),
                                        seed_root.split("attention"), cfg.training.batch_size);
      points.push_back({cfg.eval.sigma2g_grid[g], s, mode, r.accuracy(), r.total});
    }
  }
  std::stable_sort(points.begin(), points.end(), [](const SweepPoint& a, const SweepPoint& b) {
    return a.sigma2g != b.sigma2g ? a.sigma2g < b.sigma2g : a.seed < b.seed;
  });
  return points;
}

energy::EnergyReport measure_energy(snn::ModelWeights& weights, const ExperimentConfig& cfg,
                                    const events::Dataset& data) {
  const auto eval_set = data.split(events::Split::kEval);
  const Rng root = Rng(cfg.seed).split("energy");
  snn::ForwardRecorder recorder;
  pipeline::evaluate(weights, cfg.model, eval_set, {cfg.link, cfg.eval.receive_mode}, root.split("channel"),
                     root.split("attention"), cfg.training.batch_size, &recorder);
  return energy::build_report(recorder, cfg.model.encoder, cfg.model.decoder, cfg.energy_table);
}

std::vector<BerPoint> ber_sweep(const ExperimentConfig& cfg) {
  const Rng root = Rng(cfg.seed).split("ber");
  std::vector<BerPoint> out;
  const double g = cfg.link.pointing_sensitivity;
  for (std::size_t i = 0; i < cfg.ber.sigma2g_grid.size(); ++i) {
    channel::LinkParams p = cfg.link;
    p.pointing_variance = cfg.ber.sigma2g_grid[i] / g;
    Rng rng = root.split("pointing").split(static_cast<std::uint64_t>(i));
    out.push_back({"pointing", cfg.ber.sigma2g_grid[i], p.noise_floor, cfg.ber.bits,
                   channel::count_bit_errors(p, cfg.ber.bits, rng)});
  }
  for (std::size_t i = 0; i < cfg.ber.noise_floor_grid.size(); ++i) {
    channel::LinkParams p = cfg.link;
    p.noise_floor = cfg.ber.noise_floor_grid[i];
    Rng rng = root.split("noise").split(static_cast<std::uint64_t>(i));
    out.push_back({"noise", p.pointing_variance * g, p.noise_floor, cfg.ber.bits,
                   channel::count_bit_errors(p, cfg.ber.bits, rng)});
  }
  return out;
}

// ---------------------------------------------------------------- commands

CommandResult generate_dataset(const ExperimentConfig& cfg, const fs::path& out_dir) {
  const events::Dataset data = events::make_dataset(cfg.classes, cfg.per_class, cfg.dvs, dataset_seed(cfg));
  save_dataset(data, out_dir);
  CommandResult r;
  r.files.push_back(out_dir / "index.json");
  std::size_t events_total = 0;
  for (const auto& s : data.samples)
    for (auto v : s.events.data) events_total += v != 0;
  r.summary_json = json{{"command", "generate-dataset"},
                        {"dir", out_dir.string()},
                        {"samples", data.samples.size()},
                        {"events", events_total},
                        {"config_hash", config_hash(cfg)}}
                       .dump();
  return r;
}

CommandResult train(const ExperimentConfig& cfg, const fs::path& out_dir) {
  const events::Dataset data = load_dataset_for(cfg, cfg.dataset_path);
  fs::create_directories(out_dir);
  std::string log_csv = "epoch,loss,train_accuracy,eval_accuracy\n";
  auto result = pipeline::train(cfg, data, [&](const pipeline::EpochLog& e) {
    log_csv += fmt::format("{},{},{},{}\n", e.epoch, e.loss, e.train_accuracy, e.eval_accuracy);
  });

  CommandResult r;
  const json epochs_meta = {{"best_epoch", result.best_epoch}, {"best_eval_accuracy", result.best_eval_accuracy}};
  save_model(result.best, cfg, out_dir / "model.json", epochs_meta.dump());
  write_text(out_dir / "train_log.csv", log_csv);

  const auto points = eval_sweep(result.best, cfg, data, cfg.eval.receive_mode);
  write_text(out_dir / "eval_sweep.csv", sweep_csv(points));
  const auto report = measure_energy(result.best, cfg, data);
  write_text(out_dir / "energy.csv", energy_csv(report));
  const json ej = energy_json(report);
  write_text(out_dir / "energy.json", ej.dump(2) + "\n");

  json epochs = json::array();
  for (const auto& e : result.log)
    epochs.push_back({{"epoch", e.epoch},
                      {"loss", e.loss},
                      {"train_accuracy", e.train_accuracy},
                      {"eval_accuracy", e.eval_accuracy}});
  const json record = {{"format", kRunFormat},
                       {"config_hash", config_hash(cfg)},
                       {"config", json::parse(config_to_json(cfg))},
                       {"seed", cfg.seed},
                       {"parameters", pipeline::parameter_count(result.best)},
                       {"best_epoch", result.best_epoch},
                       {"epochs", epochs},
                       {"eval_sweep", sweep_summary(points)},
                       {"energy", ej}};
  write_text(out_dir / "run_record.json", record.dump(2) + "\n");

  for (const char* f : {"model.json", "model.bin", "train_log.csv", "eval_sweep.csv", "energy.csv", "energy.json",
                        "run_record.json"})
    r.files.push_back(out_dir / f);
  r.summary_json = json{{"command", "train"},
                        {"out", out_dir.string()},
                        {"best_epoch", result.best_epoch},
                        {"best_eval_accuracy", result.best_eval_accuracy},
                        {"config_hash", config_hash(cfg)}}
                       .dump();
  return r;
}

CommandResult eval_sweep(const ExperimentConfig& cfg, const fs::path& checkpoint, const fs::path& out_dir) {
  const events::Dataset data = load_dataset_for(cfg, cfg.dataset_path);
  snn::ModelWeights w = load_model(checkpoint, cfg);
  fs::create_directories(out_dir);
  const auto points = eval_sweep(w, cfg, data, cfg.eval.receive_mode);
  write_text(out_dir / "eval_sweep.csv", sweep_csv(points));
  const json summary = sweep_summary(points);
  write_text(out_dir / "eval_summary.json", summary.dump(2) + "\n");
  CommandResult r;
  r.files = {out_dir / "eval_sweep.csv", out_dir / "eval_summary.json"};
  r.summary_json = json{{"command", "eval-sweep"}, {"points", summary}}.dump();
  return r;
}

CommandResult ber(const ExperimentConfig& cfg, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  const auto points = ber_sweep(cfg);
  std::string csv = "sweep,sigma2G,noise_floor,n_bits,errors,ber\n";
  for (const auto& p : points)
    csv += fmt::format("{},{},{},{},{},{}\n", p.sweep, p.sigma2g, p.noise_floor, p.bits, p.errors, p.ber());
  write_text(out_dir / "ber.csv", csv);
  CommandResult r;
  r.files = {out_dir / "ber.csv"};
  r.summary_json = json{{"command", "ber"}, {"rows", points.size()}, {"file", (out_dir / "ber.csv").string()}}.dump();
  return r;
}

CommandResult energy(const ExperimentConfig& cfg, const fs::path& checkpoint, const fs::path& out_dir) {
  const events::Dataset data = load_dataset_for(cfg, cfg.dataset_path);
  snn::ModelWeights w = load_model(checkpoint, cfg);
  fs::create_directories(out_dir);
  const auto report = measure_energy(w, cfg, data);
  write_text(out_dir / "energy.csv", energy_csv(report));
  const json ej = energy_json(report);
  write_text(out_dir / "energy.json", ej.dump(2) + "\n");
  CommandResult r;
  r.files = {out_dir / "energy.csv", out_dir / "energy.json"};
  r.summary_json = json{{"command", "energy"},
                        {"spiking", energy::format_joules(ej["joules_per_inference"]["total"].get<double>())},
                        {"dense", energy::format_joules(ej["joules_per_inference"]["total_dense"].get<double>())},
                        {"dense_over_spiking", ej["dense_over_spiking"]}}
                       .dump();
  return r;
}

}  // namespace spikelink::harness

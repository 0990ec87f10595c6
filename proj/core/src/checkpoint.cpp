#include "dgr/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "dgr/util.hpp"

namespace dgr {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

void put_u32(std::string& out, std::uint32_t x) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((x >> (8 * i)) & 0xff));
}
std::uint32_t get_u32(const std::string& s, std::size_t& pos) {
  if (pos + 4 > s.size()) throw IoError("checkpoint truncated");
  std::uint32_t x = 0;
  for (int i = 0; i < 4; ++i) x |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[pos++])) << (8 * i);
  return x;
}

}  // namespace

void save_checkpoint(const ModelParams& mp, const TrainConfig& cfg, const std::string& path) {
  json manifest;
  manifest["format"] = "dgr-checkpoint";
  manifest["version"] = kFormatVersion;
  json tasks = json::array();
  for (TaskId t : mp.tasks) tasks.push_back(task_name(t));
  manifest["tasks"] = tasks;
  manifest["hidden"] = mp.hidden;
  manifest["head_count"] = mp.head_count;
  manifest["hard_aggregation"] = mp.hard_aggregation;
  manifest["variant"] = mp.variant;
  manifest["seed"] = cfg.seed;
  manifest["hyperparameters"] = {
      {"steps", cfg.steps},         {"lr", cfg.lr},
      {"batch", cfg.batch},         {"tau_start", cfg.tau_start},
      {"tau_end", cfg.tau_end},     {"tau_schedule", "geometric"},
      {"hints", cfg.hints},         {"nohint_k", cfg.nohint_k},
      {"train_n_min", cfg.train_n_min}, {"train_n_max", cfg.train_n_max},
      {"fixed_n", cfg.fixed_n},     {"er_p", cfg.er_p},
      {"loss_weights", {1, 1, 1, 1}}, {"variant", cfg.variant},
  };
  json vocab;
  for (TaskId t : mp.tasks) {
    auto [kn, ke] = model_vocab_sizes(mp, t);
    vocab[task_name(t)] = {{"node_states", kn}, {"edge_states", ke}};
  }
  manifest["vocab"] = vocab;

  std::string body = manifest.dump();
  body.push_back('\n');
  put_u32(body, static_cast<std::uint32_t>(mp.blocks.size()));
  for (const auto& b : mp.blocks) {
    put_u32(body, static_cast<std::uint32_t>(b.name.size()));
    body += b.name;
    put_u32(body, static_cast<std::uint32_t>(b.rows));
    put_u32(body, static_cast<std::uint32_t>(b.cols));
    const char* raw = reinterpret_cast<const char*>(b.v.data());
    body.append(raw, raw + b.v.size() * sizeof(float));
  }
  put_u32(body, crc32(body.data(), body.size()));
  write_text_file(path, body);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::string body = read_text_file(path);
  if (body.size() < 4) throw IoError("checkpoint truncated: " + path);
  std::uint32_t stored = 0;
  {
    std::size_t pos = body.size() - 4;
    stored = get_u32(body, pos);
  }
  if (crc32(body.data(), body.size() - 4) != stored)
    throw IoError("checkpoint checksum failure: " + path);
  auto nl = body.find('\n');
  if (nl == std::string::npos) throw IoError("checkpoint manifest missing: " + path);
  json manifest = json::parse(body.substr(0, nl), nullptr, false);
  if (manifest.is_discarded() || manifest.value("format", "") != "dgr-checkpoint")
    throw IoError("not a dgr checkpoint: " + path);
  if (manifest.at("version").get<int>() != kFormatVersion)
    throw IoError("checkpoint version mismatch in " + path + ": have " +
                  std::to_string(manifest.at("version").get<int>()) + ", expected " +
                  std::to_string(kFormatVersion));

  Checkpoint ck;
  ck.params.hidden = manifest.at("hidden").get<int>();
  ck.params.head_count = manifest.at("head_count").get<int>();
  ck.params.hard_aggregation = manifest.value("hard_aggregation", true);
  ck.params.variant = manifest.value("variant", "standard");
  for (const auto& t : manifest.at("tasks"))
    ck.params.tasks.push_back(parse_task_or_throw(t.get<std::string>()));
  const auto& hp = manifest.at("hyperparameters");
  ck.config.steps = hp.value("steps", 1000);
  ck.config.lr = hp.value("lr", 0.001);
  ck.config.batch = hp.value("batch", 32);
  ck.config.tau_start = hp.value("tau_start", 3.0);
  ck.config.tau_end = hp.value("tau_end", 0.01);
  ck.config.hints = hp.value("hints", true);
  ck.config.nohint_k = hp.value("nohint_k", 0);
  ck.config.train_n_min = hp.value("train_n_min", 4);
  ck.config.train_n_max = hp.value("train_n_max", 16);
  ck.config.fixed_n = hp.value("fixed_n", 0);
  ck.config.er_p = hp.value("er_p", 0.0);
  ck.config.variant = hp.value("variant", "standard");
  ck.config.seed = manifest.value("seed", std::uint64_t{0});
  ck.config.tasks = ck.params.tasks;
  ck.config.hidden = ck.params.hidden;
  ck.config.head_count = ck.params.head_count;

  std::size_t pos = nl + 1;
  std::uint32_t count = get_u32(body, pos);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::uint32_t name_len = get_u32(body, pos);
    if (pos + name_len > body.size()) throw IoError("checkpoint truncated: " + path);
    std::string name = body.substr(pos, name_len);
    pos += name_len;
    int rows = static_cast<int>(get_u32(body, pos));
    int cols = static_cast<int>(get_u32(body, pos));
    auto& blk = ck.params.add(name, rows, cols);
    std::size_t bytes = blk.v.size() * sizeof(float);
    if (pos + bytes > body.size()) throw IoError("checkpoint truncated: " + path);
    std::memcpy(blk.v.data(), body.data() + pos, bytes);
    pos += bytes;
  }
  if (pos + 4 != body.size()) throw IoError("checkpoint has trailing bytes: " + path);
  return ck;
}

ModelParams load_checkpoint_for_task(const std::string& path, TaskId task) {
  Checkpoint ck = load_checkpoint(path);
  if (!ck.params.covers(task))
    throw std::invalid_argument("checkpoint " + path + " was trained for a different task (" +
                                "wanted " + task_name(task) + ")");
  return std::move(ck.params);
}

}  // namespace dgr

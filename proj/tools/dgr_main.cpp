// Command-line front end: dataset generation, training, evaluation,
// certification, ablation studies and trace dumps.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "dgr/ablation.hpp"
#include "dgr/certifier.hpp"
#include "dgr/checkpoint.hpp"
#include "dgr/eval.hpp"
#include "dgr/graph.hpp"
#include "dgr/training.hpp"
#include "dgr/util.hpp"

using namespace dgr;

namespace {

std::vector<int> parse_int_list(const std::string& csv) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(std::stoi(item));
  return out;
}

std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(std::stod(item));
  return out;
}

// Plain key=value configuration file; values override command-line flags.
std::map<std::string, std::string> read_config(const std::string& path) {
  std::map<std::string, std::string> kv;
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) + " is not key=value");
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
      return s;
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

void apply_config(const std::map<std::string, std::string>& kv, TrainConfig& cfg,
                  std::string& task_str, std::string& out_path) {
  for (const auto& [k, v] : kv) {
    if (k == "task") task_str = v;
    else if (k == "steps") cfg.steps = std::stoi(v);
    else if (k == "lr") cfg.lr = std::stod(v);
    else if (k == "batch") cfg.batch = std::stoi(v);
    else if (k == "seed") cfg.seed = std::stoull(v);
    else if (k == "tau_start") cfg.tau_start = std::stod(v);
    else if (k == "tau_end") cfg.tau_end = std::stod(v);
    else if (k == "hidden") cfg.hidden = std::stoi(v);
    else if (k == "fixed_n") cfg.fixed_n = std::stoi(v);
    else if (k == "er_p") cfg.er_p = std::stod(v);
    else if (k == "variant") cfg.variant = v;
    else if (k == "nohint_k") cfg.nohint_k = std::stoi(v);
    else if (k == "hints") cfg.hints = v == "true" || v == "1";
    else if (k == "out") out_path = v;
    else throw std::invalid_argument("unknown config key: " + k);
  }
}

int cmd_gen_data(const std::string& task_str, const std::string& sizes_csv, int n_graphs,
                 std::uint64_t seed, const std::string& out_dir) {
  TaskId task = parse_task_or_throw(task_str);
  for (int size : parse_int_list(sizes_csv)) {
    DatasetSplit split;
    split.task = task;
    split.seed = seed;
    split.size_label = size;
    for (int i = 0; i < n_graphs; ++i)
      split.graphs.push_back(make_task_instance(task, size, mix_seed(seed, size * 10000 + i)));
    std::string path = out_dir + "/" + task_str + "_" + std::to_string(size) + ".jsonl";
    write_dataset(split, path);
    std::cout << "wrote " << path << " (" << n_graphs << " graphs)\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"discrete graph reasoner laboratory"};
  app.require_subcommand(1);

  std::string task_str = "bfs", out_path, checkpoint_path, config_path, sizes_csv = "16,80,160";
  std::string metrics_path, out_dir = ".";
  std::uint64_t seed = 0;
  int n_graphs = 100, steps = 0, trace_n = 10;
  double min_graph_level = -1.0;
  bool multitask = false, no_hints = false;
  int nohint_k = 4, fixed_n = 0, hidden = 64;
  double er_p = 0.0;
  std::string variant = "standard";

  auto* gen = app.add_subcommand("gen-data", "generate dataset files");
  gen->add_option("--task", task_str);
  gen->add_option("--sizes", sizes_csv);
  gen->add_option("--n-graphs", n_graphs);
  gen->add_option("--seed", seed);
  gen->add_option("--out-dir", out_dir);

  auto* train = app.add_subcommand("train", "train a model");
  train->add_option("--task", task_str, "task id, or 'all' for multitask");
  train->add_option("--seed", seed);
  train->add_option("--steps", steps, "optimization steps (default 1000 / 10000 multitask)");
  train->add_option("--out", out_path)->required();
  train->add_option("--config", config_path, "key=value file overriding flags");
  train->add_option("--metrics-out", metrics_path);
  train->add_flag("--no-hints", no_hints);
  train->add_option("--k", nohint_k, "latent node states for no-hint training");
  train->add_option("--fixed-n", fixed_n);
  train->add_option("--er-p", er_p);
  train->add_option("--hidden", hidden);
  train->add_option("--variant", variant, "standard | soft_attention | ndsu");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--checkpoint", checkpoint_path)->required();
  eval->add_option("--task", task_str);
  eval->add_option("--sizes", sizes_csv);
  eval->add_option("--n-graphs", n_graphs);
  eval->add_option("--seed", seed);
  eval->add_option("--out", out_path, "write line-delimited records here");
  eval->add_option("--min-graph-level", min_graph_level,
                   "exit 1 when any size falls below this graph-level score");

  auto* cert = app.add_subcommand("certify", "extract tables and verify the transition spec");
  cert->add_option("--checkpoint", checkpoint_path)->required();
  cert->add_option("--task", task_str);
  cert->add_option("--out", out_path, "write the full report here");

  auto* ablate = app.add_subcommand("ablate", "ablation studies");
  ablate->require_subcommand(1);
  auto* ab_soft = ablate->add_subcommand("soft-attention");
  ab_soft->add_option("--seed", seed);
  ab_soft->add_option("--out", out_path);
  auto* ab_ndsu = ablate->add_subcommand("scalar-mlp");
  ab_ndsu->add_option("--task", task_str);
  ab_ndsu->add_option("--seed", seed);
  ab_ndsu->add_option("--out", out_path);
  auto* ab_min = ablate->add_subcommand("min-size");
  ab_min->add_option("--task", task_str);
  ab_min->add_option("--sizes", sizes_csv);
  ab_min->add_option("--seed", seed);
  ab_min->add_option("--out", out_path);
  auto* ab_ext = ablate->add_subcommand("extended-ops");
  ab_ext->add_option("--seed", seed);
  ab_ext->add_option("--out", out_path);

  auto* trace = app.add_subcommand("dump-trace", "write a model rollout trace");
  trace->add_option("--checkpoint", checkpoint_path)->required();
  trace->add_option("--task", task_str);
  trace->add_option("--n", trace_n);
  trace->add_option("--seed", seed);
  trace->add_option("--out", out_path)->required();

  auto* nhs = app.add_subcommand("no-hint-search", "hyperparameter search for no-hint training");
  std::string ks_csv = "2,3,4,5,6", tau_csv = "0.01,0.1,1", nhs_sizes = "4,5,6,8,12,16";
  int nhs_seeds = 5;
  nhs->add_option("--sizes", nhs_sizes);
  nhs->add_option("--ks", ks_csv);
  nhs->add_option("--schedules", tau_csv, "final temperatures (start is 3.0)");
  nhs->add_option("--seeds", nhs_seeds);
  nhs->add_option("--seed", seed);
  nhs->add_option("--out", out_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(task_str, sizes_csv, n_graphs, seed, out_dir);

    if (train->parsed()) {
      TrainConfig cfg;
      cfg.seed = seed;
      cfg.variant = variant;
      cfg.hidden = hidden;
      cfg.fixed_n = fixed_n;
      cfg.er_p = er_p;
      if (no_hints) {
        cfg.hints = false;
        cfg.nohint_k = nohint_k;
      }
      if (!config_path.empty()) apply_config(read_config(config_path), cfg, task_str, out_path);
      multitask = task_str == "all";
      cfg.tasks = multitask ? std::vector<TaskId>(kAllTasks, kAllTasks + kTaskCount)
                            : std::vector<TaskId>{parse_task_or_throw(task_str)};
      cfg.steps = steps > 0 ? steps : (multitask ? 10000 : cfg.steps);
      TrainResult res = multitask ? train_multitask(cfg)
                        : cfg.hints ? train_single_task(cfg)
                                    : train_no_hint(cfg);
      save_checkpoint(res.params, cfg, out_path);
      if (!metrics_path.empty()) write_text_file(metrics_path, format_metrics(res.history));
      std::cout << "trained " << (multitask ? "all tasks" : task_str) << " for " << cfg.steps
                << " steps; final loss "
                << (res.history.empty() ? 0.0 : res.history.back().loss.total) << "\n"
                << "checkpoint: " << out_path << "\n";
      if (res.diverged) {
        std::cout << "training diverged; checkpoint holds the last finite parameters\n";
        return 1;
      }
      return 0;
    }

    if (eval->parsed()) {
      TaskId task = parse_task_or_throw(task_str);
      ModelParams mp = load_checkpoint_for_task(checkpoint_path, task);
      EvalReport rep = evaluate(mp, task, parse_int_list(sizes_csv), n_graphs, seed);
      std::cout << rep.summary();
      if (!out_path.empty()) write_text_file(out_path, rep.records());
      if (min_graph_level >= 0.0)
        for (const auto& ps : rep.sizes)
          if (ps.graph_level < min_graph_level) return 1;
      return 0;
    }

    if (cert->parsed()) {
      TaskId task = parse_task_or_throw(task_str);
      Checkpoint ck = load_checkpoint(checkpoint_path);
      std::vector<TaskId> to_check;
      if (ck.params.tasks.size() > 1 && !cert->count("--task"))
        to_check = ck.params.tasks;  // multitask checkpoint: one certificate per task
      else
        to_check = {task};
      bool all_pass = true;
      std::string full;
      for (TaskId t : to_check) {
        if (!ck.params.covers(t))
          throw std::invalid_argument("checkpoint does not cover task " +
                                      std::string(task_name(t)));
        if (!ck.params.hard_aggregation) {
          std::cout << "certification rejected: non-hard aggregation: table argument unsound\n";
          return 1;
        }
        TransitionCertificate c = certify(ck.params, t);
        full += c.report();
        std::cout << "task " << task_name(t) << ": " << (c.pass ? "PASS" : "FAIL") << " ("
                  << c.assertions.size() << " assertions, " << c.failed_count() << " failed)\n";
        all_pass = all_pass && c.pass;
      }
      if (!out_path.empty()) write_text_file(out_path, full);
      return all_pass ? 0 : 1;
    }

    if (trace->parsed()) {
      TaskId task = parse_task_or_throw(task_str);
      ModelParams mp = load_checkpoint_for_task(checkpoint_path, task);
      Graph g = make_task_instance(task, trace_n, seed);
      dump_trace(mp, task, g, out_path);
      std::cout << "wrote " << out_path << "\n";
      return 0;
    }

    if (ab_soft->parsed()) {
      auto rep = ablate_soft_attention(seed);
      std::cout << rep.summary();
      if (!out_path.empty()) write_text_file(out_path, rep.summary());
      return 0;
    }
    if (ab_ndsu->parsed()) {
      TaskId task = task_str == "bfs" ? TaskId::sp : parse_task_or_throw(task_str);
      auto rep = ablate_nondiscrete_scalar(task, seed);
      std::cout << rep.summary();
      if (!out_path.empty()) write_text_file(out_path, rep.summary());
      return 0;
    }
    if (ab_min->parsed()) {
      TaskId task = parse_task_or_throw(task_str);
      auto sizes = sizes_csv == "16,80,160" ? std::vector<int>{3, 4, 5} : parse_int_list(sizes_csv);
      auto rep = ablate_min_train_size(task, sizes, seed);
      std::cout << rep.summary();
      if (!out_path.empty()) write_text_file(out_path, rep.summary());
      return 0;
    }
    if (ab_ext->parsed()) {
      auto rep = run_extended_scalar_ops(seed);
      std::cout << rep.summary();
      if (!out_path.empty()) write_text_file(out_path, rep.summary());
      return 0;
    }

    if (nhs->parsed()) {
      auto results = no_hint_search(parse_int_list(nhs_sizes), parse_int_list(ks_csv),
                                    parse_double_list(tau_csv), nhs_seeds, seed);
      std::ostringstream out;
      for (const auto& r : results)
        out << "n=" << r.train_n << " k=" << r.k << " tau_end=" << r.tau_end
            << " seed=" << r.seed << " val=" << r.val_node * 100 << "/" << r.val_graph * 100
            << "\n";
      std::cout << out.str();
      if (!out_path.empty()) write_text_file(out_path, out.str());
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

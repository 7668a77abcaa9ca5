// Command-line surface: gen -> demos -> train -> eval, plus the repeated
// trials ablation. Every seed is explicit on the command line or in a config
// file, so rerunning a command reproduces its output artifacts byte for byte.

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "articulab/harness.hpp"

using namespace articulab;

namespace {

Json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  return Json::parse(f);
}

std::vector<Category> parse_categories(const std::string& s) {
  if (s == "all") return {kAllCategories.begin(), kAllCategories.end()};
  std::vector<Category> cats;
  size_t pos = 0;
  while (pos <= s.size()) {
    size_t comma = s.find(',', pos);
    if (comma == std::string::npos) comma = s.size();
    cats.push_back(category_from_string(s.substr(pos, comma - pos)));
    pos = comma + 1;
  }
  return cats;
}

Json category_names(std::span<const Category> cats) {
  Json a = Json::array();
  for (Category c : cats) a.push_back(to_string(c));
  return a;
}

void print_report(const SuccessReport& rep) {
  std::printf("%-14s %9s %9s %8s %8s %14s\n", "category", "episodes", "successes", "rate",
              "stddev", "unfav succ/ep");
  for (const auto& r : rep.rows) {
    std::printf("%-14s %9d %9d %8.4f %8.4f %7d/%d\n", to_string(r.cat).c_str(), r.episodes,
                r.successes, r.success_rate, r.stddev, r.unfav_successes, r.unfav_episodes);
  }
}

void cmd_gen(const std::string& category, int count, uint64_t seed, const std::string& config,
             const std::string& out) {
  GenConfig gen;
  if (!config.empty()) gen = GenConfig::from_json(read_json_file(config));
  gen.validate();
  std::vector<ObjectInstance> objs;
  for (Category cat : parse_categories(category)) {
    const int n = count > 0 ? count : default_instance_count(cat);
    for (int i = 0; i < n; ++i) objs.push_back(build_instance(cat, seed + (uint64_t)i, gen));
  }
  write_objects_file(out, objs, gen);
  std::printf("wrote %zu instances to %s\n", objs.size(), out.c_str());
}

void cmd_demos(const std::string& objects, int per_object, int trials, int pc_points,
               uint64_t seed, const std::string& out) {
  const auto objs = read_objects_file(objects);
  ExpertConfig ecfg;
  ecfg.trials = trials;
  ecfg.pc_points = pc_points;
  DemoDataset ds = collect_dataset(objs, per_object, ecfg, seed);
  write_demos_file(out, ds);
  size_t kf = 0;
  for (const auto& d : ds.demos) kf += d.kf.size();
  std::printf("wrote %zu demos (%zu keyframes) to %s (stats: %s)\n", ds.demos.size(), kf,
              out.c_str(), stats_path_for(out).c_str());
}

void cmd_train(const std::string& demos, const std::string& config, const std::string& out,
               const std::string& log_path) {
  PolicyConfig cfg;
  if (!config.empty()) cfg = PolicyConfig::from_json(read_json_file(config));
  cfg.validate();
  DemoDataset ds = read_demos_file(demos);
  DenoiserNet net = make_net(cfg);
  TrainLog log = train(net, ds);
  save_model(out, net);
  if (!log_path.empty()) write_loss_csv(log_path, log);
  std::printf("trained %zu params, %d epochs, final loss %.6g -> %s\n", net.n_params, cfg.epochs,
              log.epoch_loss.empty() ? 0.0 : log.epoch_loss.back(), out.c_str());
}

void cmd_eval(const std::string& model, const std::string& category, int episodes, int seeds,
              uint64_t seed, const std::string& gen_config, const std::string& out) {
  DenoiserNet net = load_model(model);
  GenConfig gen;
  if (!gen_config.empty()) gen = GenConfig::from_json(read_json_file(gen_config));
  gen.validate();
  const auto cats = parse_categories(category);
  HarnessConfig hcfg;
  SuccessReport rep = evaluate(net, cats, episodes, seeds, seed, gen, hcfg);
  Json echo;
  echo["command"] = "eval";
  echo["model"] = model;
  echo["categories"] = category_names(cats);
  echo["episodes"] = episodes;
  echo["seeds"] = seeds;
  echo["seed"] = seed;
  write_report_csv(out, rep, echo.dump());
  print_report(rep);
  std::printf("wrote %s\n", out.c_str());
}

void cmd_ablate(const std::string& category, std::vector<int> trials, uint64_t seed, bool seed_set,
                const std::string& config, const std::string& out) {
  AblationConfig acfg;
  if (!config.empty()) acfg = AblationConfig::from_json(read_json_file(config));
  if (seed_set) acfg.seed = seed;
  const auto cats = parse_categories(category);
  if (cats.size() != 1) throw std::runtime_error("ablate expects a single category");
  auto rows = ablate_trials(cats[0], trials, acfg);
  Json echo;
  echo["command"] = "ablate";
  echo["category"] = to_string(cats[0]);
  echo["trials"] = trials;
  echo["cfg"] = acfg.to_json();
  write_ablation_csv(out, rows, echo.dump());
  std::printf("%-7s %9s %9s %8s %10s %10s\n", "trials", "episodes", "successes", "rate",
              "unfav_rate", "final_loss");
  for (const auto& r : rows) {
    std::printf("%-7d %9d %9d %8.4f %10.4f %10.4g\n", r.trials, r.episodes, r.successes,
                r.success_rate, r.unfav_rate, r.final_loss);
  }
  std::printf("wrote %s\n", out.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"articulated-object manipulation lab"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker thread cap (0 = library default)");
  // Subcommand callbacks fire inside parse(), after options are read.
  app.parse_complete_callback([&] {
#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#else
    (void)threads;
#endif
  });

  auto* gen = app.add_subcommand("gen", "generate object instances");
  std::string gen_cat = "all", gen_config, gen_out;
  int gen_count = 0;
  uint64_t gen_seed = 0;
  gen->add_option("--category", gen_cat, "category name, comma list, or 'all'");
  gen->add_option("--count", gen_count, "instances per category (0 = per-category default)");
  gen->add_option("--seed", gen_seed, "base instance seed");
  gen->add_option("--config", gen_config, "generation config JSON");
  gen->add_option("--out", gen_out, "output objects JSON")->required();
  gen->callback([&] { cmd_gen(gen_cat, gen_count, gen_seed, gen_config, gen_out); });

  auto* demos = app.add_subcommand("demos", "collect expert demonstrations");
  std::string demos_objects, demos_out;
  int demos_per = 20, demos_trials = 1, demos_pc = 0;
  uint64_t demos_seed = 1;
  demos->add_option("--objects", demos_objects, "objects JSON from gen")->required();
  demos->add_option("--per-object", demos_per, "demos per instance");
  demos->add_option("--trials", demos_trials, "probe repetitions (0 = full observation)");
  demos->add_option("--pc-points", demos_pc, "point cloud size per keyframe (0 = off)");
  demos->add_option("--seed", demos_seed, "demo seed");
  demos->add_option("--out", demos_out, "output demos JSONL")->required();
  demos->callback(
      [&] { cmd_demos(demos_objects, demos_per, demos_trials, demos_pc, demos_seed, demos_out); });

  auto* train = app.add_subcommand("train", "train the diffusion policy");
  std::string train_demos, train_config, train_out, train_log;
  train->add_option("--demos", train_demos, "demos JSONL")->required();
  train->add_option("--config", train_config, "policy config JSON");
  train->add_option("--out", train_out, "output model file")->required();
  train->add_option("--log", train_log, "loss CSV");
  train->callback([&] { cmd_train(train_demos, train_config, train_out, train_log); });

  auto* eval = app.add_subcommand("eval", "closed-loop success rates");
  std::string eval_model, eval_cat = "all", eval_gen, eval_out;
  int eval_episodes = 100, eval_seeds = 5;
  uint64_t eval_seed = 0;
  eval->add_option("--model", eval_model, "model file from train")->required();
  eval->add_option("--category", eval_cat, "category name, comma list, or 'all'");
  eval->add_option("--episodes", eval_episodes, "episodes per category");
  eval->add_option("--seeds", eval_seeds, "seed groups for the stddev");
  eval->add_option("--seed", eval_seed, "base evaluation seed");
  eval->add_option("--gen-config", eval_gen, "generation config JSON");
  eval->add_option("--out", eval_out, "output report CSV")->required();
  eval->callback([&] {
    cmd_eval(eval_model, eval_cat, eval_episodes, eval_seeds, eval_seed, eval_gen, eval_out);
  });

  auto* ablate = app.add_subcommand("ablate", "demos+train+eval per trials value");
  std::string ab_cat, ab_config, ab_out;
  std::vector<int> ab_trials{0, 1, 2, 3};
  uint64_t ab_seed = 0;
  ablate->add_option("--category", ab_cat, "single category")->required();
  auto* ab_seed_opt = ablate->add_option("--seed", ab_seed, "pipeline seed");
  ablate->add_option("--trials", ab_trials, "comma list of trials values")->delimiter(',');
  ablate->add_option("--config", ab_config, "ablation config JSON");
  ablate->add_option("--out", ab_out, "output ablation CSV")->required();
  ablate->callback([&] {
    cmd_ablate(ab_cat, ab_trials, ab_seed, ab_seed_opt->count() > 0, ab_config, ab_out);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

#include "vill/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "vill/errors.hpp"
#include "vill/format.hpp"
#include "vill/harness.hpp"
#include "vill/io.hpp"

namespace vill {
namespace fs = std::filesystem;

namespace {

struct DataOptions {
  std::string data;  // directory holding source.csv / target.csv, or a single CSV
  bool header = false;
  bool unlabeled_target = false;
};

struct RunOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  DataOptions data;
};

void add_data_options(CLI::App* cmd, DataOptions& d) {
  cmd->add_option("--data", d.data, "Dataset directory (source.csv, target.csv[, spec.json])");
  cmd->add_flag("--header", d.header, "CSV files start with a header line");
  cmd->add_flag("--unlabeled-target", d.unlabeled_target, "target.csv has no label column");
}

void add_run_options(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("--config", o.config_path, "Config file (key = value lines, or a JSON object)");
  cmd->add_option("--set", o.overrides, "Override a config key, e.g. --set beta=0.1")->type_name("KEY=VALUE");
  cmd->add_option("--out", o.out_dir, "Output directory");
  add_data_options(cmd, o.data);
}

// Reads the config file plus overrides; run-level keys (data_dir, output_dir)
// fill in paths not given on the command line.
TrainConfig load_config(RunOptions& o, const std::string& default_out) {
  TrainConfig config;
  Settings rest;
  if (!o.config_path.empty()) rest = apply_settings(config, read_settings(o.config_path));
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects KEY=VALUE, got '" + kv + "'");
    const std::string key = kv.substr(0, eq);
    if (is_config_key(key)) {
      apply_setting(config, key, kv.substr(eq + 1));
    } else {
      rest[key] = kv.substr(eq + 1);
    }
  }
  for (const auto& [key, value] : rest) {
    if (key == "data_dir") {
      if (o.data.data.empty()) o.data.data = value;
    } else if (key == "output_dir") {
      if (o.out_dir.empty()) o.out_dir = value;
    } else {
      throw UsageError("config: unknown key '" + key + "'");
    }
  }
  if (o.data.data.empty()) o.data.data = "data";
  if (o.out_dir.empty()) o.out_dir = default_out;
  try {
    config.validate();
  } catch (const ArgumentError& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  return config;
}

DomainPair load_pair(const DataOptions& d) {
  const fs::path dir(d.data);
  std::size_t num_classes = 0;
  if (fs::exists(dir / "spec.json")) num_classes = shift_spec_from_json(read_json(dir / "spec.json")).num_classes;
  CsvOptions opts{true, d.header, num_classes};
  DomainPair pair{load_csv(dir / "source.csv", Domain::source, opts), {}};
  if (opts.num_classes == 0) opts.num_classes = pair.source.num_classes;
  opts.has_labels = !d.unlabeled_target;
  pair.target = load_csv(dir / "target.csv", Domain::target, opts);
  pair.target.num_classes = pair.source.num_classes;
  return pair;
}

int cmd_generate(const std::string& spec_path, const std::string& out_dir, std::ostream& out) {
  const ShiftSpec spec = shift_spec_from_json(read_json(spec_path));
  const auto pair = generate(spec);
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  save_csv(dir / "source.csv", pair.source);
  save_csv(dir / "target.csv", pair.target);
  write_text(dir / "spec.json", dump(to_json(spec)));
  out << "wrote " << pair.source.size() << " source and " << pair.target.size() << " target samples to "
      << dir.string() << '\n';
  return kExitOk;
}

int cmd_train(RunOptions& o, std::ostream& out, std::ostream& err) {
  const TrainConfig config = load_config(o, "run");
  const auto pair = load_pair(o.data);
  const auto result = train(config, pair.source, pair.target);
  const fs::path dir(o.out_dir);
  fs::create_directories(dir);

  write_text(dir / "config.json", dump(to_json(config)));
  write_text(dir / "model.json", dump(to_json(result.model)));
  std::ostringstream epochs;
  write_epoch_csv(epochs, result.record);
  write_text(dir / "epochs.csv", epochs.str());
  std::ostringstream trajectory;
  write_trajectory_header(trajectory, pair.source.num_classes);
  for (const auto& e : result.record.epochs) write_trajectory_row(trajectory, e.pseudo);
  write_text(dir / "trajectory.csv", trajectory.str());
  nlohmann::json run = {{"status", result.record.status == RunStatus::ok ? "ok" : "numeric_failure"},
                        {"failure", result.record.failure},
                        {"epochs_completed", result.record.epochs.size()},
                        {"wall_clock_seconds", result.record.wall_clock_seconds}};
  write_text(dir / "run.json", dump(run));

  if (result.record.status != RunStatus::ok) {
    err << "training aborted: " << result.record.failure << '\n';
    return kExitNumeric;
  }
  if (result.record.final_metrics) {
    write_text(dir / "metrics.json", dump(to_json(*result.record.final_metrics)));
    print_metrics_table(out, *result.record.final_metrics);
  }
  out << "run written to " << dir.string() << '\n';
  return kExitOk;
}

int cmd_evaluate(const std::string& model_path, DataOptions& d, std::vector<std::size_t> worst_ns,
                 const std::string& config_path, const std::string& out_path, std::ostream& out) {
  const Model model = model_from_json(read_json(model_path));
  if (!config_path.empty()) {
    TrainConfig config;
    const auto j = read_json(config_path);
    config = config_from_json(j);
    if (worst_ns.empty()) worst_ns = config.worst_n_values;
  }
  if (worst_ns.empty()) worst_ns = TrainConfig{}.worst_n_values;

  fs::path data_path(d.data.empty() ? "data" : d.data);
  if (fs::is_directory(data_path)) data_path /= "target.csv";
  Dataset labeled = load_csv(data_path, Domain::target, {true, d.header, model.num_classes()});
  const auto report = evaluate(model, labeled, worst_ns);
  if (!out_path.empty()) write_text(out_path, dump(to_json(report)));
  print_metrics_table(out, report);
  return kExitOk;
}

int cmd_ablate(RunOptions& o, std::size_t num_seeds, unsigned threads, std::ostream& out) {
  const TrainConfig config = load_config(o, "ablation");
  if (num_seeds == 0) throw UsageError("--seeds must be >= 1");
  const auto pair = load_pair(o.data);
  std::vector<std::uint64_t> seeds(num_seeds);
  for (std::size_t i = 0; i < num_seeds; ++i) seeds[i] = config.seed + i;
  const auto result = ablate(config, pair.source, pair.target, seeds, threads);

  const fs::path dir(o.out_dir);
  fs::create_directories(dir);
  const auto doc = to_json(result);
  write_text(dir / "config.json", dump(to_json(config)));
  write_text(dir / "ablation.json", dump(doc));

  std::ostringstream csv;
  const auto& first_mean = result.cells.front().mean;
  csv << "reweighting,rebalancing,statistic";
  for (const auto& [name, v] : first_mean) csv << ',' << name;
  csv << '\n';
  for (const auto& cell : result.cells) {
    for (const auto* stat : {&cell.mean, &cell.median}) {
      csv << (cell.reweighting ? "on" : "off") << ',' << (cell.rebalancing ? "on" : "off") << ','
          << (stat == &cell.mean ? "mean" : "median");
      for (const auto& [name, v] : first_mean) {
        const auto it = stat->find(name);
        csv << ',' << (it == stat->end() ? std::string("nan") : format_double(it->second));
      }
      csv << '\n';
    }
  }
  write_text(dir / "ablation.csv", csv.str());
  print_ablation_table(out, doc);

  for (const auto& cell : result.cells) {
    for (const auto& run : cell.runs) {
      if (run.status != RunStatus::ok) return kExitNumeric;
    }
  }
  return kExitOk;
}

int cmd_report(const std::string& run_dir, std::ostream& out) {
  const fs::path dir(run_dir);
  if (fs::exists(dir / "ablation.json")) {
    print_ablation_table(out, read_json(dir / "ablation.json"));
    return kExitOk;
  }
  if (fs::exists(dir / "epochs.csv")) {
    out << read_text(dir / "epochs.csv") << '\n';
  }
  if (fs::exists(dir / "metrics.json")) {
    print_metrics_table(out, metrics_from_json(read_json(dir / "metrics.json")));
    return kExitOk;
  }
  throw IngestionError("'" + dir.string() + "' holds neither metrics.json nor ablation.json");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fairness-aware domain adaptation with virtual label-distribution re-weighting", "vill"};
  app.require_subcommand(1);

  std::string spec_path;
  std::string generate_out = "data";
  auto* generate_cmd = app.add_subcommand("generate", "Generate a synthetic source/target pair");
  generate_cmd->add_option("--spec", spec_path, "Shift spec JSON")->required();
  generate_cmd->add_option("--out", generate_out, "Output directory");

  RunOptions train_opts;
  auto* train_cmd = app.add_subcommand("train", "Train one model and evaluate it on the target");
  add_run_options(train_cmd, train_opts);

  std::string model_path;
  std::string eval_config;
  std::string eval_out;
  std::vector<std::size_t> worst_ns;
  DataOptions eval_data;
  auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate a saved model on a labelled CSV");
  eval_cmd->add_option("--model", model_path, "model.json from a training run")->required();
  add_data_options(eval_cmd, eval_data);
  eval_cmd->add_option("--worst-n", worst_ns, "Worst-N values (default: config or 5,10)")->delimiter(',');
  eval_cmd->add_option("--config", eval_config, "config.json whose worst_n_values to use");
  eval_cmd->add_option("--out", eval_out, "Write the metrics JSON here");

  RunOptions ablate_opts;
  std::size_t num_seeds = 5;
  unsigned threads = 0;
  auto* ablate_cmd = app.add_subcommand("ablate", "Run the re-weighting x re-balancing grid");
  add_run_options(ablate_cmd, ablate_opts);
  ablate_cmd->add_option("--seeds", num_seeds, "Number of seeds (config seed, seed+1, ...)");
  ablate_cmd->add_option("--threads", threads, "Worker threads (0 = hardware concurrency)");

  std::string report_dir;
  auto* report_cmd = app.add_subcommand("report", "Print the tables for a run or ablation directory");
  report_cmd->add_option("--run", report_dir, "Run directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*generate_cmd) return cmd_generate(spec_path, generate_out, out);
    if (*train_cmd) return cmd_train(train_opts, out, err);
    if (*eval_cmd) return cmd_evaluate(model_path, eval_data, worst_ns, eval_config, eval_out, out);
    if (*ablate_cmd) return cmd_ablate(ablate_opts, num_seeds, threads, out);
    if (*report_cmd) return cmd_report(report_dir, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IngestionError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    // ArgumentError / ShapeError: inputs inconsistent with each other.
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace vill

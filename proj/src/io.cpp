#include "vill/io.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "vill/errors.hpp"
#include "vill/format.hpp"
#include "vill/rng.hpp"

namespace vill {

using nlohmann::json;

namespace {

json dense_to_json(const Dense& d) {
  return {{"in", d.in_dim()},
          {"out", d.out_dim()},
          {"activation", to_string(d.activation)},
          {"weight", d.weight.data()},
          {"bias", d.bias}};
}

Dense dense_from_json(const json& j) {
  const auto in = j.at("in").get<std::size_t>();
  const auto out = j.at("out").get<std::size_t>();
  Dense d{Matrix(in, out, j.at("weight").get<std::vector<double>>()), j.at("bias").get<std::vector<double>>(),
          activation_from_string(j.at("activation").get<std::string>())};
  if (d.bias.size() != out) throw ShapeError("model file: bias length mismatch");
  return d;
}

std::string pct(double x) { return format_fixed(100.0 * x, 2); }

void print_row(std::ostream& out, const std::vector<std::string>& cells, const std::vector<std::size_t>& widths) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    out << (i ? "  " : "") << std::setw(static_cast<int>(widths[i])) << cells[i];
  }
  out << '\n';
}

void print_table(std::ostream& out, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths;
  for (const auto& r : rows) {
    widths.resize(std::max(widths.size(), r.size()), 0);
    for (std::size_t i = 0; i < r.size(); ++i) widths[i] = std::max(widths[i], r[i].size());
  }
  for (const auto& r : rows) print_row(out, r, widths);
}

// Metric columns in display order: worst_<N> ascending, then global, class_mean.
std::vector<std::string> metric_columns(const json& cell_stats) {
  std::vector<std::pair<std::size_t, std::string>> worst;
  for (const auto& [key, value] : cell_stats.items()) {
    if (key.rfind("worst_", 0) == 0) worst.emplace_back(std::stoul(key.substr(6)), key);
  }
  std::sort(worst.begin(), worst.end());
  std::vector<std::string> cols;
  for (const auto& w : worst) cols.push_back(w.second);
  cols.push_back("global");
  cols.push_back("class_mean");
  return cols;
}

std::string column_title(const std::string& key) {
  if (key.rfind("worst_", 0) == 0) return "worst" + key.substr(6);
  return key;
}

}  // namespace

json to_json(const MetricsReport& r) {
  json per_class = json::array();
  for (const auto& acc : r.per_class_acc) per_class.push_back(acc ? json(*acc) : json(nullptr));
  json worst = json::object();
  for (const auto& [n, value] : r.worst_n) worst[std::to_string(n)] = value;
  return {{"num_classes", r.num_classes},
          {"global_acc", r.global_acc},
          {"class_mean_acc", r.class_mean_acc},
          {"worst_n", worst},
          {"per_class_acc", per_class},
          {"support", r.support},
          {"confusion", r.confusion},
          {"warnings", r.warnings}};
}

MetricsReport metrics_from_json(const json& j) {
  MetricsReport r;
  r.num_classes = j.at("num_classes").get<std::size_t>();
  r.global_acc = j.at("global_acc").get<double>();
  r.class_mean_acc = j.at("class_mean_acc").get<double>();
  for (const auto& [key, value] : j.at("worst_n").items()) r.worst_n[std::stoul(key)] = value.get<double>();
  for (const auto& acc : j.at("per_class_acc")) {
    r.per_class_acc.push_back(acc.is_null() ? std::nullopt : std::optional<double>(acc.get<double>()));
  }
  r.support = j.at("support").get<std::vector<std::size_t>>();
  r.confusion = j.at("confusion").get<std::vector<std::vector<std::size_t>>>();
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  return r;
}

json to_json(const Model& model) {
  json layers = json::array();
  for (const auto& l : model.extractor) layers.push_back(dense_to_json(l));
  return {{"extractor", layers}, {"head", dense_to_json(model.head)}};
}

Model model_from_json(const json& j) {
  Model m;
  try {
    for (const auto& l : j.at("extractor")) m.extractor.push_back(dense_from_json(l));
    m.head = dense_from_json(j.at("head"));
  } catch (const json::exception& e) {
    throw IngestionError(std::string("model file: ") + e.what());
  }
  m.validate();
  return m;
}

json to_json(const TrainConfig& c) {
  return {{"alpha", c.alpha},
          {"beta", c.beta},
          {"gamma", c.gamma},
          {"enable_reweighting", c.enable_reweighting},
          {"enable_rebalancing", c.enable_rebalancing},
          {"alignment", to_string(c.alignment)},
          {"epochs", c.epochs},
          {"iterations_per_epoch", c.iterations_per_epoch},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"momentum", c.momentum},
          {"seed", c.seed},
          {"hidden_dims", c.hidden_dims},
          {"worst_n_values", c.worst_n_values},
          {"rng", Rng::kAlgorithm}};
}

TrainConfig config_from_json(const json& j) {
  if (!j.is_object()) throw UsageError("config JSON must be an object");
  TrainConfig c;
  std::ostringstream text;
  for (const auto& [key, value] : j.items()) {
    if (key == "rng") {
      if (value.get<std::string>() != Rng::kAlgorithm) throw UsageError("config: unsupported rng '" + value.get<std::string>() + "'");
      continue;
    }
    text << key << " = " << (value.is_string() ? value.get<std::string>() : value.dump()) << '\n';
  }
  apply_settings(c, parse_settings(text.str()));
  return c;
}

json to_json(const ShiftSpec& s) {
  return {{"num_classes", s.num_classes},
          {"dim", s.dim},
          {"source_priors", s.source_priors},
          {"target_priors", s.target_priors},
          {"mean_shift", s.mean_shift},
          {"class_separation", s.class_separation},
          {"noise_scale", s.noise_scale},
          {"n_source", s.n_source},
          {"n_target", s.n_target},
          {"seed", s.seed},
          {"rng", Rng::kAlgorithm}};
}

ShiftSpec shift_spec_from_json(const json& j) {
  ShiftSpec s;
  try {
    s.num_classes = j.at("num_classes").get<std::size_t>();
    s.dim = j.at("dim").get<std::size_t>();
    const auto uniform = std::vector<double>(s.num_classes, s.num_classes ? 1.0 / static_cast<double>(s.num_classes) : 0.0);
    s.source_priors = j.contains("source_priors") ? j.at("source_priors").get<std::vector<double>>() : uniform;
    s.target_priors = j.contains("target_priors") ? j.at("target_priors").get<std::vector<double>>() : uniform;
    s.mean_shift = j.value("mean_shift", std::vector<double>{});
    s.class_separation = j.value("class_separation", s.class_separation);
    s.noise_scale = j.value("noise_scale", s.noise_scale);
    s.n_source = j.value("n_source", s.n_source);
    s.n_target = j.value("n_target", s.n_target);
    s.seed = j.value("seed", s.seed);
    if (j.contains("rng") && j.at("rng").get<std::string>() != Rng::kAlgorithm) {
      throw UsageError("shift spec: unsupported rng '" + j.at("rng").get<std::string>() + "'");
    }
  } catch (const json::exception& e) {
    throw UsageError(std::string("shift spec: ") + e.what());
  }
  s.validate();
  return s;
}

json to_json(const AblationResult& result) {
  json cells = json::array();
  for (const auto& cell : result.cells) {
    json runs = json::array();
    for (const auto& run : cell.runs) {
      runs.push_back({{"seed", run.seed},
                      {"status", run.status == RunStatus::ok ? "ok" : "numeric_failure"},
                      {"metrics", run.metrics ? to_json(*run.metrics) : json(nullptr)}});
    }
    cells.push_back({{"reweighting", cell.reweighting},
                     {"rebalancing", cell.rebalancing},
                     {"mean", cell.mean},
                     {"median", cell.median},
                     {"runs", runs}});
  }
  return {{"config", to_json(result.base)}, {"seeds", result.seeds}, {"cells", cells}};
}

void write_epoch_csv(std::ostream& out, const RunRecord& record) {
  const std::size_t c = record.epochs.empty() ? 0 : record.epochs.front().pseudo.counts.size();
  out << "epoch,total_loss,rw_loss,da_loss,rb_loss,pseudo_total";
  for (const char* prefix : {"count_", "v_", "omega_"}) {
    for (std::size_t i = 0; i < c; ++i) out << ',' << prefix << i;
  }
  out << '\n';
  for (const auto& e : record.epochs) {
    out << e.epoch << ',' << format_double(e.mean.total) << ',' << format_double(e.mean.reweighted_ce) << ','
        << format_double(e.mean.alignment) << ',' << format_double(e.mean.rebalancing) << ',' << e.pseudo.total;
    for (auto n : e.pseudo.counts) out << ',' << n;
    for (double x : e.pseudo.v.values()) out << ',' << format_double(x);
    for (double x : e.pseudo.omega.values()) out << ',' << format_double(x);
    out << '\n';
  }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw IngestionError("cannot write '" + path.string() + "'");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const std::filesystem::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw IngestionError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void print_metrics_table(std::ostream& out, const MetricsReport& r) {
  std::vector<std::vector<std::string>> rows = {{"class", "support", "correct", "acc%"}};
  for (std::size_t c = 0; c < r.num_classes; ++c) {
    rows.push_back({std::to_string(c), std::to_string(r.support[c]),
                    std::to_string(r.confusion[c][c]),
                    r.per_class_acc[c] ? pct(*r.per_class_acc[c]) : "n/a"});
  }
  print_table(out, rows);
  out << '\n';
  std::vector<std::vector<std::string>> summary;
  for (const auto& [n, value] : r.worst_n) summary.push_back({"worst-" + std::to_string(n), pct(value)});
  summary.push_back({"class-mean", pct(r.class_mean_acc)});
  summary.push_back({"global", pct(r.global_acc)});
  print_table(out, summary);
  for (const auto& w : r.warnings) out << "warning: " << w << '\n';
}

void print_ablation_table(std::ostream& out, const json& ablation) {
  const auto& cells = ablation.at("cells");
  if (cells.empty()) return;
  const auto cols = metric_columns(cells.front().at("mean"));
  const std::size_t n_seeds = ablation.at("seeds").size();
  for (const char* stat : {"mean", "median"}) {
    out << stat << " over " << n_seeds << " seed(s), accuracy %\n";
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header = {"reweighting", "rebalancing"};
    for (const auto& c : cols) header.push_back(column_title(c));
    rows.push_back(header);
    for (const auto& cell : cells) {
      std::vector<std::string> row = {cell.at("reweighting").get<bool>() ? "on" : "off",
                                      cell.at("rebalancing").get<bool>() ? "on" : "off"};
      for (const auto& c : cols) {
        const auto& stats = cell.at(stat);
        row.push_back(stats.contains(c) ? pct(stats.at(c).get<double>()) : "n/a");
      }
      rows.push_back(row);
    }
    print_table(out, rows);
    out << '\n';
  }
}

void print_ablation_table(std::ostream& out, const AblationResult& result) {
  print_ablation_table(out, to_json(result));
}

}  // namespace vill

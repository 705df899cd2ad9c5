#include "cli.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "step/experiment.hpp"
#include "step/random.hpp"
#include "step/service.hpp"

namespace step::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Config fields that may be overridden from the command line, by the same
// name as in the JSON document.
struct Overrides {
  std::optional<std::string> csv;
  std::optional<std::string> schema;
  std::optional<std::string> method;
  std::optional<int> k;
  std::optional<int> trials;
  std::optional<double> threshold;
  std::optional<double> step_size;
  std::optional<int> max_iterations;
  std::optional<double> noise_beta;
  std::optional<std::string> clustering;
  std::optional<std::uint64_t> seed;
  std::optional<int> poi_cap;
  std::optional<int> threads;

  void attach(CLI::App* app) {
    app->add_option("--csv", csv, "Dataset CSV (overrides config)");
    app->add_option("--schema", schema, "Schema JSON (overrides config)");
    app->add_option("--method", method, "step | face")->check(CLI::IsMember({"step", "face"}));
    app->add_option("--k", k, "Number of paths / clusters");
    app->add_option("--trials", trials, "Number of trials");
    app->add_option("--threshold", threshold, "Confidence threshold");
    app->add_option("--step_size", step_size, "Step magnitude");
    app->add_option("--max_iterations", max_iterations, "Iteration cap per path");
    app->add_option("--noise_beta", noise_beta, "User-interference noise level");
    app->add_option("--clustering", clustering, "kmeans | random")
        ->check(CLI::IsMember({"kmeans", "random"}));
    app->add_option("--seed", seed, "Base seed (overrides STEP_SEED and config)");
    app->add_option("--poi_cap", poi_cap, "Maximum PoIs per trial");
    app->add_option("--threads", threads, "Worker threads (0 = all cores)");
  }

  void apply(json& doc) const {
    auto set = [&doc](const char* key, const auto& value) {
      if (value) doc[key] = *value;
    };
    // Command-line paths are relative to the working directory.
    if (csv) doc["csv"] = fs::absolute(*csv).string();
    if (schema) doc["schema"] = fs::absolute(*schema).string();
    set("method", method);
    set("k", k);
    set("trials", trials);
    set("threshold", threshold);
    set("step_size", step_size);
    set("max_iterations", max_iterations);
    set("noise_beta", noise_beta);
    set("clustering", clustering);
    set("seed", seed);
    set("poi_cap", poi_cap);
    set("threads", threads);
  }
};

ExperimentConfig read_config(const std::string& path, const Overrides& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw ConfigError("config file is not valid JSON: " + path);
  if (const char* env = std::getenv("STEP_SEED"); env != nullptr && *env != '\0') {
    try {
      doc["seed"] = std::stoull(env);
    } catch (const std::exception&) {
      throw ConfigError(std::string("STEP_SEED is not an unsigned integer: ") + env);
    }
  }
  const fs::path base = fs::absolute(path).parent_path();
  overrides.apply(doc);
  ExperimentConfig config = config_from_json(doc, base);
  if (!fs::exists(config.schema)) throw ConfigError("schema file not found: " + config.schema.string());
  if (!fs::exists(config.csv)) throw ConfigError("dataset file not found: " + config.csv.string());
  if (config.model.load && !fs::exists(config.model.path)) {
    throw ConfigError("model file not found: " + config.model.path.string());
  }
  return config;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

void write_report(const MetricsReport& report, const fs::path& json_path,
                  const std::optional<fs::path>& csv_path) {
  write_text(json_path, report_to_json(report).dump(2) + "\n");
  fs::path csv = csv_path ? *csv_path : fs::path(json_path).replace_extension(".csv");
  write_text(csv, report_to_csv(report));
}

template <typename T>
std::vector<T> parse_list(const std::string& text) {
  std::vector<T> values;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    std::istringstream cell(item);
    T v{};
    cell >> v;
    if (cell.fail() || !cell.eof()) throw ConfigError("cannot parse list entry '" + item + "'");
    values.push_back(v);
  }
  if (values.empty()) throw ConfigError("empty list");
  return values;
}

std::string number_tag(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

std::atomic<bool> g_stop_requested{false};

extern "C" void on_signal(int) { g_stop_requested = true; }

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Direction-based algorithmic recourse: benchmarks, sweeps and an interactive service"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides overrides;

  auto* train = app.add_subcommand("train", "Train a logistic model on the first trial's split");
  std::string model_out;
  std::string schema_out;
  train->add_option("--config", config_path, "Experiment config JSON")->required();
  train->add_option("--out", model_out, "Model JSON to write")->required();
  train->add_option("--schema-out", schema_out, "Write the schema with fitted scaling here");
  overrides.attach(train);

  auto* recourse = app.add_subcommand("recourse", "Print recourse paths for one PoI");
  std::optional<std::size_t> row;
  std::string record;
  recourse->add_option("--config", config_path, "Experiment config JSON")->required();
  auto* row_opt = recourse->add_option("--row", row, "Index of a test-split PoI of trial 0");
  recourse->add_option("--record", record, "Raw feature map as JSON")->excludes(row_opt);
  overrides.attach(recourse);

  auto* bench = app.add_subcommand("benchmark", "Run all trials and write a metrics report");
  std::string report_out;
  std::optional<std::string> csv_out;
  bench->add_option("--config", config_path, "Experiment config JSON")->required();
  bench->add_option("--out", report_out, "Report JSON to write")->required();
  bench->add_option("--csv-out", csv_out, "Report CSV (default: --out with .csv)");
  overrides.attach(bench);

  auto* noise = app.add_subcommand("sweep-noise", "One report per user-interference level");
  std::string betas = "0,0.1,0.3,0.5";
  std::string out_dir = "reports";
  noise->add_option("--config", config_path, "Experiment config JSON")->required();
  noise->add_option("--betas", betas, "Comma-separated noise levels")->capture_default_str();
  noise->add_option("--out-dir", out_dir, "Directory for report files")->capture_default_str();
  overrides.attach(noise);

  auto* ksweep = app.add_subcommand("sweep-k", "One report per number of clusters");
  std::string ks = "1,2,3,4,5,6";
  ksweep->add_option("--config", config_path, "Experiment config JSON")->required();
  ksweep->add_option("--ks", ks, "Comma-separated cluster counts")->capture_default_str();
  ksweep->add_option("--out-dir", out_dir, "Directory for report files")->capture_default_str();
  overrides.attach(ksweep);

  auto* serve = app.add_subcommand("serve", "Serve the interactive recourse API");
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string snapshot;
  serve->add_option("--config", config_path, "Experiment config JSON")->required();
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("--port", port, "Port (0 picks a free one)")->capture_default_str();
  serve->add_option("--snapshot", snapshot, "Session snapshot loaded at start, saved on exit");
  overrides.attach(serve);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return kExitUsage;
  }

  try {
    const ExperimentConfig config = read_config(config_path, overrides);

    if (*train) {
      ExperimentConfig c = config;
      c.model.load = false;
      const RawTable table = read_table(c.csv, load_schema(c.schema));
      const TrialSetup setup = prepare_trial(c, table, 0);
      const auto& model = dynamic_cast<const LogisticModel&>(*setup.model);
      const LogisticModel saved(model.weights(), model.bias(), c.threshold);
      write_text(model_out, model_to_json(saved).dump(2) + "\n");
      if (!schema_out.empty()) write_text(schema_out, schema_to_json(setup.schema).dump(2) + "\n");
      out << "wrote " << model_out << "\n";
      return kExitOk;
    }

    if (*recourse) {
      const RawTable table = read_table(config.csv, load_schema(config.schema));
      const TrialSetup setup = prepare_trial(config, table, 0);
      Vector poi;
      std::string id;
      std::uint64_t stream = derive_seed(setup.seed, {4, 0});
      if (!record.empty()) {
        json doc = json::parse(record, nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) throw ConfigError("--record is not a JSON object");
        RawRow raw;
        for (const auto& f : setup.schema.features()) {
          if (!doc.contains(f.name)) throw ConfigError("--record lacks feature '" + f.name + "'");
          const auto& v = doc.at(f.name);
          raw.push_back(v.is_number() ? RawValue(v.get<double>())
                                      : setup.schema.parse_cell(setup.schema.index_of(f.name).value(),
                                                                v.get<std::string>()));
        }
        poi = setup.schema.encode(raw);
        id = "record";
      } else {
        const std::size_t r = row.value_or(0);
        if (r >= static_cast<std::size_t>(setup.pois.rows())) {
          throw ConfigError("--row " + std::to_string(r) + " out of range; trial 0 has " +
                            std::to_string(setup.pois.rows()) + " PoIs");
        }
        poi = setup.pois.row(static_cast<Eigen::Index>(r)).transpose();
        id = setup.poi_ids[r];
        stream = derive_seed(setup.seed, {4, r});
      }
      const auto paths = recourse_for(config, setup, poi, stream);
      json doc = {{"poi", id},
                  {"confidence", setup.model->confidence(poi)},
                  {"paths", json::array()}};
      for (const auto& p : paths) doc["paths"].push_back(path_to_json(p));
      out << doc.dump(2) << "\n";
      return kExitOk;
    }

    if (*bench) {
      const MetricsReport report = run_experiment(config);
      write_report(report, report_out, csv_out ? std::optional<fs::path>(*csv_out) : std::nullopt);
      out << "wrote " << report_out << "\n";
      return kExitOk;
    }

    if (*noise) {
      const auto values = parse_list<double>(betas);
      for (double beta : values) {
        if (!(beta >= 0.0)) throw ConfigError("noise levels must be >= 0");
      }
      const auto reports = sweep_noise(config, values);
      for (std::size_t i = 0; i < reports.size(); ++i) {
        const fs::path path = fs::path(out_dir) / ("report_beta_" + number_tag(values[i]) + ".json");
        write_report(reports[i], path, std::nullopt);
        out << "wrote " << path.string() << "\n";
      }
      return kExitOk;
    }

    if (*ksweep) {
      const auto values = parse_list<int>(ks);
      for (int k : values) {
        if (k < 1) throw ConfigError("cluster counts must be >= 1");
      }
      const auto reports = sweep_k(config, values);
      for (std::size_t i = 0; i < reports.size(); ++i) {
        const fs::path path = fs::path(out_dir) / ("report_k_" + std::to_string(values[i]) + ".json");
        write_report(reports[i], path, std::nullopt);
        out << "wrote " << path.string() << "\n";
      }
      return kExitOk;
    }

    if (*serve) {
      RecourseService service(make_engine(config));
      if (!snapshot.empty() && fs::exists(snapshot)) service.load_snapshot(snapshot);
      HttpServer server(service);
      const int bound = server.bind(host, port);
      if (bound < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
      out << "listening on http://" << host << ":" << bound << std::endl;
      g_stop_requested = false;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::jthread watcher([&server](std::stop_token token) {
        while (!token.stop_requested() && !g_stop_requested) {
          std::this_thread::sleep_for(std::chrono::milliseconds(100));
        }
        server.stop();
      });
      server.listen_after_bind();
      watcher.request_stop();
      if (!snapshot.empty()) service.save_snapshot(snapshot);
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const SchemaError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace step::cli

/*
 * Copyright 2026 The xlane Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// xlane: train, predict, explain, simulate, generate data, evaluate and serve
// lane-change predictions.

#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "xlane/dataset.hpp"
#include "xlane/explanation.hpp"
#include "xlane/faithfulness.hpp"
#include "xlane/ig.hpp"
#include "xlane/json_io.hpp"
#include "xlane/lrp.hpp"
#include "xlane/model_io.hpp"
#include "xlane/service/stack.hpp"
#include "xlane/train.hpp"
#include "xlane/twin/generate.hpp"
#include "xlane/twin/replay.hpp"

namespace {

using namespace xlane;

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

twin::SimConfig sim_config(const std::string& path, std::optional<std::uint64_t> seed) {
  twin::SimConfig c = path.empty() ? twin::SimConfig{} : twin::load_sim_config(path);
  if (seed) c.seed = *seed;
  c.validate();
  return c;
}

struct TrainOpts {
  std::string data, out;
  TrainConfig cfg;
};

int run_train(const TrainOpts& o) {
  const Dataset d = load_dataset(o.data);
  TrainReport report;
  const auto p = train(d, o.cfg, &report, [&](int epoch, double loss) {
    spdlog::info("epoch {:3d}  loss {:.5f}", epoch + 1, loss);
  });
  save_model(p, o.out);
  std::printf("train accuracy %.4f  val accuracy %.4f  -> %s\n", report.train_accuracy,
              report.val_accuracy, o.out.c_str());
  return 0;
}

struct PredictOpts {
  std::string model, window, out;
};

int run_predict(const PredictOpts& o) {
  const auto p = load_model(o.model);
  const auto w = read_window(o.window);
  const auto [out, trace] = forward(w, p);
  nlohmann::json j = prediction_to_json(out);
  j["window_id"] = w.id;
  if (o.out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    write_json(o.out, j);
  }
  return 0;
}

struct ExplainOpts {
  std::string model, window, out, explanation_out;
  std::string method = "lrp", cls, ln_rule = "omega", variant = "literal", baseline = "sentinel";
  double epsilon = 1e-3;
  int steps = 50;
};

int run_explain(const ExplainOpts& o) {
  const auto p = load_model(o.model);
  const auto w = read_window(o.window);
  const auto [out, trace] = forward(w, p);
  const LaneClass target = o.cls.empty() ? out.predicted_class : lane_class_from_string(o.cls);
  WindowMatrixd relevance;
  std::map<std::string, double> sinks;
  nlohmann::json method;
  if (o.method == "lrp") {
    LrpConfig cfg;
    cfg.epsilon = o.epsilon;
    cfg.ln_rule = ln_rule_from_string(o.ln_rule);
    cfg.omega_variant = omega_variant_from_string(o.variant);
    const auto e = explain<double>(trace, p, target, cfg);
    relevance = e.relevance;
    sinks = e.ledger.sinks;
    method = {{"name", "lrp"}, {"ln_rule", to_string(cfg.ln_rule)},
              {"omega_variant", to_string(cfg.omega_variant)}, {"epsilon", cfg.epsilon}};
  } else if (o.method == "ig") {
    IgConfig cfg;
    cfg.steps = o.steps;
    cfg.baseline = ig_baseline_from_string(o.baseline);
    relevance = integrated_gradients(w, p, target, cfg);
    method = {{"name", "ig"}, {"steps", cfg.steps}, {"baseline", to_string(cfg.baseline)}};
  } else {
    throw ValidationError("unknown method '" + o.method + "' (expected lrp or ig)");
  }
  const auto j = relevance_to_json(w.id, target, relevance, sinks, method);
  if (o.out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    write_json(o.out, j);
  }
  const auto sf = aggregate_super(aggregate_time(relevance));
  if (!o.explanation_out.empty()) write_json(o.explanation_out, explanation_to_json(sf, w.slot_ids));
  for (const auto& r : sf.ranked_top3) {
    std::fprintf(stderr, "%-12s %-9s %+.5f  %s\n", std::string(slot_name(r.slot)).c_str(),
                 std::string(to_string(r.feature)).c_str(), r.relevance,
                 std::string(to_string(r.bucket)).c_str());
  }
  return 0;
}

struct SimulateOpts {
  std::string config, record;
  std::optional<std::uint64_t> seed;
  double duration = 60.0;
  bool keys = false;
};

int run_simulate(const SimulateOpts& o) {
  twin::SimState s(sim_config(o.config, o.seed));
  twin::FrameWriter writer(o.record);
  const double period = 1.0 / s.cfg.frame_rate;
  std::size_t frames = 0;
  while (s.t + period <= o.duration + 1e-9) {
    twin::step_sim(s, period);
    writer.write(twin::snapshot(s, o.keys));
    ++frames;
  }
  std::printf("%zu frames (%.1f s) -> %s\n", frames, s.t, o.record.c_str());
  return 0;
}

struct GenOpts {
  std::string config, out;
  std::optional<std::uint64_t> seed;
  twin::GenerateConfig gen;
};

int run_gen(const GenOpts& o) {
  const Dataset d = twin::generate_dataset(sim_config(o.config, o.seed), o.gen);
  save_dataset(d, o.out);
  std::printf("%zu windows (train %zu, val %zu, test %zu) -> %s\n", d.size(), d.train.size(),
              d.val.size(), d.test.size(), o.out.c_str());
  return 0;
}

struct PerturbOpts {
  std::string model, data, out = "curves.csv", methods = "lrp-omega,lrp-identity,ig,random";
  std::string split = "test", fill = "sentinel", rank = "signed", variant = "literal";
  std::uint64_t seed = 1;
  std::size_t n = 0;
  int ig_steps = 50;
  double epsilon = 1e-3;
  bool one_shot = false;
};

std::vector<std::size_t> split_indices(const Dataset& d, const std::string& split) {
  if (split == "train") return d.train;
  if (split == "val") return d.val;
  if (split == "test") return d.test;
  if (split == "all") return d.all_indices();
  throw ValidationError("unknown split '" + split + "' (expected train, val, test or all)");
}

int run_perturb(const PerturbOpts& o) {
  const auto p = load_model(o.model);
  const Dataset d = load_dataset(o.data);
  const auto inst = correct_instances(d, split_indices(d, o.split), p, o.n);
  PerturbationConfig cfg;
  cfg.fill = occlusion_fill_from_string(o.fill);
  cfg.rank = rank_by_from_string(o.rank);
  cfg.recompute = !o.one_shot;
  cfg.seed = o.seed;
  std::vector<PerturbationCurve> curves;
  for (const auto& m : split(o.methods, ',')) {
    spdlog::info("perturbation test: {} on {} instances", m, inst.size());
    if (m == "random") {
      curves.push_back(random_occlusion(d, inst, p, cfg));
    } else if (m == "lrp-omega" || m == "lrp-identity") {
      LrpConfig lrp;
      lrp.epsilon = o.epsilon;
      lrp.ln_rule = m == "lrp-omega" ? LnRule::kOmega : LnRule::kIdentity;
      lrp.omega_variant = omega_variant_from_string(o.variant);
      curves.push_back(perturbation_test(d, inst, p, lrp_attribution(p, lrp), m, cfg));
    } else if (m == "ig") {
      IgConfig ig;
      ig.steps = o.ig_steps;
      curves.push_back(perturbation_test(d, inst, p, ig_attribution(p, ig), m, cfg));
    } else {
      throw ValidationError("unknown method '" + m +
                            "' (expected lrp-omega, lrp-identity, ig or random)");
    }
  }
  std::ofstream csv(o.out);
  if (!csv) throw Error("cannot write " + o.out);
  csv << "method,step,accuracy,n\n";
  for (const auto& c : curves) {
    for (std::size_t s = 0; s < c.accuracy.size(); ++s) {
      csv << c.method << ',' << s << ',' << c.accuracy[s] << ',' << c.instances << '\n';
    }
    std::printf("%-13s mean(1..5) %.4f  step14 %.4f\n", c.method.c_str(), mean_accuracy(c, 1, 5),
                c.accuracy.back());
  }
  return 0;
}

struct BenchOpts {
  std::string model, data, split = "all";
  int ig_steps = 50;
  std::size_t n = 1000;
};

int run_bench(const BenchOpts& o) {
  const auto p = load_model(o.model);
  const Dataset d = load_dataset(o.data);
  auto idx = split_indices(d, o.split);
  if (idx.size() > o.n) idx.resize(o.n);
  IgConfig ig;
  ig.steps = o.ig_steps;
  const auto r = timing_benchmark(d, idx, p, LrpConfig{}, ig);
  std::printf("instances %zu  lrp %.1f us  ig(%d) %.1f us  ratio %.2fx\n", r.instances,
              r.lrp_seconds * 1e6, r.ig_steps, r.ig_seconds * 1e6, r.ratio);
  return 0;
}

struct ServeOpts {
  std::string model, source = "sim", config, snapshot, method = "lrp", ln_rule = "omega";
  int workers = 2, port = 8765;
  double rate = 1.0, duration = -1.0, ttl = 5.0;
  std::optional<std::uint64_t> seed;
};

int run_serve(const ServeOpts& o) {
  auto params = std::make_shared<const LnLstmParamsd>(load_model(o.model));
  service::StackConfig cfg;
  cfg.workers = o.workers;
  cfg.port = o.port;
  cfg.adaptor.ttl = o.ttl;
  cfg.broker.ttl = o.ttl;
  if (!o.snapshot.empty()) cfg.adaptor.snapshot_path = o.snapshot;
  cfg.broker.method = {{"method", o.method}, {"ln_rule", o.ln_rule}};

  std::unique_ptr<twin::FrameSource> source;
  if (o.source == "sim") {
    const auto sim = sim_config(o.config, o.seed);
    cfg.adaptor.lane_count = sim.lane_count;
    cfg.adaptor.lane_width = sim.lane_width;
    source = std::make_unique<twin::SimSource>(sim, o.duration);
  } else if (o.source.starts_with("replay:")) {
    source = std::make_unique<twin::FileSource>(o.source.substr(7));
  } else {
    throw ValidationError("unknown source '" + o.source + "' (expected sim or replay:<file>)");
  }
  service::ServiceStack stack(params, cfg);
  spdlog::info("broker listening on ws://127.0.0.1:{}/ with {} workers", stack.port(), o.workers);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::stop_source stop;
  std::jthread watcher([&](std::stop_token st) {
    while (!st.stop_requested() && !g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    stop.request_stop();
  });
  const auto frames = twin::stream_replay(
      *source, o.rate,
      [&](const twin::Frame& f) {
        stack.adaptor().ingest(f);
        return true;
      },
      stop.get_token());
  const auto st = stack.broker().stats();
  spdlog::info("stream ended after {} frames; {} predictions, {} errors, {} dropped records",
               frames, st.predictions, st.errors, stack.adaptor().dropped());
  watcher.request_stop();
  return 0;
}

struct WorkerOpts {
  std::string model;
  int port = 8080;
};

int run_worker(const WorkerOpts& o) {
  auto params = std::make_shared<const LnLstmParamsd>(load_model(o.model));
  service::WorkerServer server(params, o.port);
  spdlog::info("worker listening on http://127.0.0.1:{}/predict", server.port());
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  return 0;
}

struct DumpOpts {
  std::string data, out;
  std::size_t index = 0;
};

int run_dump_window(const DumpOpts& o) {
  const Dataset d = load_dataset(o.data);
  if (o.index >= d.size()) throw ValidationError("window index out of range");
  const auto& item = d.items[o.index];
  auto j = window_to_json(item.window);
  j["label"] = to_string(item.label);
  write_json(o.out, j);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"xlane: explainable lane-change prediction"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  TrainOpts train_o;
  auto* train_cmd = app.add_subcommand("train", "Train the layer-normalized LSTM");
  train_cmd->add_option("--data", train_o.data, "Dataset directory")->required();
  train_cmd->add_option("--out", train_o.out, "Model file")->required();
  train_cmd->add_option("--epochs", train_o.cfg.epochs);
  train_cmd->add_option("--seed", train_o.cfg.seed);
  train_cmd->add_option("--hidden", train_o.cfg.hidden);
  train_cmd->add_option("--batch", train_o.cfg.batch_size);
  train_cmd->add_option("--lr", train_o.cfg.learning_rate);

  PredictOpts predict_o;
  auto* predict_cmd = app.add_subcommand("predict", "Predict the lane-change class of a window");
  predict_cmd->add_option("--model", predict_o.model)->required();
  predict_cmd->add_option("--window", predict_o.window)->required();
  predict_cmd->add_option("--out", predict_o.out);

  ExplainOpts explain_o;
  auto* explain_cmd = app.add_subcommand("explain", "Attribute a prediction to the 4x49 input");
  explain_cmd->add_option("--model", explain_o.model)->required();
  explain_cmd->add_option("--window", explain_o.window)->required();
  explain_cmd->add_option("--method", explain_o.method, "lrp or ig");
  explain_cmd->add_option("--class", explain_o.cls, "left, keep or right (default: predicted)");
  explain_cmd->add_option("--ln-rule", explain_o.ln_rule, "omega or identity");
  explain_cmd->add_option("--omega-variant", explain_o.variant, "literal or full");
  explain_cmd->add_option("--epsilon", explain_o.epsilon);
  explain_cmd->add_option("--steps", explain_o.steps, "Integrated gradients steps");
  explain_cmd->add_option("--baseline", explain_o.baseline, "sentinel or zero");
  explain_cmd->add_option("--out", explain_o.out, "relevance.json");
  explain_cmd->add_option("--explanation-out", explain_o.explanation_out, "explanation.json");

  SimulateOpts sim_o;
  auto* sim_cmd = app.add_subcommand("simulate", "Record a synthetic highway frame stream");
  sim_cmd->add_option("--config", sim_o.config, "key = value or JSON config");
  sim_cmd->add_option("--record", sim_o.record, "Frame file")->required();
  sim_cmd->add_option("--duration", sim_o.duration, "Seconds");
  sim_cmd->add_option("--seed", sim_o.seed);
  sim_cmd->add_flag("--keys", sim_o.keys, "Stamp simulator identities into the frames");

  GenOpts gen_o;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a label-balanced dataset");
  gen_cmd->add_option("--config", gen_o.config);
  gen_cmd->add_option("--n-per-class", gen_o.gen.n_per_class);
  gen_cmd->add_option("--seed", gen_o.seed);
  gen_cmd->add_option("--out", gen_o.out, "Dataset directory")->required();

  PerturbOpts perturb_o;
  auto* perturb_cmd = app.add_subcommand("perturb", "Run the perturbation test");
  perturb_cmd->add_option("--model", perturb_o.model)->required();
  perturb_cmd->add_option("--data", perturb_o.data)->required();
  perturb_cmd->add_option("--methods", perturb_o.methods);
  perturb_cmd->add_option("--seed", perturb_o.seed);
  perturb_cmd->add_option("--n", perturb_o.n, "Maximum number of instances (0 = all)");
  perturb_cmd->add_option("--split", perturb_o.split, "train, val, test or all");
  perturb_cmd->add_option("--fill", perturb_o.fill, "sentinel, zero or mean");
  perturb_cmd->add_option("--rank", perturb_o.rank, "signed or abs");
  perturb_cmd->add_option("--omega-variant", perturb_o.variant, "literal or full");
  perturb_cmd->add_option("--epsilon", perturb_o.epsilon);
  perturb_cmd->add_option("--ig-steps", perturb_o.ig_steps);
  perturb_cmd->add_flag("--one-shot", perturb_o.one_shot, "Rank once instead of per step");
  perturb_cmd->add_option("--out", perturb_o.out, "curves.csv");

  BenchOpts bench_o;
  auto* bench_cmd = app.add_subcommand("bench", "Time LRP against integrated gradients");
  bench_cmd->add_option("--model", bench_o.model)->required();
  bench_cmd->add_option("--data", bench_o.data)->required();
  bench_cmd->add_option("--ig-steps", bench_o.ig_steps);
  bench_cmd->add_option("--n", bench_o.n);
  bench_cmd->add_option("--split", bench_o.split);

  ServeOpts serve_o;
  auto* serve_cmd = app.add_subcommand("serve", "Run adaptor, broker and workers");
  serve_cmd->add_option("--model", serve_o.model)->required();
  serve_cmd->add_option("--source", serve_o.source, "sim or replay:<file>");
  serve_cmd->add_option("--config", serve_o.config, "Simulator config for --source sim");
  serve_cmd->add_option("--workers", serve_o.workers);
  serve_cmd->add_option("--port", serve_o.port, "WebSocket port");
  serve_cmd->add_option("--rate", serve_o.rate, "Replay speed factor (0 = unpaced)");
  serve_cmd->add_option("--duration", serve_o.duration, "Stop the simulator after N seconds");
  serve_cmd->add_option("--ttl", serve_o.ttl, "Identity and session ttl in seconds");
  serve_cmd->add_option("--snapshot", serve_o.snapshot, "Identity snapshot file");
  serve_cmd->add_option("--method", serve_o.method, "lrp or ig");
  serve_cmd->add_option("--ln-rule", serve_o.ln_rule, "omega or identity");
  serve_cmd->add_option("--seed", serve_o.seed);

  WorkerOpts worker_o;
  auto* worker_cmd = app.add_subcommand("worker", "Run one stateless prediction worker");
  worker_cmd->add_option("--model", worker_o.model)->required();
  worker_cmd->add_option("--port", worker_o.port);

  DumpOpts dump_o;
  auto* dump_cmd = app.add_subcommand("dump-window", "Write one dataset window as window.json");
  dump_cmd->add_option("--data", dump_o.data)->required();
  dump_cmd->add_option("--index", dump_o.index);
  dump_cmd->add_option("--out", dump_o.out)->required();

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (*train_cmd) return run_train(train_o);
    if (*predict_cmd) return run_predict(predict_o);
    if (*explain_cmd) return run_explain(explain_o);
    if (*sim_cmd) return run_simulate(sim_o);
    if (*gen_cmd) return run_gen(gen_o);
    if (*perturb_cmd) return run_perturb(perturb_o);
    if (*bench_cmd) return run_bench(bench_o);
    if (*serve_cmd) return run_serve(serve_o);
    if (*worker_cmd) return run_worker(worker_o);
    if (*dump_cmd) return run_dump_window(dump_o);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}

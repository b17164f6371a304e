// Command-line entry points: ingest, synth, simulate, compare, serve.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <pthread.h>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "httplib.h"
#include "triage/compare.hpp"
#include "triage/corpus.hpp"
#include "triage/engine.hpp"
#include "triage/error.hpp"
#include "triage/http_api.hpp"
#include "triage/service.hpp"
#include "triage/synthetic.hpp"

namespace fs = std::filesystem;
using namespace triage;

namespace {

// Writes next to the target and renames, so a failed command leaves nothing behind.
void write_atomic(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::validation, "cannot write " + path.string());
    out << text;
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      fail(ErrorCode::validation, "write failed for " + path.string());
    }
  }
  fs::rename(tmp, path);
}

void refuse_overwrite(const fs::path& path, bool force) {
  if (fs::exists(path) && !force)
    fail(ErrorCode::conflict, path.string() + " already exists (use --force to overwrite)");
}

// Persisted corpus files, or raw .jsonl / .csv datasets.
Corpus load_any_corpus(const fs::path& path) {
  if (!fs::exists(path)) fail(ErrorCode::not_found, "corpus " + path.string() + " does not exist");
  const auto ext = path.extension().string();
  if (ext == ".jsonl") return load_dataset(path, DatasetFormat::jsonl);
  if (ext == ".csv") return load_dataset(path, DatasetFormat::csv);
  return load_corpus(path).corpus;
}

struct IngestArgs {
  std::string input, format, out;
  bool force = false;
};

int cmd_ingest(const IngestArgs& a) {
  std::string format = a.format;
  if (format.empty()) format = fs::path(a.input).extension() == ".csv" ? "csv" : "jsonl";
  const auto parsed = parse_format(format);
  if (!parsed) fail(ErrorCode::validation, "--format must be jsonl or csv");
  refuse_overwrite(a.out, a.force);
  const Corpus corpus = load_dataset(a.input, *parsed);
  write_atomic(a.out, corpus_to_json(corpus).dump() + "\n");
  const auto& m = corpus.manifest();
  std::cout << "reports=" << m.report_count << " bugs=" << m.bug_count << " nonbugs=" << m.nonbug_count << "\n";
  return 0;
}

struct SynthArgs {
  std::string out;
  std::size_t count = 5000;
  std::uint64_t seed = 1;
  double noise = 0.02;
  bool force = false;
};

int cmd_synth(const SynthArgs& a) {
  refuse_overwrite(a.out, a.force);
  synthetic::Options options;
  options.count = a.count;
  options.seed = a.seed;
  options.label_noise = a.noise;
  const Corpus corpus = synthetic::generate(options);
  write_atomic(a.out, synthetic::to_jsonl(corpus));
  const auto& m = corpus.manifest();
  std::cout << "reports=" << m.report_count << " bugs=" << m.bug_count << " nonbugs=" << m.nonbug_count << "\n";
  return 0;
}

struct SimulateArgs {
  std::string corpus, strategy = "effort-aware", backend = "builtin", out, start_mode = "cold";
  long long k = 0, timesteps = 10, pseudo_s = 1, test_size = 0, initial_labels = 0;
  std::uint64_t seed = 0;
  std::size_t backend_dim = 768;
  bool timing = false, force = false;
};

int cmd_simulate(const SimulateArgs& a) {
  refuse_overwrite(a.out, a.force);
  RunConfig config;
  config.k = a.k;
  config.timesteps = a.timesteps;
  config.pseudo_s = a.pseudo_s;
  config.strategy = *sampling::parse_strategy(a.strategy);
  config.seed = a.seed;
  config.test_size = a.test_size;
  config.initial_label_count = a.initial_labels;
  config.start_mode = a.start_mode == "warm" ? StartMode::warm : StartMode::cold;
  config.record_timing = a.timing;
  if (a.backend != "builtin") {
    config.backend.kind = "remote";
    config.backend.endpoint = a.backend;
    config.backend.dim = a.backend_dim;
  }
  config.validate();

  const Corpus corpus = load_any_corpus(a.corpus);
  const auto result = Engine::run_simulation(corpus, config);
  const TraceContext ctx{std::string(sampling::to_string(config.strategy)), config.k, config.pseudo_s, config.seed};
  write_atomic(a.out, trace_csv(ctx, result.trace));

  std::cout << "timesteps=" << result.trace.size();
  if (!result.trace.empty() && result.trace.back().metrics) std::cout << " final_f1=" << result.trace.back().metrics->f1;
  std::cout << (result.depleted ? " depleted=true" : "") << "\n";
  return 0;
}

struct CompareArgs {
  std::vector<std::string> traces;
  std::string metric = "f1", test = "scott-knott", out;
  double alpha = 0.05;
};

int cmd_compare(const CompareArgs& a) {
  std::vector<TraceTable> tables;
  for (const auto& path : a.traces) tables.push_back(read_trace_csv(path));
  const auto report = compare::compare_traces(tables, a.metric, *compare::parse_test(a.test), a.alpha);
  if (!a.out.empty()) write_atomic(a.out, report.csv());
  std::cout << report.text();
  return 0;
}

struct ServeArgs {
  std::vector<std::string> corpora;
  std::string host = "127.0.0.1", state_dir;
  int port = 8080;
};

int cmd_serve(const ServeArgs& a) {
  // Block the shutdown signals before any thread starts; a dedicated thread
  // waits for them and stops the server.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  service::RunService svc(a.state_dir);
  for (const auto& path : a.corpora) {
    Corpus corpus = load_any_corpus(path);
    svc.add_corpus(fs::path(path).stem().string(), std::move(corpus));
  }
  const auto restored = svc.restore();

  httplib::Server server;
  // Without SO_REUSEPORT a second server on the same port fails to bind.
  server.set_socket_options([](int sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  http::register_routes(server, svc);
  if (!server.bind_to_port(a.host, a.port)) {
    std::cerr << "error: cannot bind " << a.host << ":" << a.port << "\n";
    return 1;
  }
  std::cerr << "serving on http://" << a.host << ":" << a.port << " (" << restored.size() << " runs restored)\n";

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  server.listen_after_bind();
  // listen can also return on its own (socket error); wake the waiter then.
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  svc.flush();
  std::cerr << "state flushed to " << a.state_dir << "\n";
  return 0;
}

std::string env_name(const std::string& flag) {
  std::string out = "TRIAGE_";
  for (char c : flag) out += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Effort-aware active learning for bug report triage"};
  app.require_subcommand(1);

  // Every flag can also come from TRIAGE_<FLAG>; an explicit flag wins.
  auto opt = [](CLI::App* cmd, const std::string& flag, auto& var, const std::string& help) {
    return cmd->add_option("--" + flag, var, help)->envname(env_name(flag));
  };

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Load a JSONL/CSV dataset and write a persisted corpus");
  opt(c_ingest, "input", ingest.input, "Dataset file")->required()->check(CLI::ExistingFile);
  opt(c_ingest, "format", ingest.format, "jsonl or csv (default: from the file extension)")
      ->check(CLI::IsMember({"jsonl", "csv"}));
  opt(c_ingest, "out", ingest.out, "Output corpus file")->required();
  c_ingest->add_flag("--force", ingest.force, "Overwrite an existing output")->envname("TRIAGE_FORCE");

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a labeled synthetic issue corpus as JSONL");
  opt(c_synth, "out", synth.out, "Output JSONL file")->required();
  opt(c_synth, "count", synth.count, "Number of reports")->capture_default_str();
  opt(c_synth, "seed", synth.seed, "Generator seed")->capture_default_str();
  opt(c_synth, "noise", synth.noise, "Probability of a flipped oracle label")->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  c_synth->add_flag("--force", synth.force, "Overwrite an existing output")->envname("TRIAGE_FORCE");

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Run an oracle-labeled active learning simulation");
  opt(c_sim, "corpus", sim.corpus, "Corpus file (persisted, .jsonl or .csv)")->required();
  opt(c_sim, "strategy", sim.strategy, "effort-aware, uncertainty, random or confidence")
      ->capture_default_str()
      ->check(CLI::IsMember({"effort-aware", "uncertainty", "random", "confidence"}));
  opt(c_sim, "k", sim.k, "Reports queried per timestep")->required();
  opt(c_sim, "timesteps", sim.timesteps, "Number of timesteps")->capture_default_str();
  opt(c_sim, "pseudo-s", sim.pseudo_s, "Pseudo-labels per human label")->capture_default_str();
  opt(c_sim, "seed", sim.seed, "Run seed")->capture_default_str();
  opt(c_sim, "backend", sim.backend, "builtin, or the base URL of a remote model backend")->capture_default_str();
  opt(c_sim, "backend-dim", sim.backend_dim, "Embedding dimension declared by a remote backend")
      ->capture_default_str();
  opt(c_sim, "test-size", sim.test_size, "Held-out test reports")->capture_default_str();
  opt(c_sim, "start-mode", sim.start_mode, "cold or warm")->capture_default_str()->check(CLI::IsMember({"cold", "warm"}));
  opt(c_sim, "initial-labels", sim.initial_labels, "Cold-start labeled set size (0: same as k)")->capture_default_str();
  opt(c_sim, "out", sim.out, "Trace CSV output")->required();
  c_sim->add_flag("--timing", sim.timing, "Record wall-clock duration_ms (traces are then not reproducible)")
      ->envname("TRIAGE_TIMING");
  c_sim->add_flag("--force", sim.force, "Overwrite an existing output")->envname("TRIAGE_FORCE");

  CompareArgs cmp;
  auto* c_cmp = app.add_subcommand("compare", "Compare run traces with Scott-Knott or Wilcoxon");
  opt(c_cmp, "traces", cmp.traces, "Trace CSV files")->required()->check(CLI::ExistingFile);
  opt(c_cmp, "metric", cmp.metric, "f1, precision, recall, accuracy, readability or identifiability")
      ->capture_default_str()
      ->check(CLI::IsMember({"f1", "precision", "recall", "accuracy", "readability", "identifiability"}));
  opt(c_cmp, "test", cmp.test, "scott-knott or wilcoxon")->capture_default_str()
      ->check(CLI::IsMember({"scott-knott", "wilcoxon"}));
  opt(c_cmp, "alpha", cmp.alpha, "Significance level for wilcoxon")->capture_default_str();
  opt(c_cmp, "out", cmp.out, "CSV report output");

  ServeArgs serve;
  auto* c_serve = app.add_subcommand("serve", "Serve the labeling API");
  opt(c_serve, "corpus", serve.corpora, "Corpus file(s); each is registered under its file stem")->required();
  opt(c_serve, "port", serve.port, "TCP port")->capture_default_str();
  opt(c_serve, "host", serve.host, "Bind address")->capture_default_str();
  opt(c_serve, "state-dir", serve.state_dir, "Directory for persisted run state")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*c_ingest) return cmd_ingest(ingest);
    if (*c_synth) return cmd_synth(synth);
    if (*c_sim) return cmd_simulate(sim);
    if (*c_cmp) return cmd_compare(cmp);
    if (*c_serve) return cmd_serve(serve);
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

// itree: batch access to the discovery engine.
//
//   itree variants LOG [--format tsv|json]
//   itree discover LOG --select top:N|ids:1,4|share>=0.05 [-o OUT.ptml]
//   itree extend LOG TREE.ptml --select SEL [--added SEL] [-o OUT.ptml]
//   itree check LOG TREE.ptml [--format text|json]
//   itree convert TREE.ptml [-o OUT.pnml]
//   itree serve [--host H] [--port P] [--static-dir DIR] [--state-dir DIR]
//
// Exit codes: 0 ok, 2 input/parse, 3 selection, 4 consistency, 5 environment.

#include <signal.h>
#include <unistd.h>

#include <atomic>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "itree/http_api.hpp"
#include "itree/session.hpp"

using namespace itree;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kInput = 2, kSelection = 3, kConsistency = 4, kEnvironment = 5 };

struct ExitError : std::runtime_error {
  ExitError(int code, const std::string& msg) : std::runtime_error(msg), code(code) {}
  int code;
};

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptySelection:
    case ErrorCode::UnknownVariant:
      return kSelection;
    case ErrorCode::InconsistentModel:
    case ErrorCode::InconsistentInput:
      return kConsistency;
    case ErrorCode::SearchBudgetExceeded:
    case ErrorCode::BudgetExceeded:
      return kEnvironment;
    default:
      return kInput;
  }
}

bool use_color(FILE* stream) {
  const char* no_color = std::getenv("NO_COLOR");
  return (no_color == nullptr || *no_color == '\0') && ::isatty(::fileno(stream));
}

std::string paint(const std::string& text, const char* code, bool on) {
  return on ? std::string("\x1b[") + code + "m" + text + "\x1b[0m" : text;
}

std::string read_input(const std::string& path) {
  try {
    return io::read_file(path);
  } catch (const std::runtime_error& e) {
    throw ExitError(kInput, e.what());
  }
}

void write_output(const std::string& path, const std::string& bytes) {
  if (path.empty() || path == "-") {
    std::cout << bytes;
    return;
  }
  try {
    io::write_file(path, bytes);
  } catch (const std::runtime_error& e) {
    throw ExitError(kEnvironment, e.what());
  }
}

struct LoadedLog {
  EventLog log;
  std::vector<TraceVariant> variants;
  std::size_t total_cases = 0;
};

LoadedLog load_log(const std::string& path) {
  LoadedLog out;
  out.log = parse_xes(read_input(path), path);
  out.variants = extract_variants(out.log);
  for (const auto& v : out.variants) out.total_cases += v.case_count;
  return out;
}

ProcessTree load_tree(const std::string& path) {
  ProcessTree tree = parse_ptml(read_input(path));
  require_valid(tree);
  return tree;
}

std::string join(const ActivitySequence& acts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < acts.size(); ++i) {
    if (i) out += sep;
    out += acts[i];
  }
  return out;
}

std::size_t parse_count(std::string_view s, const std::string& selector) {
  std::size_t n = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw ExitError(kInput, "bad selector '" + selector + "'");
  }
  return n;
}

/// top:N | ids:1,4,7 | share>=0.05
std::vector<TraceVariant> select_variants(const std::string& selector, const std::vector<TraceVariant>& variants) {
  std::vector<TraceVariant> out;
  const std::string_view s = selector;
  if (s.starts_with("top:")) {
    const auto n = parse_count(s.substr(4), selector);
    for (std::size_t i = 0; i < std::min(n, variants.size()); ++i) out.push_back(variants[i]);
  } else if (s.starts_with("ids:")) {
    std::set<std::size_t> seen;
    std::string_view rest = s.substr(4);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const auto id = parse_count(rest.substr(0, comma), selector);
      if (id >= variants.size()) fail(ErrorCode::UnknownVariant, "no variant " + std::to_string(id));
      if (seen.insert(id).second) out.push_back(variants[id]);
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    }
  } else if (s.starts_with("share>=")) {
    double threshold = 0;
    const auto body = s.substr(7);
    const auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), threshold);
    if (ec != std::errc{} || ptr != body.data() + body.size() || body.empty()) {
      throw ExitError(kInput, "bad selector '" + selector + "'");
    }
    for (const auto& v : variants) {
      if (v.frequency_share >= threshold) out.push_back(v);
    }
  } else {
    throw ExitError(kInput, "bad selector '" + selector + "' (top:N | ids:1,4,7 | share>=0.05)");
  }
  if (out.empty()) fail(ErrorCode::EmptySelection, "selector '" + selector + "' matches no variant");
  return out;
}

// -- commands ---------------------------------------------------------------

int cmd_variants(const std::string& log_path, const std::string& format) {
  const auto log = load_log(log_path);
  if (format == "json") {
    json rows = json::array();
    for (const auto& v : log.variants) {
      rows.push_back({{"rank", v.variant_id},
                      {"count", v.case_count},
                      {"share", wire::decimal_fraction(v.case_count, log.total_cases)},
                      {"activities", v.activities}});
    }
    std::cout << rows.dump(2) << "\n";
    return kOk;
  }
  std::cout << "rank\tcount\tshare\tactivities\n";
  for (const auto& v : log.variants) {
    std::cout << v.variant_id << '\t' << v.case_count << '\t' << wire::decimal_fraction(v.case_count, log.total_cases)
              << '\t' << join(v.activities, ",") << '\n';
  }
  return kOk;
}

// Confirmation lines go to stdout unless the model itself does.
std::ostream& report_stream(const std::string& out_path) {
  return out_path.empty() || out_path == "-" ? std::cerr : std::cout;
}

int cmd_discover(const std::string& log_path, const std::string& selector, const std::string& out_path) {
  const auto log = load_log(log_path);
  const auto selected = select_variants(selector, log.variants);
  const ProcessTree tree = discover_from_variants(selected);
  const auto net = tree_to_petri_net(tree);
  auto& report = report_stream(out_path);
  for (const auto& v : selected) {
    const bool fits = align(net, v.activities).cost == 0;
    report << "variant " << v.variant_id << ": " << (fits ? "fits" : "DOES NOT FIT") << "\n";
    if (!fits) throw ExitError(kConsistency, "discovered model misses variant " + std::to_string(v.variant_id));
  }
  write_output(out_path, serialize_ptml(tree));
  return kOk;
}

int cmd_extend(const std::string& log_path, const std::string& tree_path, const std::string& selector,
               const std::string& added_selector, const std::string& out_path, const AlignmentOptions& options) {
  const auto log = load_log(log_path);
  ProcessTree tree = load_tree(tree_path);
  const auto selected = select_variants(selector, log.variants);

  AddedTraceSet added;
  std::vector<std::size_t> added_ids;
  if (!added_selector.empty()) {
    const auto net = tree_to_petri_net(tree);
    for (const auto& v : select_variants(added_selector, log.variants)) {
      if (align(net, v.activities, options).cost != 0) {
        fail(ErrorCode::InconsistentModel,
             "previously added variant " + std::to_string(v.variant_id) + " does not fit " + tree_path);
      }
      added.insert(v.activities);
      added_ids.push_back(v.variant_id);
    }
  }
  auto ordered = selected;
  std::sort(ordered.begin(), ordered.end(),
            [](const TraceVariant& a, const TraceVariant& b) { return a.variant_id < b.variant_id; });
  for (const auto& v : ordered) {
    tree = add_trace(tree, added, v.activities, options);
    added.insert(v.activities);
    added_ids.push_back(v.variant_id);
  }

  const auto net = tree_to_petri_net(tree);
  auto& report = report_stream(out_path);
  std::sort(added_ids.begin(), added_ids.end());
  added_ids.erase(std::unique(added_ids.begin(), added_ids.end()), added_ids.end());
  for (auto id : added_ids) {
    const bool fits = align(net, log.variants[id].activities, options).cost == 0;
    report << "variant " << id << ": " << (fits ? "fits" : "DOES NOT FIT") << "\n";
    if (!fits) throw ExitError(kConsistency, "postcondition violated for variant " + std::to_string(id));
  }
  write_output(out_path, serialize_ptml(tree));
  return kOk;
}

int cmd_check(const std::string& log_path, const std::string& tree_path, const std::string& format,
              const AlignmentOptions& options, unsigned threads) {
  const auto log = load_log(log_path);
  const ProcessTree tree = load_tree(tree_path);
  const auto verdicts = conformance_report(tree, log.variants, options, threads);
  std::size_t accepted = 0;
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    if (verdicts[i].verdict == Verdict::Accepted) accepted += log.variants[i].case_count;
  }
  const std::string fraction = wire::decimal_fraction(accepted, log.total_cases);
  if (format == "json") {
    json rows = json::array();
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
      rows.push_back({{"variant_id", verdicts[i].variant_id},
                      {"case_count", log.variants[i].case_count},
                      {"verdict", to_string(verdicts[i].verdict)}});
    }
    std::cout << json{{"variants", rows},
                      {"accepted_cases", accepted},
                      {"total_cases", log.total_cases},
                      {"accepted_fraction", fraction}}
                     .dump(2)
              << "\n";
    return kOk;
  }
  const bool color = use_color(stdout);
  std::cout << "variant\tcount\tverdict\n";
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    const std::string v(to_string(verdicts[i].verdict));
    const char* c = verdicts[i].verdict == Verdict::Accepted ? "32" : verdicts[i].verdict == Verdict::Rejected ? "31" : "33";
    std::cout << verdicts[i].variant_id << '\t' << log.variants[i].case_count << '\t' << paint(v, c, color) << '\n';
  }
  std::cout << "accepted cases: " << accepted << "/" << log.total_cases << " (" << fraction << ")\n";
  return kOk;
}

int cmd_convert(const std::string& tree_path, const std::string& out_path) {
  const ProcessTree tree = load_tree(tree_path);
  write_output(out_path, serialize_pnml(tree_to_petri_net(tree)));
  return kOk;
}

int cmd_serve(const std::string& host, int port, const std::string& static_dir, const std::string& state_dir) {
  // Block the shutdown signals before any thread starts; one thread waits for them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  SessionService service;
  if (!state_dir.empty()) {
    const auto n = service.load_all(state_dir);
    if (n) std::cerr << "restored " << n << " session(s) from " << state_dir << "\n";
  }
  std::optional<std::filesystem::path> static_path;
  if (!static_dir.empty()) {
    if (!std::filesystem::is_directory(static_dir)) throw ExitError(kEnvironment, "no such directory " + static_dir);
    static_path = static_dir;
  }
  HttpApi api(service, static_path);
  int bound = port;
  if (port == 0) {
    bound = api.bind_any_port(host);
    if (bound < 0) throw ExitError(kEnvironment, "cannot bind " + host);
  } else if (!api.bind(host, port)) {
    throw ExitError(kEnvironment, "cannot bind " + host + ":" + std::to_string(port));
  }
  std::cerr << "listening on http://" << host << ":" << bound << std::endl;

  std::atomic<bool> done{false};
  std::thread waiter([&] {
    const timespec tick{0, 200'000'000};
    while (!done) {
      if (sigtimedwait(&signals, nullptr, &tick) > 0) {
        api.stop();
        return;
      }
    }
  });
  api.listen_after_bind();
  done = true;
  waiter.join();
  if (!state_dir.empty()) {
    service.save_all(state_dir);
    std::cerr << "saved sessions to " << state_dir << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interactive incremental process discovery, batch mode"};
  app.require_subcommand(1);

  std::string log_path, tree_path, selector, added, out_path, format = "tsv";
  std::size_t state_cap = AlignmentOptions{}.state_cap;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());

  auto* variants = app.add_subcommand("variants", "List trace variants by frequency");
  variants->add_option("log", log_path, "XES log (.xes or .xes.gz)")->required();
  variants->add_option("--format", format, "tsv or json")->check(CLI::IsMember({"tsv", "json"}));

  auto* discover = app.add_subcommand("discover", "Discover an initial model from selected variants");
  discover->add_option("log", log_path)->required();
  discover->add_option("--select", selector, "top:N | ids:1,4,7 | share>=0.05")->required();
  discover->add_option("-o,--output", out_path, "PTML output (default stdout)");

  auto* extend = app.add_subcommand("extend", "Add variants to an existing model");
  extend->add_option("log", log_path)->required();
  extend->add_option("tree", tree_path, "PTML model")->required();
  extend->add_option("--select", selector, "variants to add")->required();
  extend->add_option("--added", added, "variants added earlier; they must fit the model");
  extend->add_option("-o,--output", out_path, "PTML output (default stdout)");
  extend->add_option("--state-cap", state_cap, "alignment search budget");

  auto* check = app.add_subcommand("check", "Conformance of every variant against a model");
  check->add_option("log", log_path)->required();
  check->add_option("tree", tree_path)->required();
  std::string check_format = "text";
  check->add_option("--format", check_format, "text or json")->check(CLI::IsMember({"text", "json"}));
  check->add_option("--state-cap", state_cap, "alignment search budget");
  check->add_option("--threads", threads, "worker threads");

  auto* convert = app.add_subcommand("convert", "Convert a PTML model to PNML");
  convert->add_option("tree", tree_path)->required();
  convert->add_option("-o,--output", out_path, "PNML output (default stdout)");

  std::string host = "127.0.0.1", static_dir, state_dir;
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  serve->add_option("--host", host);
  serve->add_option("--port", port, "0 picks a free port");
  serve->add_option("--static-dir", static_dir, "directory served at /");
  serve->add_option("--state-dir", state_dir, "session snapshots are loaded from and saved to here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInput;
  }

  const AlignmentOptions options{.state_cap = state_cap};
  try {
    if (*variants) return cmd_variants(log_path, format);
    if (*discover) return cmd_discover(log_path, selector, out_path);
    if (*extend) return cmd_extend(log_path, tree_path, selector, added, out_path, options);
    if (*check) return cmd_check(log_path, tree_path, check_format, options, threads);
    if (*convert) return cmd_convert(tree_path, out_path);
    if (*serve) return cmd_serve(host, port, static_dir, state_dir);
  } catch (const ExitError& e) {
    std::cerr << "itree: " << e.what() << "\n";
    return e.code;
  } catch (const Error& e) {
    std::cerr << "itree: " << to_string(e.code()) << ": " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "itree: " << e.what() << "\n";
    return kEnvironment;
  }
  return kInput;
}

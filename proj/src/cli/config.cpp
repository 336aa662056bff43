#include "sketchprune/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <fstream>
#include <set>

namespace sketchprune::cli {

namespace {

using nlohmann::json;

const std::set<std::string> kCommands = {"verify", "pipeline", "histogram", "ntk-demo"};

std::uint64_t parse_seed_text(const std::string& text, const std::string& origin) {
  std::uint64_t value = 0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw UsageError(origin + " is not a nonnegative integer seed: '" + text + "'");
  }
  return value;
}

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError("config " + path + ": " + e.what());
  }
  if (!doc.is_object()) throw UsageError("config " + path + " must be a JSON object");
  return doc;
}

template <typename T>
std::vector<T> as_list(const json& v) {
  if (v.is_array()) return v.get<std::vector<T>>();
  return {v.get<T>()};
}

// Fills every field the command line left unset from the JSON document.
void apply_config(const json& doc, Options& o, bool seed_from_flag, bool s_from_flag,
                  bool methods_from_flag) {
  for (const auto& [key, value] : doc.items()) {
    try {
      if (key == "d") {
        if (!o.d) o.d = value.get<Index>();
      } else if (key == "n") {
        if (!o.n) o.n = value.get<Index>();
      } else if (key == "s") {
        if (!s_from_flag) o.s = as_list<Index>(value);
      } else if (key == "density") {
        if (!o.density) o.density = value.get<double>();
      } else if (key == "method") {
        if (!o.method) o.method = value.get<std::string>();
      } else if (key == "methods") {
        if (!methods_from_flag) o.methods = as_list<std::string>(value);
      } else if (key == "seed") {
        if (!seed_from_flag) o.seeds = as_list<std::uint64_t>(value);
      } else if (key == "trials") {
        if (!o.trials) o.trials = value.get<Index>();
      } else if (key == "noise-std" || key == "noise_std") {
        if (!o.noise_std) o.noise_std = value.get<double>();
      } else if (key == "steps") {
        if (!o.steps) o.steps = value.get<Index>();
      } else if (key == "lr") {
        if (!o.lr) o.lr = value.get<double>();
      } else if (key == "width") {
        if (!o.width) o.width = value.get<Index>();
      } else if (key == "bins") {
        if (!o.bins) o.bins = value.get<Index>();
      } else if (key == "out") {
        if (!o.out) o.out = value.get<std::string>();
      } else if (key == "threads") {
        o.threads = value.get<unsigned>();
      } else if (key == "timing") {
        o.timing = o.timing || value.get<bool>();
      } else {
        throw UsageError("unknown config key '" + key + "'");
      }
    } catch (const json::exception& e) {
      throw UsageError("config key '" + key + "': " + e.what());
    }
  }
}

void validate(const Options& o) {
  if (o.d && *o.d < 1) throw UsageError("--d must be >= 1");
  if (o.n && *o.n < 1) throw UsageError("--n must be >= 1");
  for (Index s : o.s) {
    if (s < 1) throw UsageError("--s values must be >= 1");
  }
  if (o.density && !(*o.density > 0.0 && *o.density <= 1.0)) {
    throw UsageError("--density must lie in (0, 1]");
  }
  if (o.trials && *o.trials < 2) throw UsageError("--trials must be >= 2");
  if (o.noise_std && !(*o.noise_std >= 0.0)) throw UsageError("--noise-std must be >= 0");
  if (o.steps && *o.steps < 0) throw UsageError("--steps must be >= 0");
  if (o.lr && !(*o.lr >= 0.0)) throw UsageError("--lr must be >= 0 (0 picks the default)");
  if (o.width && *o.width < 1) throw UsageError("--width must be >= 1");
  if (o.bins && *o.bins < 1) throw UsageError("--bins must be >= 1");
  if (o.threads < 1) throw UsageError("--threads must be >= 1");
  if (o.seeds.empty()) {
    throw UsageError("a seed is required: pass --seed, set it in --config, or set SKETCHPRUNE_SEED");
  }
}

}  // namespace

Options parse_options(int argc, const char* const* argv, const char* env_seed) {
  CLI::App app{"Sketch-based pruning at initialization: bound checks and experiments",
               "sketchprune"};
  app.require_subcommand(1);
  app.fallthrough();

  Options o;
  Index d = 0, n = 0, trials = 0, steps = 0, width = 0, bins = 0;
  double density = 0.0, noise_std = 0.0, lr = 0.0;
  std::string method, out, config_path;
  unsigned threads = 1;

  auto* opt_d = app.add_option("--d", d, "Weight dimension");
  auto* opt_n = app.add_option("--n", n, "Number of examples");
  auto* opt_s = app.add_option("--s", o.s, "Sketch draws or kept weights; comma list allowed")
                    ->delimiter(',');
  auto* opt_density = app.add_option("--density", density, "Kept fraction in (0, 1]");
  auto* opt_method = app.add_option("--method", method, "Selection method");
  auto* opt_methods =
      app.add_option("--methods", o.methods, "Comma list of pipeline methods")->delimiter(',');
  auto* opt_seed = app.add_option("--seed", o.seeds, "Seed; comma list allowed")->delimiter(',');
  auto* opt_trials = app.add_option("--trials", trials, "Monte Carlo trials");
  auto* opt_noise = app.add_option("--noise-std", noise_std, "Label noise standard deviation");
  auto* opt_steps = app.add_option("--steps", steps, "Gradient descent steps");
  auto* opt_lr = app.add_option("--lr", lr, "Learning rate (0 picks the default)");
  auto* opt_width = app.add_option("--width", width, "Hidden width of the tiny MLP");
  auto* opt_bins = app.add_option("--bins", bins, "Histogram bins");
  auto* opt_out = app.add_option("--out", out, "Output CSV path (stdout if absent)");
  app.add_option("--config", config_path, "JSON file of flag values");
  auto* opt_threads = app.add_option("--threads", threads, "Worker threads");
  app.add_flag("--timing", o.timing, "Record wall-clock time per row");

  auto* verify = app.add_subcommand("verify", "Run a verification suite");
  verify->add_option("suite", o.suite,
                     "lemma1 | lemma2 | lemma3 | theorem1 | lemma4 | snip-equiv | "
                     "synflow-equiv | ntk")
      ->required();
  app.add_subcommand("pipeline", "Paired pruning pipeline over seeds, methods and s");
  app.add_subcommand("histogram", "Magnitude histogram of selected vs all weights");
  app.add_subcommand("ntk-demo", "Tiny MLP linearized-feature masking report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested(app.help());
  } catch (const CLI::CallForAllHelp&) {
    throw HelpRequested(app.help("", CLI::AppFormatMode::All));
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }
  for (const auto* sub : app.get_subcommands()) o.command = sub->get_name();

  if (opt_d->count()) o.d = d;
  if (opt_n->count()) o.n = n;
  if (opt_density->count()) o.density = density;
  if (opt_method->count()) o.method = method;
  if (opt_trials->count()) o.trials = trials;
  if (opt_noise->count()) o.noise_std = noise_std;
  if (opt_steps->count()) o.steps = steps;
  if (opt_lr->count()) o.lr = lr;
  if (opt_width->count()) o.width = width;
  if (opt_bins->count()) o.bins = bins;
  if (opt_out->count()) o.out = out;
  if (opt_threads->count()) o.threads = threads;

  if (!config_path.empty()) {
    const unsigned flag_threads = o.threads;
    apply_config(load_config(config_path), o, opt_seed->count() > 0, opt_s->count() > 0,
                 opt_methods->count() > 0);
    if (opt_threads->count()) o.threads = flag_threads;
  }
  if (o.seeds.empty() && env_seed != nullptr && *env_seed != '\0') {
    o.seeds.push_back(parse_seed_text(env_seed, "SKETCHPRUNE_SEED"));
  }
  if (!kCommands.count(o.command)) throw UsageError("unknown command " + o.command);
  validate(o);
  return o;
}

}  // namespace sketchprune::cli

#include "fimscore/cli/cli.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "fimscore/errors.hpp"

namespace fimscore::cli {

namespace {

struct Options {
  GenDataOptions gen_data;
  TrainOptions train;
  FeaturesOptions features;
  FitOptions fit;
  ScoreOptions score;
  EvalOptions eval;
  FimProbeOptions fim_probe;
  InvarianceOptions invariance;
  TvVolumeOptions tv_volume;
  std::string config;
};

struct Command {
  CLI::App* app;
  std::function<int(RunContext&)> run;
};

CLI::Option* add_seed(CLI::App* sub, std::uint64_t& seed) {
  return sub->add_option("--seed", seed, "RNG seed (falls back to $FIMSCORE_SEED, then 0)")->envname("FIMSCORE_SEED");
}

std::map<std::string, Command> build(CLI::App& app, Options& o) {
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  std::map<std::string, Command> cmds;
  auto add = [&](const std::string& name, const std::string& help, std::function<int(RunContext&)> run) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", o.config, "flat key=value file; command-line flags take precedence");
    cmds[name] = {sub, std::move(run)};
    return sub;
  };

  auto* s = add("gen-data", "sample a synthetic dataset", [&o](RunContext& c) { return cmd_gen_data(o.gen_data, c); });
  s->add_option("--dist", o.gen_data.dist, "two_moons | rings | gauss_grid | checkerboard | uniform_square");
  s->add_option("--n", o.gen_data.n, "number of points");
  add_seed(s, o.gen_data.seed);
  s->add_option("--out", o.gen_data.out, "output directory")->required();
  s->add_option("--name", o.gen_data.name, "dataset name (default: the distribution)");
  s->add_option("--eval-fraction", o.gen_data.eval_fraction, "trailing fraction of rows tagged eval");
  s->add_option("--noise", o.gen_data.noise, "two_moons, rings");
  s->add_option("--radii", o.gen_data.radii, "rings")->delimiter(',');
  s->add_option("--sigma", o.gen_data.sigma, "gauss_grid");
  s->add_option("--spacing", o.gen_data.spacing, "gauss_grid");
  s->add_option("--k", o.gen_data.k, "gauss_grid");
  s->add_option("--cells", o.gen_data.cells, "checkerboard");
  s->add_option("--cell-size", o.gen_data.cell_size, "checkerboard");
  s->add_option("--side", o.gen_data.side, "uniform_square");

  s = add("train", "fit a density model by maximum likelihood", [&o](RunContext& c) { return cmd_train(o.train, c); });
  s->add_option("--data", o.train.data, "dataset (.dmat) with train rows")->required();
  s->add_option("--out", o.train.out, "output directory")->required();
  s->add_option("--model", o.train.model, "flow | gaussian");
  s->add_option("--blocks", o.train.blocks, "coupling blocks");
  s->add_option("--hidden", o.train.hidden, "hidden units per block");
  s->add_option("--clamp", o.train.clamp, "log-scale clamp");
  s->add_option("--init-scale", o.train.init_scale, "std of the initial output weights");
  s->add_option("--epochs", o.train.epochs);
  s->add_option("--batch-size", o.train.batch_size);
  s->add_option("--lr", o.train.lr, "Adam learning rate");
  s->add_option("--fit-fraction", o.train.fit_fraction, "train rows held out for detector fitting");
  add_seed(s, o.train.seed);

  s = add("features", "layer-wise gradient norms of disjoint batches",
          [&o](RunContext& c) { return cmd_features(o.features, c); });
  s->add_option("--model", o.features.model, "checkpoint")->required();
  s->add_option("--data", o.features.data, "dataset (.dmat)")->required();
  s->add_option("--out", o.features.out, "output directory")->required();
  s->add_option("--split", o.features.split, "train | fit | eval | all");
  s->add_option("--batch-size", o.features.batch_size);
  s->add_option("--max-batches", o.features.max_batches, "0 = all full batches");
  s->add_option("--floor", o.features.floor, "floor applied before taking logs");

  s = add("fit", "fit the per-layer Gaussian detector", [&o](RunContext& c) { return cmd_fit(o.fit, c); });
  s->add_option("--features", o.fit.features, "feature cache CSV")->required();
  s->add_option("--out", o.fit.out, "output directory")->required();

  s = add("score", "score batches", [&o](RunContext& c) { return cmd_score(o.score, c); });
  s->add_option("--method", o.score.method, "ours | fisher | typicality | likelihood");
  s->add_option("--out", o.score.out, "output directory")->required();
  s->add_option("--detector", o.score.detector, "detector JSON (ours, fisher)");
  s->add_option("--features", o.score.features, "feature cache CSV (ours, fisher)");
  s->add_option("--model", o.score.model, "checkpoint (typicality, likelihood)");
  s->add_option("--data", o.score.data, "dataset to score (typicality, likelihood)");
  s->add_option("--fit-data", o.score.fit_data, "dataset whose fit rows estimate H (typicality)");
  s->add_option("--split", o.score.split, "train | fit | eval | all");
  s->add_option("--batch-size", o.score.batch_size);

  s = add("eval", "AUROC grid over distribution pairings", [&o](RunContext& c) { return cmd_eval(o.eval, c); });
  s->add_option("--train", o.eval.train, "NAME=DIR of a train run (repeatable)");
  s->add_option("--test", o.eval.test, "NAME=DMAT test-only distribution (repeatable)");
  s->add_option("--methods", o.eval.methods, "ours,fisher,typicality,likelihood")->delimiter(',');
  s->add_option("--batch-sizes", o.eval.batch_sizes)->delimiter(',');
  s->add_option("--n-eval-batches", o.eval.n_eval_batches);
  add_seed(s, o.eval.seed);
  s->add_option("--out", o.eval.out, "output directory")->required();
  s->add_option("--in-scores", o.eval.in_scores, "score CSV of in-distribution batches");
  s->add_option("--ood-scores", o.eval.ood_scores, "score CSV of OOD batches");

  s = add("fim-probe", "Monte-Carlo Fisher information slice",
          [&o](RunContext& c) { return cmd_fim_probe(o.fim_probe, c); });
  s->add_option("--model", o.fim_probe.model, "checkpoint")->required();
  s->add_option("--out", o.fim_probe.out, "output directory")->required();
  s->add_option("--layers", o.fim_probe.layers, "layer indices (default 0,1)")->delimiter(',');
  s->add_option("--weights-per-layer", o.fim_probe.weights_per_layer);
  s->add_option("--n", o.fim_probe.n, "model samples");
  add_seed(s, o.fim_probe.seed);

  s = add("invariance-check", "score invariance under invertible transforms",
          [&o](RunContext& c) { return cmd_invariance_check(o.invariance, c); });
  s->add_option("--model", o.invariance.model, "checkpoint (default: 3 random models)");
  s->add_option("--model-kind", o.invariance.model_kind, "flow | gaussian");
  s->add_option("--dim", o.invariance.dim);
  s->add_option("--transforms", o.invariance.transforms, "identity,affine,scale,sinh,asinh,exp,rgb_hsv")
      ->delimiter(',');
  s->add_option("--points", o.invariance.points);
  add_seed(s, o.invariance.seed);
  s->add_option("--grad-tol", o.invariance.grad_tol);
  s->add_option("--value-tol", o.invariance.value_tol);
  s->add_option("--out", o.invariance.out, "optional output directory");

  s = add("tv-volume", "volume of the total-variation ball",
          [&o](RunContext& c) { return cmd_tv_volume(o.tv_volume, c); });
  s->add_option("--alpha", o.tv_volume.alpha)->required();
  s->add_option("--d", o.tv_volume.d)->required();
  s->add_option("--mc-samples", o.tv_volume.mc_samples, "Monte-Carlo cross-check (0 = off)");
  add_seed(s, o.tv_volume.seed);
  s->add_option("--expect-log10", o.tv_volume.expect_log10);
  s->add_option("--tol", o.tv_volume.tol, "tolerance on --expect-log10");
  s->add_option("--out", o.tv_volume.out, "optional output directory");
  return cmds;
}

std::vector<std::string> long_names(const CLI::App* sub) {
  std::vector<std::string> names;
  for (const CLI::Option* opt : sub->get_options()) {
    for (const auto& n : opt->get_lnames()) names.push_back(n);
  }
  return names;
}

struct UsageError {
  std::string message;
};

std::string flag_name(const std::string& token) {
  const auto eq = token.find('=');
  return token.substr(2, eq == std::string::npos ? std::string::npos : eq - 2);
}

// Rejects unknown flags with a suggestion and splices config-file entries in
// front of the command-line arguments for every key not given explicitly.
std::vector<std::string> expand_args(std::span<const std::string> args, const CLI::App* sub) {
  const auto names = long_names(sub);
  std::vector<std::string> given;
  std::string config_path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    const std::string& tok = args[i];
    if (tok == "-h" || tok == "--help") continue;
    if (tok.rfind("--", 0) != 0) {
      if (tok.size() > 1 && tok[0] == '-' && !std::isdigit(static_cast<unsigned char>(tok[1])) && tok[1] != '.') {
        throw UsageError{"unknown flag '" + tok + "'"};
      }
      continue;
    }
    const std::string name = flag_name(tok);
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      std::string msg = "unknown flag '--" + name + "' for " + sub->get_name();
      if (auto best = closest_match(name, names)) msg += "; did you mean '--" + *best + "'?";
      throw UsageError{msg};
    }
    given.push_back(name);
    if (name == "config") {
      const auto eq = tok.find('=');
      if (eq != std::string::npos) {
        config_path = tok.substr(eq + 1);
      } else if (i + 1 < args.size()) {
        config_path = args[i + 1];
      }
    }
  }

  std::vector<std::string> out{args[0]};
  if (!config_path.empty()) {
    for (const auto& [key, value] : read_config_file(config_path)) {
      if (key == "config") throw ParseError("config file may not set 'config'");
      const CLI::Option* opt = sub->get_option_no_throw("--" + key);
      if (opt == nullptr) {
        std::string msg = "unknown key '" + key + "' in config file " + config_path;
        if (auto best = closest_match(key, names)) msg += "; did you mean '" + *best + "'?";
        throw UsageError{msg};
      }
      if (std::find(given.begin(), given.end(), key) != given.end()) continue;
      if (opt->get_type_size() == 0) {
        if (value == "true" || value == "1") out.push_back("--" + key);
        continue;
      }
      out.push_back("--" + key + "=" + value);
    }
  }
  out.insert(out.end(), args.begin() + 1, args.end());
  return out;
}

nlohmann::json echo_config(const CLI::App* sub) {
  nlohmann::json cfg = nlohmann::json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    const auto& lnames = opt->get_lnames();
    if (lnames.empty() || lnames.front() == "help" || lnames.front() == "config") continue;
    const auto& res = opt->results();
    if (opt->count() > 0 && res.size() == 1) {
      cfg[lnames.front()] = res.front();
    } else if (opt->count() > 0) {
      cfg[lnames.front()] = res;
    } else {
      cfg[lnames.front()] = opt->get_default_str();
    }
  }
  return cfg;
}

}  // namespace

std::vector<std::string> subcommand_names() {
  return {"gen-data", "train", "features", "fit", "score", "eval", "fim-probe", "invariance-check", "tv-volume"};
}

std::map<std::string, std::string> parse_config_text(std::string_view text) {
  std::map<std::string, std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  const auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("config line " + std::to_string(line_no) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    if (key.empty()) throw ParseError("config line " + std::to_string(line_no) + ": empty key");
    std::replace(key.begin(), key.end(), '_', '-');
    out[key] = value;
  }
  return out;
}

std::map<std::string, std::string> read_config_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read config file '" + path.string() + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::optional<std::string> closest_match(std::string_view word, std::span<const std::string> candidates) {
  std::optional<std::string> best;
  std::size_t best_d = std::max<std::size_t>(2, word.size() / 3) + 1;
  for (const auto& c : candidates) {
    const std::size_t d = edit_distance(word, c);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  Options opts;
  CLI::App app{"gradient-feature OOD detection toolkit", "fimscore"};
  auto cmds = build(app, opts);
  const auto names = subcommand_names();

  if (args.empty() || args[0] == "-h" || args[0] == "--help") {
    (args.empty() ? err : out) << app.help();
    return args.empty() ? kExitUsageError : kExitOk;
  }
  const auto it = cmds.find(args[0]);
  if (it == cmds.end()) {
    err << "error: unknown subcommand '" << args[0] << "'";
    if (auto best = closest_match(args[0], names)) err << "; did you mean '" << *best << "'?";
    err << "\n" << app.help();
    return kExitUsageError;
  }
  CLI::App* sub = it->second.app;

  std::vector<std::string> expanded;
  try {
    expanded = expand_args(args, sub);
  } catch (const UsageError& e) {
    err << "error: " << e.message << "\n";
    return kExitUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomainError;
  }

  try {
    std::vector<std::string> rev(expanded.rbegin(), expanded.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << sub->help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run '" << args[0] << " --help' for usage\n";
    return kExitUsageError;
  }

  RunContext ctx(args[0], echo_config(sub), out);
  try {
    return it->second.run(ctx);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomainError;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace fimscore::cli

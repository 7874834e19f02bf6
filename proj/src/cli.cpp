// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.hpp"

#include "csv.hpp"
#include "experiments.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>

namespace dkpp::app {

namespace {

struct PhiOptions {
  std::string name;
  double lambda = 0.5;
  double a = 1, b = 1, c = 0;

  void add_to(CLI::App* cmd, const std::string& default_name) {
    name = default_name;
    cmd->add_option("--phi", name, "Spectral function")
        ->check(CLI::IsMember({"log", "affine", "quadratic", "boxcox"}))
        ->capture_default_str();
    cmd->add_option("--lambda", lambda, "Box-Cox parameter")->capture_default_str();
    cmd->add_option("--a", a, "Quadratic coefficient")->capture_default_str();
    cmd->add_option("--b", b, "Linear coefficient (affine, quadratic)")->capture_default_str();
    cmd->add_option("--c", c, "Constant coefficient (affine, quadratic)")->capture_default_str();
  }

  SpectralFunction<double> build() const {
    if (name == "log") return SpectralFunction<double>::log();
    if (name == "affine") return SpectralFunction<double>::affine(b, c);
    if (name == "quadratic") return SpectralFunction<double>::quadratic(a, b, c);
    return SpectralFunction<double>::box_cox(lambda);
  }
};

/// A model from --model, or a random Wishart kernel of size --n.
struct ModelOptions {
  std::string path;
  Index n = 8;
  std::uint64_t kernel_seed = 0;
  PhiOptions phi;
  CLI::Option* phi_flag = nullptr;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--model", path, "Model file ('phi ...' and 'kernel <file>' or 'factor <file>')");
    cmd->add_option("--n", n, "Ground-set size of the random Wishart kernel used without --model")
        ->capture_default_str();
    cmd->add_option("--kernel-seed", kernel_seed, "Seed of the random Wishart kernel")->capture_default_str();
    phi.add_to(cmd, "boxcox");
    phi_flag = cmd->get_option("--phi");
  }

  /// --phi overrides the model file's phi when given explicitly.
  Dkpp<double> build() const {
    if (!path.empty()) {
      auto model = load_model<double>(path);
      if (phi_flag->count() == 0) return model;
      return Dkpp<double>(model.kernel(), phi.build());
    }
    return Dkpp<double>(random_wishart_kernel<double>(n, kernel_seed), phi.build());
  }
};

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::string token;
  std::istringstream is(text);
  while (std::getline(is, token, ',')) {
    if (token.empty()) continue;
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      throw InvalidArgument("malformed number '" + token + "'");
    }
    if (used != token.size()) throw InvalidArgument("malformed number '" + token + "'");
    out.push_back(v);
  }
  if (out.empty()) throw InvalidArgument("empty list: '" + text + "'");
  return out;
}

std::string join_list(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + format_number(values[i]);
  return out;
}

/// Items separated by spaces or commas.
Subset parse_subset(const std::string& text) {
  std::string cleaned = text;
  std::replace(cleaned.begin(), cleaned.end(), ',', ' ');
  std::istringstream is(cleaned);
  std::vector<Index> items;
  std::string token;
  while (is >> token) {
    std::size_t used = 0;
    long long v = -1;
    try {
      v = std::stoll(token, &used);
    } catch (const std::exception&) {
      throw InvalidArgument("malformed item '" + token + "'");
    }
    if (used != token.size()) throw InvalidArgument("malformed item '" + token + "'");
    items.push_back(static_cast<Index>(v));
  }
  return Subset(items);
}

std::string command_line(const std::vector<std::string>& args) {
  std::string out = "dkpp";
  for (const auto& a : args) out += ' ' + a;
  return out;
}

std::string bool_str(bool b) { return b ? "1" : "0"; }

/// The --out file if one was named, else the fallback stream.
class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw InvalidArgument("cannot write " + path);
    }
    os_ = file_ ? file_.get() : &fallback;
  }
  std::ostream& stream() { return *os_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* os_;
};

struct Cli {
  std::vector<std::string> args;
  std::ostream& out;
  std::ostream& err;
  CLI::App app{"Discrete kernel point processes: exact computation, inference, sampling, mode search and learning."};
  std::vector<std::pair<CLI::App*, std::function<void()>>> commands;
  std::string out_path;
  std::uint64_t seed = 0;

  Cli(std::vector<std::string> a, std::ostream& o, std::ostream& e) : args(std::move(a)), out(o), err(e) {
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(DKPP_VERSION));
    add_dependence_sweep();
    add_z_comparison();
    add_z_variance();
    add_learn();
    add_generate();
    add_exact();
    add_estimate();
    add_sample();
    add_mode();
  }

  CLI::App* command(const std::string& name, const std::string& help) {
    auto* cmd = app.add_subcommand(name, help);
    cmd->add_option("--out", out_path, "Output file (default: standard output)");
    cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
    return cmd;
  }

  RunMetadata meta(std::vector<std::pair<std::string, std::string>> extra = {}) const {
    return {command_line(args), seed, std::move(extra)};
  }

  void add_dependence_sweep() {
    auto cfg = std::make_shared<DependenceSweepConfig>();
    auto lambdas = std::make_shared<std::string>(join_list(cfg->lambdas));
    auto* cmd = command("dependence-sweep", "log10 P(A | |A| = k) of scattered and gathered sets on a grid");
    cmd->add_option("--grid-side", cfg->grid_side, "Grid side length")->capture_default_str();
    cmd->add_option("--bandwidth", cfg->bandwidth, "Gaussian kernel bandwidth")->capture_default_str();
    cmd->add_option("--k", cfg->k, "Subset size")->capture_default_str();
    cmd->add_option("--lambdas", *lambdas, "Comma-separated Box-Cox parameters")->capture_default_str();
    cmd->add_option("--samples", cfg->n_samples, "Uniform k-subsets per estimate")->capture_default_str();
    cmd->add_option("--seeds", cfg->seeds, "Number of seeds")->capture_default_str();
    commands.emplace_back(cmd, [this, cfg, lambdas] {
      cfg->lambdas = parse_list(*lambdas);
      cfg->seed = seed;
      const auto sweep = dependence_sweep(*cfg);
      Output o(out_path, out);
      CsvWriter csv(o.stream(), meta({{"scattered", to_item_list(sweep.scattered)},
                                      {"gathered", to_item_list(sweep.gathered)}}));
      csv.header({"config", "lambda", "seed", "log10_prob", "std_error", "n_samples", "exhaustive"});
      for (const auto& r : sweep.rows) {
        csv.row({r.config, format_number(r.lambda), std::to_string(r.seed), format_number(r.log10_prob),
                 format_number(r.std_error), std::to_string(r.n_samples), bool_str(r.exhaustive)});
      }
    });
  }

  void add_z_comparison() {
    auto cfg = std::make_shared<ZComparisonConfig>();
    auto lambdas = std::make_shared<std::string>(join_list(cfg->lambdas));
    auto* cmd = command("z-comparison", "Exact log Z against the mean-field ELBO and importance sampling");
    cmd->add_option("--n", cfg->n, "Ground-set size")->capture_default_str();
    cmd->add_option("--lambdas", *lambdas, "Comma-separated Box-Cox parameters")->capture_default_str();
    cmd->add_option("--samples", cfg->n_samples, "Importance samples")->capture_default_str();
    cmd->add_option("--seeds", cfg->seeds, "Number of seeds")->capture_default_str();
    cmd->add_option("--mc-samples", cfg->mean_field.mc_samples, "Monte Carlo draws per mean-field update")
        ->capture_default_str();
    commands.emplace_back(cmd, [this, cfg, lambdas] {
      cfg->lambdas = parse_list(*lambdas);
      cfg->seed = seed;
      const auto rows = z_comparison(*cfg);
      Output o(out_path, out);
      CsvWriter csv(o.stream(), meta());
      csv.header({"lambda", "seed", "log_z", "elbo", "elbo_std_error", "elbo_gap", "elbo_ratio", "is_log_z",
                  "is_std_error", "is_gap", "is_ratio"});
      for (const auto& r : rows) {
        csv.row({format_number(r.lambda), std::to_string(r.seed), format_number(r.log_z), format_number(r.elbo),
                 format_number(r.elbo_std_error), format_number(r.elbo_gap()), format_number(std::exp(r.elbo_gap())),
                 format_number(r.is_log_z), format_number(r.is_std_error), format_number(r.is_gap()),
                 format_number(std::exp(r.is_gap()))});
      }
    });
  }

  void add_z_variance() {
    auto cfg = std::make_shared<ZVarianceConfig>();
    auto lambdas = std::make_shared<std::string>(join_list(cfg->lambdas));
    auto* cmd = command("z-variance", "Variance of importance-sampling log Z: mean-field vs uniform proposal");
    cmd->add_option("--n", cfg->n, "Ground-set size")->capture_default_str();
    cmd->add_option("--lambdas", *lambdas, "Comma-separated Box-Cox parameters")->capture_default_str();
    cmd->add_option("--samples", cfg->n_samples, "Importance samples per estimate")->capture_default_str();
    cmd->add_option("--seeds", cfg->seeds, "Number of seeds")->capture_default_str();
    cmd->add_option("--mc-samples", cfg->mean_field.mc_samples, "Monte Carlo draws per mean-field update")
        ->capture_default_str();
    commands.emplace_back(cmd, [this, cfg, lambdas] {
      cfg->lambdas = parse_list(*lambdas);
      cfg->seed = seed;
      const auto rows = z_variance_ablation(*cfg);
      Output o(out_path, out);
      CsvWriter csv(o.stream(), meta());
      csv.header({"lambda", "seeds", "mean_mean_field", "var_mean_field", "mean_uniform", "var_uniform"});
      for (const auto& r : rows) {
        csv.row({format_number(r.lambda), std::to_string(r.seeds), format_number(r.mean_mean_field),
                 format_number(r.var_mean_field), format_number(r.mean_uniform), format_number(r.var_uniform)});
      }
    });
  }

  void add_learn() {
    auto cfg = std::make_shared<TrainConfig<double>>();
    auto data_path = std::make_shared<std::string>();
    auto model_out = std::make_shared<std::string>();
    auto phi = std::make_shared<PhiOptions>();
    auto* cmd = command("learn", "Ratio-matching SGD on a low-rank factor V, L = V V^T");
    cmd->add_option("--data", *data_path, "Basket file")->required();
    phi->add_to(cmd, "boxcox");
    cmd->add_option("--rank", cfg->rank, "Factor rank D")->capture_default_str();
    cmd->add_option("--lr", cfg->learning_rate, "Learning rate")->capture_default_str();
    cmd->add_option("--iters", cfg->n_iters, "SGD iterations")->capture_default_str();
    cmd->add_option("--batch", cfg->minibatch_size, "Minibatch size")->capture_default_str();
    cmd->add_option("--momentum", cfg->momentum, "Heavy-ball momentum")->capture_default_str();
    cmd->add_option("--eval-every", cfg->eval_every, "Iterations between loss evaluations")->capture_default_str();
    cmd->add_option("--model-out", *model_out, "Where to save the learned model file");
    commands.emplace_back(cmd, [this, cfg, data_path, model_out, phi] {
      const auto data = load_baskets(*data_path);
      cfg->phi = phi->build();
      cfg->seed = seed;
      const auto result = sgd_fit(data, *cfg);
      if (!model_out->empty()) save_factor_model(*model_out, result.model, cfg->phi);
      Output o(out_path, out);
      CsvWriter csv(o.stream(), meta({{"phi", cfg->phi.descriptor()},
                                      {"baskets", std::to_string(data.size())},
                                      {"eval_pairs", std::to_string(result.eval_pairs)},
                                      {"eval_subsampled", bool_str(result.eval_subsampled)}}));
      csv.header({"iter", "loss", "wall_ms"});
      for (const auto& p : result.trace) {
        csv.row({std::to_string(p.iter), format_number(p.loss), format_number(p.wall_ms)});
      }
      const auto& last = result.trace.back();
      if (last.iter > 0) {
        err << "ms per iteration: " << format_number(last.wall_ms / double(last.iter)) << '\n';
      }
    });
  }

  void add_generate() {
    auto model = std::make_shared<ModelOptions>();
    auto count = std::make_shared<Index>(2000);
    auto model_out = std::make_shared<std::string>();
    auto* cmd = command("generate", "Draw baskets by exact sampling from a model");
    model->add_to(cmd);
    cmd->add_option("--m", *count, "Number of baskets")->capture_default_str();
    cmd->add_option("--model-out", *model_out, "Also save the generating model");
    commands.emplace_back(cmd, [this, model, count, model_out] {
      const auto m = model->build();
      if (*count < 1) throw InvalidArgument("--m must be >= 1");
      const BasketDataset data(m.size(), sample_exact(m, *count, seed));
      if (!model_out->empty()) save_model(*model_out, m);
      Output o(out_path, out);
      o.stream() << "# dkpp " << DKPP_VERSION << "\n# command: " << command_line(args) << "\n# seed: " << seed << '\n';
      write_baskets(o.stream(), data);
    });
  }

  void add_exact() {
    auto model = std::make_shared<ModelOptions>();
    auto subset = std::make_shared<std::string>();
    auto* cmd = command("exact", "Exact log partition and item marginals by enumeration");
    model->add_to(cmd);
    cmd->add_option("--subset", *subset, "Also report the probability of this subset");
    commands.emplace_back(cmd, [this, model, subset] {
      const auto m = model->build();
      const VectorXd p = exact_distribution(m);
      const double log_z = exact_log_partition(m);
      Output o(out_path, out);
      CsvWriter csv(o.stream(), meta({{"phi", m.phi().descriptor()}, {"n", std::to_string(m.size())}}));
      csv.header({"quantity", "item", "value"});
      csv.row({"log_z", "", format_number(log_z)});
      for (Index i = 0; i < m.size(); ++i) {
        double marginal = 0;
        for (Index s = 0; s < p.size(); ++s)
          if ((std::uint64_t(s) >> i) & 1u) marginal += p(s);
        csv.row({"marginal", std::to_string(i), format_number(marginal)});
      }
      if (!subset->empty()) {
        const Subset a = parse_subset(*subset);
        a.validate(m.size());
        csv.row({"log_prob", to_item_list(a), format_number(unnorm_logprob(m, a) - log_z)});
      }
    });
  }

  void add_estimate() {
    auto model = std::make_shared<ModelOptions>();
    auto what = std::make_shared<std::string>("log-z");
    auto proposal = std::make_shared<std::string>("mean-field");
    auto k = std::make_shared<Index>(1);
    auto subset = std::make_shared<std::string>();
    auto lower = std::make_shared<std::string>();
    auto upper = std::make_shared<std::string>();
    auto samples = std::make_shared<Index>(1000);
    auto exhaustive = std::make_shared<Index>(kIntervalExhaustiveLimit);
    auto* cmd = command("estimate", "Monte Carlo and variational estimators");
    model->add_to(cmd);
    cmd->add_option("--what", *what, "Quantity to estimate")
        ->check(CLI::IsMember({"log-z", "elbo", "cardinality", "interval", "conditional-k", "conditional-interval"}))
        ->capture_default_str();
    cmd->add_option("--proposal", *proposal, "Proposal for importance sampling")
        ->check(CLI::IsMember({"mean-field", "uniform"}))
        ->capture_default_str();
    cmd->add_option("--k", *k, "Cardinality")->capture_default_str();
    cmd->add_option("--subset", *subset, "Subset A for conditional probabilities");
    cmd->add_option("--lower", *lower, "Interval lower end A_in");
    cmd->add_option("--upper", *upper, "Interval upper end A_out (default: all items)");
    cmd->add_option("--samples", *samples, "Monte Carlo samples")->capture_default_str();
    cmd->add_option("--exhaustive-limit", *exhaustive,
                    "Sum exactly when at most this many interval coordinates are free")
        ->capture_default_str();
    commands.emplace_back(cmd, [=, this] {
      const auto m = model->build();
      auto make_proposal = [&] {
        if (*proposal == "uniform") return BernoulliProduct<double>::uniform(m.size(), 0.5);
        MeanFieldConfig mf;
        mf.seed = seed;
        return mean_field_fit(m, mf).q;
      };
      const Subset a_in = parse_subset(*lower);
      const Subset a_out = upper->empty() ? Subset::full(m.size()) : parse_subset(*upper);
      EstimateWithError<double> e;
      if (*what == "log-z") {
        e = importance_log_partition(m, make_proposal(), *samples, seed);
      } else if (*what == "elbo") {
        MeanFieldConfig mf;
        mf.seed = seed;
        ExpectationConfig ex;
        ex.seed = seed;
        ex.mc_samples = *samples;
        e = elbo(m, mean_field_fit(m, mf).q, ex);
      } else if (*what == "cardinality") {
        e = rb_marginal_cardinality(m, *k, *samples, seed);
      } else if (*what == "interval") {
        e = rb_marginal_between(m, a_in, a_out, make_proposal(), *samples, seed, *exhaustive).log_mass;
      } else if (*what == "conditional-k") {
        e = conditional_prob_given_cardinality(m, parse_subset(*subset), *samples, seed);
      } else {
        e = conditional_prob_between(m, parse_subset(*subset), a_in, a_out, make_proposal(), *samples, seed,
                                     *exhaustive);
      }
      Output o(out_path, out);
      CsvWriter csv(o.stream(), meta({{"phi", m.phi().descriptor()}, {"n", std::to_string(m.size())}}));
      csv.header({"quantity", "value", "std_error", "n_samples", "seed", "exhaustive"});
      csv.row({*what, format_number(e.value), format_number(e.std_error), std::to_string(e.n_samples),
               std::to_string(e.seed), bool_str(e.exhaustive)});
    });
  }

  void add_sample() {
    auto model = std::make_shared<ModelOptions>();
    auto cfg = std::make_shared<ChainConfig>();
    auto init = std::make_shared<std::string>();
    auto* cmd = command("sample", "Heat-bath Gibbs chain; one state per line");
    model->add_to(cmd);
    cmd->add_option("--sweeps", cfg->sweeps, "Sweeps over all items")->capture_default_str();
    cmd->add_option("--burn-in", cfg->burn_in, "Sweeps discarded")->capture_default_str();
    cmd->add_option("--thin", cfg->thin, "Keep every thin-th sweep")->capture_default_str();
    cmd->add_option("--init", *init, "Initial subset (default: empty)");
    commands.emplace_back(cmd, [this, model, cfg, init] {
      const auto m = model->build();
      cfg->seed = seed;
      const auto chain = run_chain(m, parse_subset(*init), *cfg);
      Output o(out_path, out);
      o.stream() << "# dkpp " << DKPP_VERSION << "\n# command: " << command_line(args) << '\n';
      write_chain(o.stream(), chain);
    });
  }

  void add_mode() {
    auto model = std::make_shared<ModelOptions>();
    auto method = std::make_shared<std::string>("double-greedy");
    auto k = std::make_shared<Index>(1);
    auto* cmd = command("mode", "Approximate or exact mode search");
    model->add_to(cmd);
    cmd->add_option("--method", *method, "Algorithm")
        ->check(CLI::IsMember({"exhaustive", "exhaustive-k", "greedy", "double-greedy", "double-greedy-randomized",
                               "random-greedy-k"}))
        ->capture_default_str();
    cmd->add_option("--k", *k, "Cardinality for the -k methods")->capture_default_str();
    commands.emplace_back(cmd, [this, model, method, k] {
      const auto m = model->build();
      auto result = [&]() -> OptResult<double> {
        if (*method == "exhaustive") return exhaustive_mode(m);
        if (*method == "exhaustive-k") return exhaustive_mode_cardinality(m, *k);
        if (*method == "greedy") return greedy_mode(m);
        if (*method == "double-greedy") return double_greedy(m, false);
        if (*method == "double-greedy-randomized") return double_greedy(m, true, seed);
        return random_greedy_cardinality(m, *k, seed);
      }();
      Output o(out_path, out);
      CsvWriter csv(o.stream(), meta({{"phi", m.phi().descriptor()}, {"n", std::to_string(m.size())}}));
      csv.header({"method", "seed", "objective", "items"});
      csv.row({result.method(), result.seed() ? std::to_string(*result.seed()) : "", format_number(result.objective()),
               to_item_list(result.subset())});
    });
  }

  int execute() {
    try {
      std::vector<std::string> reversed(args.rbegin(), args.rend());
      app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
      out << app.help("", CLI::AppFormatMode::All);
      return kExitOk;
    } catch (const CLI::CallForVersion&) {
      out << DKPP_VERSION << '\n';
      return kExitOk;
    } catch (const CLI::ParseError& e) {
      err << "error: " << e.what() << '\n';
      return kExitUsage;
    }
    try {
      for (auto& [cmd, action] : commands) {
        if (cmd->parsed()) action();
      }
    } catch (const NumericalError& e) {
      err << "numerical failure: " << e.what() << '\n';
      return kExitNumerical;
    } catch (const InvalidArgument& e) {
      err << "error: " << e.what() << '\n';
      return kExitUsage;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return kExitFailure;
    }
    return kExitOk;
  }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Cli cli(args, out, err);
  return cli.execute();
}

}  // namespace dkpp::app

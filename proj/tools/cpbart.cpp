// cpbart: fit, predict, simulate, evaluate and cross-validate copula-process BART models.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "cpbart/errors.hpp"
#include "cpbart/io.hpp"
#include "cpbart/metrics.hpp"
#include "cpbart/predict.hpp"
#include "cpbart/sampler.hpp"
#include "cpbart/sim.hpp"

using namespace cpbart;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

struct FitOptions {
  int trees = 75;
  int iters = 4000;
  int burnin = 1000;
  double nu = 0.45;
  int min_leaf = 5;
  double a = 1.0;
  std::string b = "auto";
  std::uint64_t seed = 1;
  bool baseline = false;
};

void add_fit_options(CLI::App* cmd, FitOptions& o) {
  cmd->add_option("--trees", o.trees, "number of trees m")->capture_default_str();
  cmd->add_option("--iters", o.iters, "retained MCMC sweeps after burn-in")->capture_default_str();
  cmd->add_option("--burnin", o.burnin, "discarded initial sweeps")->capture_default_str();
  cmd->add_option("--nu", o.nu, "depth prior base")->capture_default_str();
  cmd->add_option("--min-leaf", o.min_leaf, "minimum rows per leaf")->capture_default_str();
  cmd->add_option("--a", o.a, "inverse-gamma shape on c")->capture_default_str();
  cmd->add_option("--b", o.b, "inverse-gamma scale on c, or 'auto' for 9/(14m)")
      ->capture_default_str();
  cmd->add_option("--seed", o.seed, "random seed")->capture_default_str();
  cmd->add_flag("--baseline", o.baseline, "fit Gaussian-error BART instead");
}

SamplerConfig make_config(const FitOptions& o) {
  SamplerConfig c;
  c.m = o.trees;
  c.iters = o.iters;
  c.burnin = o.burnin;
  c.nu = o.nu;
  c.min_leaf = o.min_leaf;
  c.a = o.a;
  if (o.b == "auto") {
    c.b = 0.0;
  } else {
    std::size_t used = 0;
    c.b = std::stod(o.b, &used);
    if (used != o.b.size() || !(c.b > 0.0)) throw std::invalid_argument("--b must be positive or 'auto'");
  }
  c.seed = o.seed;
  c.hmc.adapt_iters = o.burnin;
  c.validate();
  return c;
}

std::vector<double> parse_levels(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size() || !(v > 0.0 && v < 1.0))
      throw std::invalid_argument("quantile levels must lie in (0, 1)");
    out.push_back(v);
  }
  return out;
}

std::string level_name(double a) {
  std::ostringstream os;
  os << a;
  return os.str();
}

PredictMode parse_mode(const std::string& s) {
  if (s == "plugin") return PredictMode::Plugin;
  if (s == "full") return PredictMode::Full;
  throw std::invalid_argument("--mode must be plugin or full");
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

void write_report(const ScoreReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out.precision(10);
  out << "metric,value\n";
  out << "n_test," << r.n_test << '\n';
  out << "rmse," << r.rmse << '\n';
  out << "log_score," << r.log_score << '\n';
  out << "floored_densities," << r.floored << '\n';
  out << "crps," << r.crps << '\n';
  for (const auto& [a, v] : r.pinball) out << "pinball_" << level_name(a) << ',' << v << '\n';
  for (const auto& [a, v] : r.qrmse) out << "qrmse_" << level_name(a) << ',' << v << '\n';
  for (const auto& [a, v] : r.coverage) out << "coverage_" << level_name(a) << ',' << v << '\n';
}

// Oracle columns "q<level>" hold the true conditional quantiles.
QuantileTruth read_oracle(const std::string& path, std::size_t rows) {
  const auto table = read_csv(path);
  if (table.values.rows() != rows) throw DataError("oracle and data row counts differ");
  QuantileTruth t;
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    const auto& h = table.header[j];
    if (h.size() < 2 || h[0] != 'q') continue;
    t.levels.push_back(std::stod(h.substr(1)));
    std::vector<double> col(rows);
    for (std::size_t i = 0; i < rows; ++i) col[i] = table.values(i, j);
    t.values.push_back(std::move(col));
  }
  return t;
}

int run(int argc, char** argv) {
  CLI::App app{"Copula-process BART distributional regression"};
  app.require_subcommand(1);

  FitOptions fit_opts;
  std::string fit_data, fit_response, fit_out;
  auto* fit_cmd = app.add_subcommand("fit", "fit a model to a CSV file");
  fit_cmd->add_option("--data", fit_data, "training CSV")->required();
  fit_cmd->add_option("--response", fit_response, "response column")->required();
  fit_cmd->add_option("--out", fit_out, "model file to write")->required();
  add_fit_options(fit_cmd, fit_opts);

  std::string pr_model, pr_data, pr_out, pr_quantiles = "0.25,0.5,0.75", pr_mode = "plugin";
  int pr_grid = 0;
  double pr_interval = 0.0;
  auto* pr_cmd = app.add_subcommand("predict", "predictive summaries for new covariates");
  pr_cmd->add_option("--model", pr_model, "model file")->required();
  pr_cmd->add_option("--data", pr_data, "CSV of covariates")->required();
  pr_cmd->add_option("--out", pr_out, "output CSV")->required();
  pr_cmd->add_option("--quantiles", pr_quantiles, "comma-separated levels")->capture_default_str();
  pr_cmd->add_option("--density-grid", pr_grid, "density grid size (0: none)");
  pr_cmd->add_option("--mode", pr_mode, "plugin or full")->capture_default_str();
  pr_cmd->add_option("--intervals", pr_interval, "posterior interval level for the quantiles");

  SimSpec sim;
  std::string sim_out, sim_oracle;
  bool sim_rate = false;
  auto* sim_cmd = app.add_subcommand("simulate", "draw a simulated data set");
  sim_cmd->add_option("--case", sim.case_id, "1, 2 or 3")->required();
  sim_cmd->add_option("--n", sim.n, "rows")->required();
  sim_cmd->add_option("--seed", sim.seed, "random seed")->capture_default_str();
  sim_cmd->add_option("--rho", sim.rho, "Toeplitz correlation")->capture_default_str();
  sim_cmd->add_flag("--gamma-rate", sim_rate, "read the second gamma parameter as a rate");
  sim_cmd->add_option("--out", sim_out, "output CSV")->required();
  sim_cmd->add_option("--oracle", sim_oracle, "CSV of true quantiles, density and mean");

  std::string ev_model, ev_data, ev_oracle, ev_out;
  auto* ev_cmd = app.add_subcommand("evaluate", "score a model on labelled data");
  ev_cmd->add_option("--model", ev_model, "model file")->required();
  ev_cmd->add_option("--data", ev_data, "CSV with the response column")->required();
  ev_cmd->add_option("--oracle", ev_oracle, "true-quantile CSV from simulate");
  ev_cmd->add_option("--out", ev_out, "report CSV")->required();

  FitOptions cv_opts;
  std::string cv_data, cv_response, cv_out;
  int cv_k = 10;
  auto* cv_cmd = app.add_subcommand("cv", "k-fold cross-validation");
  cv_cmd->add_option("--data", cv_data, "CSV")->required();
  cv_cmd->add_option("--response", cv_response, "response column")->required();
  cv_cmd->add_option("--k", cv_k, "folds")->capture_default_str();
  cv_cmd->add_option("--out", cv_out, "report CSV")->required();
  add_fit_options(cv_cmd, cv_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  if (*fit_cmd) {
    const auto cfg = make_config(fit_opts);
    const auto data = make_dataset(to_raw_data(read_csv(fit_data), fit_response));
    print_warnings(data.warnings);
    const auto result = fit(data, cfg, fit_opts.baseline ? Method::GaussianBart : Method::CPBart);
    save_model(result, fit_out);
    const auto& tr = result.diagnostics.c_trace;
    double c_mean = 0.0;
    for (std::size_t k = cfg.burnin; k < tr.size(); ++k) c_mean += tr[k];
    c_mean /= static_cast<double>(tr.size() - cfg.burnin);
    std::cerr << method_name(result.method) << ": " << result.draws.size()
              << " draws, posterior mean c " << c_mean << ", tree acceptance "
              << result.diagnostics.tree_accept_rate << ", " << result.diagnostics.seconds
              << " s\n";
  } else if (*pr_cmd) {
    const auto levels = parse_levels(pr_quantiles);
    const auto mode = parse_mode(pr_mode);
    if (pr_interval < 0.0 || pr_interval >= 1.0)
      throw std::invalid_argument("--intervals must lie in [0, 1)");
    const auto model = load_model(pr_model);
    const auto table = read_csv(pr_data);
    const Matrix X = prepare_covariates(model, table);
    const auto grid = pr_grid > 0 ? default_density_grid(model, pr_grid) : std::vector<double>{};

    std::vector<std::string> header{"mean"};
    for (double a : levels) header.push_back("q" + level_name(a));
    if (pr_interval > 0.0)
      for (double a : levels) {
        header.push_back("q" + level_name(a) + "_lo");
        header.push_back("q" + level_name(a) + "_hi");
      }
    for (double y : grid) header.push_back("density_" + level_name(y));

    Matrix out(X.rows(), header.size());
    for (std::size_t i = 0; i < X.rows(); ++i) {
      const PointPredictor pp(model, X.row(i));
      std::size_t col = 0;
      out(i, col++) = pp.mean(mode);
      for (double a : levels) out(i, col++) = pp.quantile(a, mode);
      if (pr_interval > 0.0)
        for (double a : levels) {
          const auto [lo, hi] = quantile_posterior_interval(model, X.row(i), a, pr_interval);
          out(i, col++) = lo;
          out(i, col++) = hi;
        }
      if (!grid.empty())
        for (double d : pp.density(grid, mode)) out(i, col++) = d;
    }
    write_csv(pr_out, header, out);
  } else if (*sim_cmd) {
    sim.gamma = sim_rate ? GammaParam::ShapeRate : GammaParam::ShapeScale;
    const auto s = gen_case(sim);
    std::vector<std::string> header = s.raw.covariate_names;
    header.push_back(s.raw.response_name);
    Matrix data(s.raw.X.rows(), header.size());
    for (std::size_t i = 0; i < data.rows(); ++i) {
      for (std::size_t j = 0; j < s.raw.X.cols(); ++j) data(i, j) = s.raw.X(i, j);
      data(i, header.size() - 1) = s.raw.y[i];
    }
    write_csv(sim_out, header, data);
    if (!sim_oracle.empty()) {
      const std::vector<double> levels{0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95};
      std::vector<std::string> oh;
      for (double a : levels) oh.push_back("q" + level_name(a));
      oh.push_back("density");
      oh.push_back("mean");
      Matrix o(data.rows(), oh.size());
      for (std::size_t i = 0; i < o.rows(); ++i) {
        const auto x = s.raw.X.row(i);
        std::size_t col = 0;
        for (double a : levels) o(i, col++) = s.oracle.quantile(x, a);
        o(i, col++) = s.oracle.density(x, s.raw.y[i]);
        o(i, col++) = s.oracle.mean(x);
      }
      write_csv(sim_oracle, oh, o);
    }
  } else if (*ev_cmd) {
    const auto model = load_model(ev_model);
    const auto table = read_csv(ev_data);
    const auto raw = to_raw_data(table, model.response_name);
    const Matrix X = prepare_covariates(model, table);
    EvalConfig eval;
    const auto obs = score_observations(model, X, raw.y, eval);
    QuantileTruth truth;
    if (!ev_oracle.empty()) truth = read_oracle(ev_oracle, raw.y.size());
    const auto report = summarize_scores(obs, eval.levels, ev_oracle.empty() ? nullptr : &truth);
    write_report(report, ev_out);
  } else if (*cv_cmd) {
    const auto cfg = make_config(cv_opts);
    const auto raw = to_raw_data(read_csv(cv_data), cv_response);
    const auto res = cross_validate(raw, cv_k, cv_opts.baseline ? Method::GaussianBart : Method::CPBart,
                                    cfg, cv_opts.seed);
    write_report(res.report, cv_out);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumeric;
  }
}

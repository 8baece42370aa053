#include "cpbart/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "cpbart/copula.hpp"
#include "cpbart/errors.hpp"

namespace cpbart {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\"");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\"");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_number(const std::string& cell, const std::string& column, int line,
                    const std::string& source) {
  double v = 0.0;
  const auto* end = cell.data() + cell.size();
  const auto res = std::from_chars(cell.data(), end, v);
  if (cell.empty() || res.ec != std::errc() || res.ptr != end || !std::isfinite(v))
    throw DataError(source + ":" + std::to_string(line) + ": non-numeric value '" + cell +
                    "' in column '" + column + "'");
  return v;
}

json tree_to_json(const Tree& tree, const std::vector<double>& leaves) {
  json nodes = json::array();
  for (const auto& nd : tree.nodes()) {
    if (nd.is_leaf())
      nodes.push_back(json::array({leaves.at(nd.leaf)}));
    else
      nodes.push_back(json::array({nd.var, nd.cut, nd.left, nd.right}));
  }
  return nodes;
}

void tree_from_json(const json& nodes, Tree& tree, std::vector<double>& leaves) {
  std::vector<Node> raw;
  std::vector<double> values;
  for (const auto& rec : nodes) {
    Node nd;
    if (rec.size() == 1) {
      nd.leaf = static_cast<int>(values.size());
      values.push_back(rec[0].get<double>());
    } else if (rec.size() == 4) {
      nd.var = rec[0].get<int>();
      nd.cut = rec[1].get<double>();
      nd.left = rec[2].get<int>();
      nd.right = rec[3].get<int>();
    } else {
      throw DataError("malformed tree node record");
    }
    raw.push_back(nd);
  }
  tree = Tree::from_nodes(raw);
  // Leaves are numbered in preorder, the order in which they were written.
  leaves.assign(tree.num_leaves(), 0.0);
  int k = 0;
  for (const auto& nd : tree.nodes())
    if (nd.is_leaf()) leaves[nd.leaf] = values.at(k++);
}

json config_to_json(const SamplerConfig& c) {
  return {{"m", c.m},
          {"nu", c.nu},
          {"min_leaf", c.min_leaf},
          {"move_probs", {c.move_probs.grow, c.move_probs.prune, c.move_probs.change}},
          {"a", c.a},
          {"b", c.resolved_b()},
          {"iters", c.iters},
          {"burnin", c.burnin},
          {"seed", c.seed},
          {"update_c", c.update_c},
          {"hmc",
           {{"leapfrog_steps", c.hmc.leapfrog_steps},
            {"target_accept", c.hmc.target_accept},
            {"init_step", c.hmc.init_step},
            {"adapt_iters", c.hmc.adapt_iters}}}};
}

SamplerConfig config_from_json(const json& j) {
  SamplerConfig c;
  c.m = j.at("m");
  c.nu = j.at("nu");
  c.min_leaf = j.at("min_leaf");
  const auto& mp = j.at("move_probs");
  c.move_probs = {mp.at(0), mp.at(1), mp.at(2)};
  c.a = j.at("a");
  c.b = j.at("b");
  c.iters = j.at("iters");
  c.burnin = j.at("burnin");
  c.seed = j.at("seed");
  c.update_c = j.at("update_c");
  const auto& h = j.at("hmc");
  c.hmc.leapfrog_steps = h.at("leapfrog_steps");
  c.hmc.target_accept = h.at("target_accept");
  c.hmc.init_step = h.at("init_step");
  c.hmc.adapt_iters = h.at("adapt_iters");
  return c;
}

}  // namespace

int CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  return it == header.end() ? -1 : static_cast<int>(it - header.begin());
}

CsvTable parse_csv(std::istream& in, const std::string& source) {
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw DataError(source + ": empty file");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  t.header = split(line);
  for (std::size_t j = 0; j < t.header.size(); ++j) {
    if (t.header[j].empty()) throw DataError(source + ": empty column name");
    if (std::count(t.header.begin(), t.header.end(), t.header[j]) > 1)
      throw DataError(source + ": duplicate column '" + t.header[j] + "'");
  }
  t.values = Matrix(0, t.header.size());
  int lineno = 1;
  std::vector<double> row(t.header.size());
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() != t.header.size())
      throw DataError(source + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(t.header.size()) + " fields, got " +
                      std::to_string(cells.size()));
    for (std::size_t j = 0; j < cells.size(); ++j)
      row[j] = parse_number(cells[j], t.header[j], lineno, source);
    t.values.append_row(row);
  }
  return t;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return parse_csv(in, path);
}

void write_csv(std::ostream& out, const std::vector<std::string>& header, const Matrix& values) {
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < values.rows(); ++i) {
    for (std::size_t j = 0; j < values.cols(); ++j) out << (j ? "," : "") << values(i, j);
    out << '\n';
  }
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Matrix& values) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  write_csv(out, header, values);
}

RawData to_raw_data(const CsvTable& table, const std::string& response) {
  const int r = table.column(response);
  if (r < 0) throw DataError("response column '" + response + "' not found");
  RawData raw;
  raw.response_name = response;
  std::vector<int> cov;
  for (int j = 0; j < static_cast<int>(table.header.size()); ++j)
    if (j != r) {
      cov.push_back(j);
      raw.covariate_names.push_back(table.header[j]);
    }
  if (cov.empty()) throw DataError("no covariate columns");
  raw.X = Matrix(table.values.rows(), cov.size());
  raw.y.resize(table.values.rows());
  for (std::size_t i = 0; i < table.values.rows(); ++i) {
    raw.y[i] = table.values(i, r);
    for (std::size_t k = 0; k < cov.size(); ++k) raw.X(i, k) = table.values(i, cov[k]);
  }
  return raw;
}

Matrix prepare_covariates(const FitResult& fit, const CsvTable& table) {
  const auto& sc = fit.scaling;
  std::string unknown;
  for (const auto& name : table.header) {
    const bool known = name == fit.response_name ||
                       std::count(sc.names.begin(), sc.names.end(), name) ||
                       std::count(sc.dropped.begin(), sc.dropped.end(), name);
    if (!known) unknown += (unknown.empty() ? "" : ", ") + name;
  }
  if (!unknown.empty()) throw DataError("unknown covariate columns: " + unknown);
  return standardize_columns(sc, table.values, table.header);
}

json model_to_json(const FitResult& fit) {
  json j;
  j["format_version"] = kModelFormatVersion;
  j["method"] = method_name(fit.method);
  j["config"] = config_to_json(fit.config);
  j["response_name"] = fit.response_name;
  j["scaling"] = {{"names", fit.scaling.names},
                  {"min", fit.scaling.min},
                  {"max", fit.scaling.max},
                  {"dropped", fit.scaling.dropped}};
  if (fit.marginal) {
    const auto c = fit.marginal->centers();
    j["marginal"] = {{"centers", std::vector<double>(c.begin(), c.end())},
                     {"bandwidth", fit.marginal->bandwidth()}};
  } else {
    j["marginal"] = nullptr;
  }
  j["response_scaling"] = {{"center", fit.response.center}, {"scale", fit.response.scale}};
  json draws = json::array();
  for (const auto& d : fit.draws) {
    json trees = json::array();
    for (int t = 0; t < d.ensemble.size(); ++t)
      trees.push_back(tree_to_json(d.ensemble.trees[t], d.ensemble.leaf_values[t]));
    draws.push_back({{"c", d.c}, {"sigma", d.sigma}, {"trees", std::move(trees)}});
  }
  j["draws"] = std::move(draws);
  const auto& dg = fit.diagnostics;
  j["diagnostics"] = {{"c_trace", dg.c_trace},
                      {"sigma_trace", dg.sigma_trace},
                      {"tree_accept_rate", dg.tree_accept_rate},
                      {"hmc_accept_rate", dg.hmc_accept_rate},
                      {"step_size", dg.step_size},
                      {"seconds", dg.seconds}};
  j["warnings"] = fit.warnings;
  return j;
}

FitResult model_from_json(const json& j) {
  try {
    if (j.at("format_version").get<int>() != kModelFormatVersion)
      throw DataError("unsupported model format version");
    FitResult fit;
    const auto method = j.at("method").get<std::string>();
    if (method == "cpbart")
      fit.method = Method::CPBart;
    else if (method == "bart")
      fit.method = Method::GaussianBart;
    else
      throw DataError("unknown method '" + method + "'");
    fit.config = config_from_json(j.at("config"));
    fit.response_name = j.at("response_name");
    const auto& sc = j.at("scaling");
    fit.scaling.names = sc.at("names").get<std::vector<std::string>>();
    fit.scaling.min = sc.at("min").get<std::vector<double>>();
    fit.scaling.max = sc.at("max").get<std::vector<double>>();
    fit.scaling.dropped = sc.at("dropped").get<std::vector<std::string>>();
    if (!j.at("marginal").is_null())
      fit.marginal.emplace(j["marginal"].at("centers").get<std::vector<double>>(),
                           j["marginal"].at("bandwidth").get<double>());
    fit.response = {j.at("response_scaling").at("center"), j.at("response_scaling").at("scale")};
    for (const auto& d : j.at("draws")) {
      PosteriorDraw draw;
      draw.c = d.at("c");
      draw.sigma = d.at("sigma");
      draw.s = fit.method == Method::CPBart ? scale_s(draw.c, fit.config.m) : 1.0;
      for (const auto& t : d.at("trees")) {
        Tree tree;
        std::vector<double> leaves;
        tree_from_json(t, tree, leaves);
        draw.ensemble.trees.push_back(std::move(tree));
        draw.ensemble.leaf_values.push_back(std::move(leaves));
      }
      fit.draws.push_back(std::move(draw));
    }
    const auto& dg = j.at("diagnostics");
    fit.diagnostics.c_trace = dg.at("c_trace").get<std::vector<double>>();
    fit.diagnostics.sigma_trace = dg.at("sigma_trace").get<std::vector<double>>();
    fit.diagnostics.tree_accept_rate = dg.at("tree_accept_rate");
    fit.diagnostics.hmc_accept_rate = dg.at("hmc_accept_rate");
    fit.diagnostics.step_size = dg.at("step_size");
    fit.diagnostics.seconds = dg.at("seconds");
    fit.warnings = j.at("warnings").get<std::vector<std::string>>();
    return fit;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const FitResult& fit, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << model_to_json(fit).dump() << '\n';
}

FitResult load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("malformed model file '" + path + "': " + e.what());
  }
  return model_from_json(j);
}

}  // namespace cpbart

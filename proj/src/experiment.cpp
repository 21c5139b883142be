/*
 Copyright 2026 The pilambda Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include "pilambda/experiment.hpp"

#include "pilambda/random.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

namespace pilambda {

using nlohmann::json;

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, const std::string& what) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  require(res.ec == std::errc() && res.ptr == s.data() + s.size(), "cannot parse " + what + " from '" + s + "'");
  return v;
}

template <typename T>
T field_as(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception& e) {
    throw ContractViolation("config field '" + key + "': " + e.what());
  }
}

Eigen::VectorXd vector_from(const json& v, const std::string& key) {
  const auto xs = field_as<std::vector<double>>(v, key);
  return Eigen::Map<const Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

json vector_to(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Matrix matrix_from(const json& v, const std::string& key) {
  const auto rows = field_as<std::vector<std::vector<double>>>(v, key);
  require(!rows.empty(), "config field '" + key + "': empty matrix");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i].size() == rows.front().size(), "config field '" + key + "': ragged matrix");
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

json matrix_to(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(row);
  }
  return rows;
}

// Scalar fields addressed through accessors so parsing and echoing share one table.
struct Field {
  std::string name;
  std::function<void(ExperimentConfig&, const json&)> read;
  std::function<json(ExperimentConfig&)> write;
};

template <typename T, typename Access>
Field scalar(std::string name, Access access) {
  return {name, [access, name](ExperimentConfig& c, const json& v) { access(c) = field_as<T>(v, name); },
          [access](ExperimentConfig& c) { return json(access(c)); }};
}

const std::vector<Field>& fields() {
  using C = ExperimentConfig;
  static const std::vector<Field> table = {
      scalar<std::string>("problem", [](C& c) -> auto& { return c.problem; }),
      scalar<int>("lqr_test", [](C& c) -> auto& { return c.lqr_test; }),
      scalar<int>("lqr_dim", [](C& c) -> auto& { return c.lqr_dim; }),
      scalar<std::uint64_t>("lqr_seed", [](C& c) -> auto& { return c.lqr_seed; }),
      scalar<double>("cartpole_ball_mass", [](C& c) -> auto& { return c.cartpole.ball_mass; }),
      scalar<double>("cartpole_pole_length", [](C& c) -> auto& { return c.cartpole.pole_length; }),
      scalar<double>("cartpole_cart_mass", [](C& c) -> auto& { return c.cartpole.cart_mass; }),
      scalar<double>("cartpole_cart_friction", [](C& c) -> auto& { return c.cartpole.cart_friction; }),
      scalar<double>("cartpole_pole_friction", [](C& c) -> auto& { return c.cartpole.pole_friction; }),
      scalar<double>("cartpole_force_max", [](C& c) -> auto& { return c.cartpole.force_max; }),
      scalar<double>("cartpole_position_weight", [](C& c) -> auto& { return c.cartpole.position_weight; }),
      scalar<double>("gravity", [](C& c) -> auto& { return c.cartpole.gravity; }),
      scalar<double>("advertising_effort_max", [](C& c) -> auto& { return c.advertising.effort_max; }),
      scalar<double>("advertising_depreciation", [](C& c) -> auto& { return c.advertising.depreciation; }),
      scalar<double>("advertising_adaptation", [](C& c) -> auto& { return c.advertising.adaptation; }),
      scalar<double>("advertising_response", [](C& c) -> auto& { return c.advertising.response; }),
      scalar<double>("advertising_churn", [](C& c) -> auto& { return c.advertising.churn; }),
      scalar<double>("advertising_novelty_weight", [](C& c) -> auto& { return c.advertising.novelty_weight; }),
      scalar<double>("advertising_margin", [](C& c) -> auto& { return c.advertising.margin; }),
      scalar<std::string>("model", [](C& c) -> auto& { return c.model; }),
      scalar<int>("rbf_modes", [](C& c) -> auto& { return c.rbf_modes; }),
      scalar<double>("init_q_scale", [](C& c) -> auto& { return c.init_q_scale; }),
      scalar<double>("init_q_noise", [](C& c) -> auto& { return c.init_q_noise; }),
      scalar<bool>("filter_points", [](C& c) -> auto& { return c.pi.filter_points; }),
      scalar<int>("iterations", [](C& c) -> auto& { return c.pi.n_iterations; }),
      scalar<double>("learning_rate", [](C& c) -> auto& { return c.pi.train.learning_rate; }),
      scalar<double>("beta1", [](C& c) -> auto& { return c.pi.train.beta1; }),
      scalar<double>("beta2", [](C& c) -> auto& { return c.pi.train.beta2; }),
      scalar<double>("epsilon", [](C& c) -> auto& { return c.pi.train.epsilon; }),
      scalar<double>("loss_tol", [](C& c) -> auto& { return c.pi.train.loss_tol; }),
      scalar<bool>("carry_adam_state", [](C& c) -> auto& { return c.pi.carry_adam_state; }),
      scalar<double>("step", [](C& c) -> auto& { return c.pi.characteristics.step; }),
      scalar<double>("trunc_tol", [](C& c) -> auto& { return c.pi.characteristics.trunc_tol; }),
      scalar<double>("t_max", [](C& c) -> auto& { return c.pi.characteristics.t_max; }),
      scalar<double>("blowup_bound", [](C& c) -> auto& { return c.pi.characteristics.blowup_bound; }),
      scalar<double>("spacing", [](C& c) -> auto& { return c.pi.spacing; }),
      scalar<double>("divergence_threshold", [](C& c) -> auto& { return c.pi.divergence_threshold; }),
      scalar<bool>("resample_each_iteration", [](C& c) -> auto& { return c.pi.resample_each_iteration; }),
      scalar<int>("residual_points", [](C& c) -> auto& { return c.pi.residual_points; }),
      scalar<std::uint64_t>("residual_seed", [](C& c) -> auto& { return c.pi.residual_seed; }),
      scalar<int>("summary_window", [](C& c) -> auto& { return c.pi.summary_window; }),
      scalar<int>("probe_points", [](C& c) -> auto& { return c.pi.probe_points; }),
      scalar<double>("gap_alpha", [](C& c) -> auto& { return c.pi.gap_alpha; }),
      scalar<std::uint64_t>("probe_seed", [](C& c) -> auto& { return c.pi.probe_seed; }),
      scalar<int>("workers", [](C& c) -> auto& { return c.pi.par.workers; }),
      scalar<std::vector<double>>("mu_values", [](C& c) -> auto& { return c.mu_values; }),
      scalar<std::vector<int>>("trajectory_counts", [](C& c) -> auto& { return c.trajectory_counts; }),
      scalar<std::vector<int>>("train_step_counts", [](C& c) -> auto& { return c.train_step_counts; }),
      scalar<std::vector<std::uint64_t>>("seeds", [](C& c) -> auto& { return c.seeds; }),
      scalar<std::string>("out_dir", [](C& c) -> auto& { return c.out_dir; }),
      scalar<bool>("write_checkpoints", [](C& c) -> auto& { return c.write_checkpoints; }),
  };
  return table;
}

const Field* find_field(const std::string& key) {
  for (const auto& f : fields()) {
    if (f.name == key) return &f;
  }
  return nullptr;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& doc) {
  require(doc.is_object(), "config: top level must be an object");
  ExperimentConfig c;
  std::optional<Eigen::VectorXd> domain_lower, domain_upper, filter_lower, filter_upper;
  bool rollup = false;
  RollupSettings rs;
  for (const auto& [key, value] : doc.items()) {
    if (key.starts_with("_") || key == "description") continue;
    if (const Field* f = find_field(key)) {
      f->read(c, value);
    } else if (key == "lqr_A") {
      c.lqr_A = matrix_from(value, key);
    } else if (key == "lqr_B") {
      c.lqr_B = matrix_from(value, key);
    } else if (key == "discount") {
      c.discount = field_as<double>(value, key);
    } else if (key == "domain_lower") {
      domain_lower = vector_from(value, key);
    } else if (key == "domain_upper") {
      domain_upper = vector_from(value, key);
    } else if (key == "filter_lower") {
      filter_lower = vector_from(value, key);
    } else if (key == "filter_upper") {
      filter_upper = vector_from(value, key);
    } else if (key == "rollup") {
      rollup = field_as<bool>(value, key);
    } else if (key == "rollup_sim_step") {
      rs.sim_step = field_as<double>(value, key);
    } else if (key == "rollup_duration") {
      rs.duration = field_as<double>(value, key);
    } else if (key == "rollup_required_upright") {
      rs.required_upright = field_as<double>(value, key);
    } else if (key == "rollup_consecutive") {
      rs.consecutive = field_as<bool>(value, key);
    } else if (key == "rollup_grid") {
      rs.grid = field_as<int>(value, key);
    } else {
      throw ContractViolation("config: unknown field '" + key + "'");
    }
  }
  require(domain_lower.has_value() == domain_upper.has_value(),
          "config fields 'domain_lower'/'domain_upper': give both or neither");
  if (domain_lower) c.domain = Box{*domain_lower, *domain_upper};
  require(filter_lower.has_value() == filter_upper.has_value(),
          "config fields 'filter_lower'/'filter_upper': give both or neither");
  if (filter_lower) c.pi.filter_box = Box{*filter_lower, *filter_upper};
  if (rollup) c.pi.rollup = rs;
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "config: cannot open '" + path + "'");
  json doc;
  try {
    doc = json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    throw ContractViolation("config: '" + path + "' is not valid JSON: " + e.what());
  }
  return from_json(doc);
}

json ExperimentConfig::to_json() const {
  ExperimentConfig copy = *this;
  json doc = json::object();
  for (const auto& f : fields()) doc[f.name] = f.write(copy);
  if (lqr_A) doc["lqr_A"] = matrix_to(*lqr_A);
  if (lqr_B) doc["lqr_B"] = matrix_to(*lqr_B);
  if (discount) doc["discount"] = *discount;
  if (domain) {
    doc["domain_lower"] = vector_to(domain->lower);
    doc["domain_upper"] = vector_to(domain->upper);
  }
  if (pi.filter_box) {
    doc["filter_lower"] = vector_to(pi.filter_box->lower);
    doc["filter_upper"] = vector_to(pi.filter_box->upper);
  }
  doc["rollup"] = pi.rollup.has_value();
  if (pi.rollup) {
    doc["rollup_sim_step"] = pi.rollup->sim_step;
    doc["rollup_duration"] = pi.rollup->duration;
    doc["rollup_required_upright"] = pi.rollup->required_upright;
    doc["rollup_consecutive"] = pi.rollup->consecutive;
    doc["rollup_grid"] = pi.rollup->grid;
  }
  return doc;
}

void ExperimentConfig::validate() const {
  require(problem == "lqr" || problem == "cartpole" || problem == "advertising",
          "config field 'problem': expected lqr, cartpole or advertising, got '" + problem + "'");
  require(model == "quadratic" || model == "rbf", "config field 'model': expected quadratic or rbf, got '" + model + "'");
  require(!mu_values.empty(), "config field 'mu_values': empty sweep list");
  require(!trajectory_counts.empty(), "config field 'trajectory_counts': empty sweep list");
  require(!train_step_counts.empty(), "config field 'train_step_counts': empty sweep list");
  require(!seeds.empty(), "config field 'seeds': empty sweep list");
  for (double mu : mu_values) require(mu >= 0.0 && mu <= 1.0, "config field 'mu_values': entries must lie in [0, 1]");
  for (int n : trajectory_counts) require(n > 0, "config field 'trajectory_counts': entries must be positive");
  for (int s : train_step_counts) require(s >= 0, "config field 'train_step_counts': entries must be nonnegative");
  require(!out_dir.empty(), "config field 'out_dir': must not be empty");
  if (problem == "lqr") {
    require(lqr_test >= 0 && lqr_test <= 3, "config field 'lqr_test': expected 0..3");
    if (lqr_test == 0) {
      require(lqr_A.has_value(), "config field 'lqr_A': required when lqr_test is 0");
    } else {
      require(lqr_dim > 0, "config field 'lqr_dim': must be positive");
    }
  }
  if (model == "rbf") {
    require(rbf_modes > 0, "config field 'rbf_modes': must be positive");
    require(init_q_scale == 0.0, "config field 'init_q_scale': only meaningful for the quadratic model");
    require(init_q_noise == 0.0, "config field 'init_q_noise': only meaningful for the quadratic model");
  }
  if (discount) require(*discount > 0.0, "config field 'discount': must be positive");
  if (pi.rollup) require(problem == "cartpole", "config field 'rollup': roll-ups are defined for the cart-pole only");

  const ControlProblem p = build_problem(*this);
  const Box box = domain.value_or(default_domain(*this));
  box.validate("config fields 'domain_lower'/'domain_upper'");
  require_dim(box.dim(), p.dim_state, "config field 'domain_lower'");
  for (const auto& cell : sweep_cells(*this)) build_pi_config(*this, p, cell).validate(p);
}

std::string Cell::key() const {
  return "mu" + fmt(mu) + "_N" + std::to_string(n_trajectories) + "_steps" + std::to_string(train_steps) + "_seed" +
         std::to_string(seed);
}

std::vector<Cell> sweep_cells(const ExperimentConfig& config) {
  std::vector<Cell> cells;
  for (double mu : config.mu_values) {
    for (int n : config.trajectory_counts) {
      for (int steps : config.train_step_counts) {
        for (std::uint64_t seed : config.seeds) cells.push_back({mu, n, steps, seed});
      }
    }
  }
  return cells;
}

ControlProblem build_problem(const ExperimentConfig& config) {
  if (config.problem == "lqr") {
    LqrSpec spec;
    if (config.lqr_test == 0) {
      require(config.lqr_A.has_value(), "config field 'lqr_A': required when lqr_test is 0");
      spec.A = *config.lqr_A;
      spec.B = config.lqr_B.value_or(Matrix::Identity(spec.A.rows(), spec.A.rows()));
      spec.discount = 1.0;
    } else {
      spec = lqr_test_spec(config.lqr_test, config.lqr_dim, config.lqr_seed);
    }
    if (config.discount) spec.discount = *config.discount;
    return make_lqr(spec);
  }
  if (config.problem == "cartpole") {
    CartPoleSpec spec = config.cartpole;
    if (config.discount) spec.discount = *config.discount;
    return make_cartpole(spec);
  }
  if (config.problem == "advertising") {
    AdvertisingSpec spec = config.advertising;
    if (config.discount) spec.discount = *config.discount;
    return make_advertising(spec);
  }
  throw ContractViolation("config field 'problem': unknown problem '" + config.problem + "'");
}

Box default_domain(const ExperimentConfig& config) {
  constexpr double pi = std::numbers::pi;
  if (config.problem == "cartpole") {
    Eigen::VectorXd lo(4), hi(4);
    lo << -2.0 * pi, -pi, -0.5, -2.4;
    hi << 2.0 * pi, pi, 0.5, 2.4;
    return {lo, hi};
  }
  if (config.problem == "advertising") {
    Eigen::VectorXd lo = Eigen::VectorXd::Zero(3), hi(3);
    hi << 4.0, 4.0, 10.0;
    return {lo, hi};
  }
  const int d = config.lqr_test == 0 && config.lqr_A ? static_cast<int>(config.lqr_A->rows()) : config.lqr_dim;
  return {Eigen::VectorXd::Constant(d, -1.0), Eigen::VectorXd::Constant(d, 1.0)};
}

ValueModel build_initial_model(const ExperimentConfig& config, const ControlProblem& problem, const Cell& cell) {
  // Keyed on the seed only, so every μ and budget starts from the same model.
  const std::uint64_t seed = substream_seed(cell.seed, {0x6d6f64656cULL});
  if (config.model == "quadratic") {
    const int d = problem.dim_state;
    Matrix q = config.init_q_scale * Matrix::Identity(d, d);
    if (config.init_q_noise != 0.0) {
      Rng rng(seed);
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) q(i, j) += config.init_q_noise * rng.normal();
      }
    }
    return QuadraticModel(q);
  }
  const Box box = config.domain.value_or(default_domain(config));
  return RbfModel::initialized(config.rbf_modes, box, seed);
}

PiConfig build_pi_config(const ExperimentConfig& config, const ControlProblem& /*problem*/, const Cell& cell) {
  PiConfig pi = config.pi;
  pi.domain_box = config.domain.value_or(default_domain(config));
  pi.n_trajectories = cell.n_trajectories;
  pi.seed = cell.seed;
  pi.train.mu = cell.mu;
  pi.train.max_steps = cell.train_steps;
  return pi;
}

CellOutcome run_cell(const ExperimentConfig& config, const Cell& cell, const RecordCallback& on_record) {
  const ControlProblem problem = build_problem(config);
  const PiConfig pi = build_pi_config(config, problem, cell);
  const auto start = std::chrono::steady_clock::now();
  PiResult result = run_pi_lambda(problem, build_initial_model(config, problem, cell), pi, on_record);
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  return {cell, std::move(result), elapsed.count()};
}

const char* const kRecordsHeader = "problem,mu,n_traj,train_steps,seed,iter,residual,loss,diverged,rollups";
const char* const kSummaryHeader =
    "problem,mu,n_traj,train_steps,seed,iterations,diverged,mean_residual,mean_rollups,wall_seconds";

SummaryRow summary_row(const std::string& problem, const CellOutcome& o) {
  SummaryRow row;
  row.problem = problem;
  row.mu = o.cell.mu;
  row.n_traj = o.cell.n_trajectories;
  row.train_steps = o.cell.train_steps;
  row.seed = o.cell.seed;
  row.iterations = static_cast<int>(o.result.records.size());
  row.diverged = o.result.diverged;
  row.mean_residual = o.result.mean_residual;
  row.mean_rollups = o.result.mean_rollups;
  row.wall_seconds = o.wall_seconds;
  return row;
}

void write_records_csv(std::ostream& out, const std::string& problem, const std::vector<CellOutcome>& outcomes) {
  out << kRecordsHeader << '\n';
  for (const auto& o : outcomes) {
    for (const auto& r : o.result.records) {
      out << problem << ',' << fmt(o.cell.mu) << ',' << o.cell.n_trajectories << ',' << o.cell.train_steps << ','
          << o.cell.seed << ',' << r.iteration << ',' << fmt(r.hjb_residual) << ',' << fmt(r.train_loss) << ','
          << (r.diverged ? 1 : 0) << ',' << (r.rollup_count ? fmt(*r.rollup_count) : "") << '\n';
    }
  }
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << kSummaryHeader << '\n';
  for (const auto& r : rows) {
    out << r.problem << ',' << fmt(r.mu) << ',' << r.n_traj << ',' << r.train_steps << ',' << r.seed << ','
        << r.iterations << ',' << (r.diverged ? 1 : 0) << ',' << fmt(r.mean_residual) << ','
        << (r.mean_rollups ? fmt(*r.mean_rollups) : "") << ',' << fmt(r.wall_seconds) << '\n';
  }
}

std::vector<SummaryRow> read_summary_csv(std::istream& in) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "summary: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  require(line == kSummaryHeader, "summary: unexpected header '" + line + "'");
  std::vector<SummaryRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(col);
    if (!line.empty() && line.back() == ',') cols.emplace_back();
    const std::string where = "summary line " + std::to_string(lineno);
    require(cols.size() == 10, where + ": expected 10 columns");
    SummaryRow r;
    r.problem = cols[0];
    r.mu = parse_double(cols[1], where + " mu");
    r.n_traj = std::stoi(cols[2]);
    r.train_steps = std::stoi(cols[3]);
    r.seed = std::stoull(cols[4]);
    r.iterations = std::stoi(cols[5]);
    r.diverged = cols[6] == "1";
    r.mean_residual = parse_double(cols[7], where + " mean_residual");
    if (!cols[8].empty()) r.mean_rollups = parse_double(cols[8], where + " mean_rollups");
    r.wall_seconds = parse_double(cols[9], where + " wall_seconds");
    rows.push_back(r);
  }
  return rows;
}

std::vector<SummaryRow> read_summary_csv(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "summary: cannot open '" + path + "'");
  return read_summary_csv(in);
}

namespace {

void write_atomically(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp);
    require(out.good(), "cannot write '" + tmp.string() + "'");
    body(out);
    out.flush();
    require(out.good(), "write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

bool cell_less(const Cell& a, const Cell& b) {
  return std::tie(a.mu, a.n_trajectories, a.train_steps, a.seed) <
         std::tie(b.mu, b.n_trajectories, b.train_steps, b.seed);
}

}  // namespace

std::vector<CellOutcome> run_experiment(const ExperimentConfig& config, std::ostream& log) {
  config.validate();
  const std::filesystem::path out_dir(config.out_dir);
  std::filesystem::create_directories(out_dir);
  if (config.write_checkpoints) std::filesystem::create_directories(out_dir / "checkpoints");

  auto cells = sweep_cells(config);
  std::sort(cells.begin(), cells.end(), cell_less);
  std::vector<CellOutcome> outcomes;
  outcomes.reserve(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const Cell& cell = cells[i];
    auto outcome = run_cell(config, cell);
    log << "[" << (i + 1) << "/" << cells.size() << "] " << cell.key() << "  iterations "
        << outcome.result.records.size() << "  mean_residual " << fmt(outcome.result.mean_residual)
        << (outcome.result.mean_rollups ? "  mean_rollups " + fmt(*outcome.result.mean_rollups) : "")
        << (outcome.result.diverged ? "  DIVERGED" : "") << "  (" << fmt(std::round(outcome.wall_seconds * 100) / 100)
        << " s)" << std::endl;
    if (config.write_checkpoints) {
      write_atomically(out_dir / "checkpoints" / (cell.key() + ".ckpt"),
                       [&](std::ostream& out) { save_checkpoint(out, outcome.result.model); });
    }
    outcomes.push_back(std::move(outcome));
  }

  std::vector<SummaryRow> rows;
  for (const auto& o : outcomes) rows.push_back(summary_row(config.problem, o));
  write_atomically(out_dir / "records.csv", [&](std::ostream& out) { write_records_csv(out, config.problem, outcomes); });
  write_atomically(out_dir / "summary.csv", [&](std::ostream& out) { write_summary_csv(out, rows); });

  json run;
  run["config"] = config.to_json();
  run["versions"] = {{"pilambda", "1.0.0"},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"compiler", __VERSION__}};
  run["records_columns"] = kRecordsHeader;
  run["summary_columns"] = kSummaryHeader;
  json cells_json = json::array();
  for (const auto& o : outcomes) {
    cells_json.push_back({{"key", o.cell.key()},
                          {"mu", o.cell.mu},
                          {"n_traj", o.cell.n_trajectories},
                          {"train_steps", o.cell.train_steps},
                          {"seed", o.cell.seed},
                          {"iterations", o.result.records.size()},
                          {"diverged", o.result.diverged},
                          {"mean_residual", fmt(o.result.mean_residual)},
                          {"wall_seconds", o.wall_seconds}});
  }
  run["cells"] = cells_json;
  write_atomically(out_dir / "run.json", [&](std::ostream& out) { out << run.dump(2) << '\n'; });
  return outcomes;
}

// ------------------------------------------------------------------ verify

std::vector<CellAggregate> aggregate_by_cell(const std::vector<SummaryRow>& rows) {
  using Key = std::tuple<std::string, double, int, int>;
  std::map<Key, std::vector<const SummaryRow*>> groups;
  for (const auto& r : rows) groups[{r.problem, r.mu, r.n_traj, r.train_steps}].push_back(&r);
  std::vector<CellAggregate> out;
  for (const auto& [key, members] : groups) {
    CellAggregate a;
    std::tie(a.problem, a.mu, a.n_traj, a.train_steps) = key;
    a.seeds = static_cast<int>(members.size());
    double residual = 0.0, rollups = 0.0;
    int finite = 0, with_rollups = 0;
    for (const auto* r : members) {
      a.any_diverged = a.any_diverged || r->diverged;
      if (std::isfinite(r->mean_residual)) {
        residual += r->mean_residual;
        ++finite;
      }
      if (r->mean_rollups) {
        rollups += *r->mean_rollups;
        ++with_rollups;
      }
    }
    a.mean_residual = finite > 0 ? residual / finite : std::numeric_limits<double>::infinity();
    if (with_rollups > 0) a.mean_rollups = rollups / with_rollups;
    out.push_back(a);
  }
  return out;
}

namespace {

std::string describe(const json& cell) {
  std::string s;
  if (cell.contains("problem")) s += cell["problem"].get<std::string>() + " ";
  s += "mu=" + fmt(cell.value("mu", 0.0));
  if (cell.contains("n_traj")) s += " N=" + std::to_string(cell["n_traj"].get<int>());
  if (cell.contains("train_steps")) s += " steps=" + std::to_string(cell["train_steps"].get<int>());
  return s;
}

std::vector<const CellAggregate*> match(const std::vector<CellAggregate>& aggs, const json& cell) {
  std::vector<const CellAggregate*> hits;
  for (const auto& a : aggs) {
    if (cell.contains("problem") && cell["problem"].get<std::string>() != a.problem) continue;
    if (std::abs(cell.value("mu", -1.0) - a.mu) > 1e-9) continue;
    if (cell.contains("n_traj") && cell["n_traj"].get<int>() != a.n_traj) continue;
    if (cell.contains("train_steps") && cell["train_steps"].get<int>() != a.train_steps) continue;
    hits.push_back(&a);
  }
  return hits;
}

const CellAggregate* match_one(const std::vector<CellAggregate>& aggs, const json& cell, std::string& problem) {
  const auto hits = match(aggs, cell);
  if (hits.empty()) {
    problem = "missing cell";
  } else if (hits.size() > 1) {
    problem = "ambiguous cell (" + std::to_string(hits.size()) + " matches)";
  } else {
    return hits.front();
  }
  return nullptr;
}

}  // namespace

std::vector<VerifyLine> verify_tables(const std::vector<SummaryRow>& rows, const json& reference) {
  require(reference.is_object(), "reference: top level must be an object");
  const auto aggs = aggregate_by_cell(rows);
  const double default_factor = reference.value("tolerance_factor", 3.0);
  const double diverge_threshold = reference.value("diverge_threshold", 0.02);
  std::vector<VerifyLine> lines;

  for (const auto& cell : reference.value("cells", json::array())) {
    VerifyLine line;
    line.label = describe(cell);
    std::string why;
    const CellAggregate* a = match_one(aggs, cell, why);
    if (a == nullptr) {
      line.detail = why;
      lines.push_back(line);
      continue;
    }
    const double factor = cell.value("factor", default_factor);
    const std::string metric = cell.value("metric", std::string("residual"));
    const json& expect = cell.at("expect");
    if (expect.is_string()) {
      require(expect.get<std::string>() == "Diverge", "reference: string expectations must be \"Diverge\"");
      line.pass = a->any_diverged || a->mean_residual > diverge_threshold;
      line.detail = std::string(a->any_diverged ? "diverged" : "residual " + fmt(a->mean_residual)) +
                    " (expect Diverge or > " + fmt(diverge_threshold) + ")";
    } else if (metric == "rollups") {
      const double want = expect.get<double>();
      const double got = a->mean_rollups.value_or(0.0);
      line.pass = !a->any_diverged && got * factor >= want;
      line.detail = "rollups " + fmt(got) + " (expect >= " + fmt(want / factor) + ")";
    } else {
      const double want = expect.get<double>();
      line.pass = !a->any_diverged && a->mean_residual <= factor * want;
      line.detail = (a->any_diverged ? std::string("diverged") : "residual " + fmt(a->mean_residual)) +
                    " (expect <= " + fmt(factor * want) + ")";
    }
    lines.push_back(line);
  }

  for (const auto& ord : reference.value("orderings", json::array())) {
    VerifyLine line;
    const std::string metric = ord.value("metric", std::string("residual"));
    const double factor = ord.value("factor", 1.0);
    line.label = describe(ord.at("better")) + " beats " + describe(ord.at("worse")) + " on " + metric;
    std::string why;
    const CellAggregate* better = match_one(aggs, ord.at("better"), why);
    const CellAggregate* worse = better ? match_one(aggs, ord.at("worse"), why) : nullptr;
    if (better == nullptr || worse == nullptr) {
      line.detail = why;
      lines.push_back(line);
      continue;
    }
    if (metric == "rollups") {
      const double b = better->mean_rollups.value_or(0.0), w = worse->mean_rollups.value_or(0.0);
      line.pass = b > factor * w;
      line.detail = fmt(b) + " vs " + fmt(w);
    } else {
      const double inf = std::numeric_limits<double>::infinity();
      const double b = better->any_diverged ? inf : better->mean_residual;
      const double w = worse->any_diverged ? inf : worse->mean_residual;
      line.pass = std::isfinite(b) && factor * b < w;
      line.detail = fmt(b) + " vs " + fmt(w) + (factor != 1.0 ? " (factor " + fmt(factor) + ")" : "");
    }
    lines.push_back(line);
  }
  return lines;
}

json reference_from_summary(const std::vector<SummaryRow>& rows) {
  json ref;
  ref["tolerance_factor"] = 1.0;
  json cells = json::array();
  for (const auto& a : aggregate_by_cell(rows)) {
    json c = {{"problem", a.problem}, {"mu", a.mu}, {"n_traj", a.n_traj}, {"train_steps", a.train_steps}};
    if (a.any_diverged) {
      c["expect"] = "Diverge";
    } else {
      c["expect"] = a.mean_residual;
    }
    cells.push_back(c);
  }
  ref["cells"] = cells;
  return ref;
}

}  // namespace pilambda

/*
 * @file commands.cpp
 *
 * This file is part of SeqSafety
 *
 * Copyright 2026 Observational Health Data Sciences and Informatics
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "seqsafety/csv.hpp"
#include "seqsafety/errors.hpp"
#include "seqsafety/evaluation.hpp"
#include "seqsafety/parallel.hpp"
#include "seqsafety/sequential_data.hpp"
#include "seqsafety/svg.hpp"

namespace seqsafety::cli {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string real(double v) { return format_real(v); }

std::ifstream open_input(const Run& run, const fs::path& rel) {
  std::ifstream in(run.root() / rel);
  if (!in) throw IoError(fmt::format("cannot read {}", (run.root() / rel).string()));
  return in;
}

double median_of(std::vector<double> v) {
  std::erase_if(v, [](double x) { return !std::isfinite(x); });
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  return sample_quantile(v, 0.5);
}

// --- e1 counts -------------------------------------------------------------

const fs::path kCountsFile = "data/counts.csv";

std::vector<std::vector<long>> read_counts(const Run& run) {
  const auto& e1 = run.config().e1;
  if (!run.current(kCountsFile)) throw IoError(fmt::format("{} is missing or stale; run simulate", kCountsFile.string()));
  auto in = open_input(run, kCountsFile);
  CsvReader reader(in);
  reader.expect_header({"replicate", "look", "count"});
  std::vector<std::vector<long>> counts(static_cast<std::size_t>(e1.replicates), std::vector<long>(e1.looks, 0));
  while (auto row = reader.next()) {
    const long r = row->as_long(0), t = row->as_long(1);
    if (r < 0 || r >= e1.replicates || t < 1 || t > e1.looks) {
      throw IoError(fmt::format("{} line {}: replicate/look out of range", kCountsFile.string(), reader.line_number()));
    }
    counts[static_cast<std::size_t>(r)][static_cast<std::size_t>(t - 1)] = row->as_long(2);
  }
  return counts;
}

// --- e3 cell grid ----------------------------------------------------------

struct GridCell {
  CellKey key;
  fs::path file;
};

fs::path cell_file(const CellKey& key) { return fs::path("cells") / (key.id() + ".csv"); }

bool method_wanted(const Options& o, Method m) {
  return o.methods.empty() ||
         std::find(o.methods.begin(), o.methods.end(), std::string(method_name(m))) != o.methods.end();
}

std::vector<GridCell> e3_grid(const E3Config& c, const DesignSpec& design, const Options& o) {
  std::vector<GridCell> grid;
  auto add = [&](CellKey key) { grid.push_back({key, cell_file(key)}); };
  if (method_wanted(o, Method::maxsprt)) add({Method::maxsprt, design.name(), 0.0, 0.0});
  for (double v : c.prior_variances) {
    for (Method m : {Method::bayes, Method::bbc}) {
      if (!method_wanted(o, m)) continue;
      for (double d : c.thresholds) add({m, design.name(), v, d});
    }
  }
  return grid;
}

std::vector<fs::path> bias_files(const std::string& design) {
  return {fs::path("cells") / fmt::format("bias_looks__{}.csv", design),
          fs::path("cells") / fmt::format("bias_samples__{}.csv", design),
          fs::path("cells") / fmt::format("bias_density__{}.csv", design)};
}

const fs::path kIndexFile = "cells/index.csv";

struct IndexRow {
  CellKey key;
  fs::path file;
  std::string status;
};

void write_index(Run& run, const std::vector<IndexRow>& rows) {
  std::ostringstream out;
  out << "cell_id,method,design,prior_variance,delta1,file,status\n";
  for (const auto& r : rows) {
    out << r.key.id() << ',' << method_name(r.key.method) << ',' << r.key.design << ',' << real(r.key.prior_variance)
        << ',' << real(r.key.delta1) << ',' << r.file.generic_string() << ',' << r.status << '\n';
  }
  run.write_csv(kIndexFile, out.str());
}

std::vector<IndexRow> read_index(const Run& run) {
  std::vector<IndexRow> rows;
  if (!run.current(kIndexFile)) return rows;
  auto in = open_input(run, kIndexFile);
  CsvReader reader(in);
  reader.expect_header({"cell_id", "method", "design", "prior_variance", "delta1", "file", "status"});
  while (auto row = reader.next()) {
    IndexRow r;
    r.key = {parse_method((*row)[1]), (*row)[2], row->as_double(3), row->as_double(4)};
    r.file = (*row)[5];
    r.status = (*row)[6];
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<OutcomeTrajectory> read_cell(const Run& run, const fs::path& rel) {
  auto in = open_input(run, rel);
  return read_outcomes_csv(in);
}

std::string outcomes_body(std::span<const OutcomeTrajectory> outcomes) {
  std::ostringstream out;
  write_outcomes_csv(out, outcomes);
  return out.str();
}

void write_bias_outputs(Run& run, const std::string& design, const E3Result& result) {
  const auto files = bias_files(design);
  std::ostringstream looks;
  looks << "design,replicate,look,skipped,flagged,b_bar_mean,tau_median,prob_positive,rhat_b_bar,rhat_tau\n";
  for (const auto& b : result.bias) {
    looks << b.design << ',' << b.replicate << ',' << b.look << ',' << (b.skipped ? 1 : 0) << ','
          << (b.flagged ? 1 : 0) << ',' << real(b.b_bar_mean) << ',' << real(b.tau_median) << ','
          << real(b.prob_positive) << ',' << real(b.rhat_b_bar) << ',' << real(b.rhat_tau) << '\n';
  }
  run.write_csv(files[0], looks.str());

  std::ostringstream samples;
  samples << "design,look,chain,iteration,b_bar,tau\n";
  for (const auto& s : result.bias_samples) {
    samples << s.design << ',' << s.look << ',' << s.chain << ',' << s.iter << ',' << real(s.b_bar) << ','
            << real(s.tau) << '\n';
  }
  run.write_csv(files[1], samples.str());

  std::ostringstream density;
  density << "design,look,beta,density\n";
  const BetaGrid grid;
  if (!result.bias_density.empty()) {
    const auto& by_look = result.bias_density.front();
    for (std::size_t t = 0; t < by_look.size(); ++t) {
      for (std::size_t j = 0; j < by_look[t].size(); ++j) {
        density << design << ',' << (t + 1) << ',' << real(grid[j]) << ',' << real(by_look[t][j]) << '\n';
      }
    }
  }
  run.write_csv(files[2], density.str());
}

// --- analyze per scenario --------------------------------------------------

int analyze_e1(Run& run) {
  const auto& c = run.config().e1;
  std::vector<fs::path> files;
  for (int planned : c.schedule_looks) files.push_back(fs::path("cells") / fmt::format("maxsprt__planned{}.csv", planned));
  if (run.resume() && std::all_of(files.begin(), files.end(), [&](const auto& f) { return run.current(f); })) {
    for (const auto& f : files) run.keep(f);
    log_line("e1 cells already complete; skipped");
    return 0;
  }
  const auto result = evaluate_e1(c, read_counts(run), run.providers());
  for (std::size_t s = 0; s < files.size(); ++s) {
    std::ostringstream out;
    out << "planned_looks,cv,empirical_alpha_at_cv,look,cumulative_type1\n";
    const auto& cv = result.cvs[s];
    for (std::size_t t = 0; t < result.type1_curve[s].size(); ++t) {
      out << c.schedule_looks[s] << ',' << real(cv.cv) << ',' << real(cv.empirical_alpha_at_cv) << ',' << (t + 1)
          << ',' << real(result.type1_curve[s][t]) << '\n';
    }
    run.write_csv(files[s], out.str());
  }
  return 0;
}

int analyze_e2(Run& run) {
  const auto& c = run.config().e2;
  std::vector<fs::path> files;
  for (const auto& d : c.designs) files.push_back(fs::path("cells") / fmt::format("estimates__{}.csv", d.name()));
  if (run.resume() && std::all_of(files.begin(), files.end(), [&](const auto& f) { return run.current(f); })) {
    for (const auto& f : files) run.keep(f);
    log_line("e2 cells already complete; skipped");
    return 0;
  }
  const auto result = run_e2(c, run.providers());
  for (std::size_t d = 0; d < files.size(); ++d) {
    std::ostringstream out;
    out << "replicate,look,cutoff_week,mle,lo95,hi95,estimable\n";
    for (std::size_t r = 0; r < result.estimates[d].size(); ++r) {
      for (std::size_t t = 0; t < result.estimates[d][r].size(); ++t) {
        const auto& e = result.estimates[d][r][t];
        out << r << ',' << (t + 1) << ',' << result.cutoffs[t] << ',' << real(e.mle) << ',' << real(e.lo95) << ','
            << real(e.hi95) << ',' << (e.estimable ? 1 : 0) << '\n';
      }
    }
    run.write_csv(files[d], out.str());
  }
  return 0;
}

CellKey fig3_key(const Fig3Config& c) { return {Method::bayes, c.design.name(), c.prior.variance, c.delta1}; }

int analyze_fig3(Run& run, const Options& o) {
  const auto& c = run.config().fig3;
  if (!method_wanted(o, Method::bayes)) {
    log_line("warning: empty method grid; nothing to analyze");
    return 0;
  }
  const fs::path file = cell_file(fig3_key(c));
  if (run.resume() && run.current(file)) {
    run.keep(file);
    log_line("fig3 cell already complete; skipped");
    return 0;
  }
  const auto result = run_fig3(c, run.providers());
  std::ostringstream out;
  out << "replicate,look,cutoff_week,p_h1,median,sd,lo95,hi95,risk_count,stopping_look\n";
  for (std::size_t r = 0; r < result.looks.size(); ++r) {
    const auto stop = result.stopping_month[r];
    for (std::size_t t = 0; t < result.looks[r].size(); ++t) {
      const auto& p = result.looks[r][t];
      out << r << ',' << (t + 1) << ',' << result.cutoffs[t] << ',' << real(p.p_h1) << ',' << real(p.median) << ','
          << real(p.sd) << ',' << real(p.lo95) << ',' << real(p.hi95) << ',' << p.risk_count << ','
          << (stop ? std::to_string(*stop) : "NA") << '\n';
    }
  }
  run.write_csv(file, out.str());
  return 0;
}

int analyze_e3(Run& run, const Options& o) {
  const auto& c = run.config().e3;
  std::vector<IndexRow> index;
  std::size_t total = 0;
  for (const auto& d : c.designs) total += e3_grid(c, d, o).size();
  if (total == 0) {
    log_line("warning: empty method grid; nothing to analyze");
    write_index(run, index);
    return 0;
  }
  const auto providers = run.providers();
  int io_failures = 0, other_failures = 0;
  for (const auto& design : c.designs) {
    const auto grid = e3_grid(c, design, o);
    if (grid.empty()) continue;
    auto files = bias_files(design.name());
    for (const auto& g : grid) files.push_back(g.file);
    if (run.resume() && std::all_of(files.begin(), files.end(), [&](const auto& f) { return run.current(f); })) {
      for (const auto& f : files) run.keep(f);
      for (const auto& g : grid) index.push_back({g.key, g.file, "ok"});
      log_line(fmt::format("{}: cells already complete; skipped", design.name()));
      continue;
    }
    try {
      E3Config one = c;
      one.designs = {design};
      const auto result = run_e3(one, log_line, providers);
      for (const auto& g : grid) {
        const auto stored = std::find_if(result.cells.begin(), result.cells.end(), [&](const CellResult& cell) {
          return cell.key.method == g.key.method && cell.key.prior_variance == g.key.prior_variance;
        });
        if (stored == result.cells.end()) throw std::logic_error("cell missing from sweep result: " + g.key.id());
        const auto outcomes =
            g.key.method == Method::maxsprt ? stored->outcomes : with_threshold(stored->outcomes, g.key.delta1);
        run.write_csv(g.file, outcomes_body(outcomes));
        index.push_back({g.key, g.file, "ok"});
      }
      write_bias_outputs(run, design.name(), result);
      log_line(fmt::format("{}: {} cells written", design.name(), grid.size()));
    } catch (const IoError& e) {
      ++io_failures;
      log_line(fmt::format("error: {} failed: {}", design.name(), e.what()));
      for (const auto& g : grid) index.push_back({g.key, g.file, "failed"});
    } catch (const std::exception& e) {
      ++other_failures;
      log_line(fmt::format("error: {} failed: {}", design.name(), e.what()));
      for (const auto& g : grid) index.push_back({g.key, g.file, "failed"});
    }
  }
  write_index(run, index);
  if (other_failures > 0) return 3;
  if (io_failures > 0) return 2;
  return 0;
}

// --- report helpers --------------------------------------------------------

Series metric_series(const MetricTable& table, const CellKey& key, double rr, const std::string& label,
                     double MetricRow::*field) {
  Series s{label, {}, {}};
  for (const auto& row : table.select(key, rr)) {
    s.x.push_back(row.look);
    s.y.push_back(row.*field);
  }
  return s;
}

Series sensitivity_series(const MetricTable& table, const CellKey& key, double rr, const std::string& label) {
  Series s{label, {}, {}};
  for (const auto& row : table.select(key, rr)) {
    s.x.push_back(row.look);
    s.y.push_back(row.sensitivity.value_or(kNaN));
  }
  return s;
}

void report_e1(Run& run) {
  const auto& c = run.config().e1;
  std::ostringstream csv;
  csv << "planned_looks,cv,look,cumulative_type1\n";
  LineChart chart{"Cumulative Type 1 error under schedule mismatch", "look", "cumulative Type 1", {}, 0.0, {}, {c.alpha}};
  for (int planned : c.schedule_looks) {
    const fs::path f = fs::path("cells") / fmt::format("maxsprt__planned{}.csv", planned);
    if (!run.current(f)) {
      log_line(fmt::format("gap: {} missing", f.string()));
      continue;
    }
    auto in = open_input(run, f);
    CsvReader reader(in);
    reader.expect_header({"planned_looks", "cv", "empirical_alpha_at_cv", "look", "cumulative_type1"});
    Series s{fmt::format("cv for {} looks", planned), {}, {}};
    while (auto row = reader.next()) {
      csv << planned << ',' << (*row)[1] << ',' << (*row)[3] << ',' << (*row)[4] << '\n';
      s.x.push_back(row->as_double(3));
      s.y.push_back(row->as_double(4));
    }
    chart.series.push_back(std::move(s));
  }
  run.write_csv("report/e1_type1.csv", csv.str());
  run.write_svg("report/e1_type1.svg", render_svg(chart));
}

void report_e2(Run& run) {
  const auto& c = run.config().e2;
  std::ostringstream csv;
  csv << "design,look,median_rr,q25_rr,q75_rr,frac_rr_above_2_5,n_estimable\n";
  LineChart chart{"Median estimated RR by look", "look", "RR", {}, {}, {}, {std::exp(c.scenario.true_log_rr)}};
  for (const auto& d : c.designs) {
    const fs::path f = fs::path("cells") / fmt::format("estimates__{}.csv", d.name());
    if (!run.current(f)) {
      log_line(fmt::format("gap: {} missing", f.string()));
      continue;
    }
    auto in = open_input(run, f);
    CsvReader reader(in);
    reader.expect_header({"replicate", "look", "cutoff_week", "mle", "lo95", "hi95", "estimable"});
    std::map<int, std::vector<double>> by_look;
    while (auto row = reader.next()) {
      if (row->as_long(6) == 1) by_look[static_cast<int>(row->as_long(1))].push_back(std::exp(row->as_double(3)));
    }
    Series s{d.name(), {}, {}};
    for (auto& [look, rrs] : by_look) {
      std::sort(rrs.begin(), rrs.end());
      const double above =
          static_cast<double>(std::count_if(rrs.begin(), rrs.end(), [](double x) { return x > 2.5; })) /
          static_cast<double>(rrs.size());
      csv << d.name() << ',' << look << ',' << real(sample_quantile(rrs, 0.5)) << ',' << real(sample_quantile(rrs, 0.25))
          << ',' << real(sample_quantile(rrs, 0.75)) << ',' << real(above) << ',' << rrs.size() << '\n';
      s.x.push_back(look);
      s.y.push_back(sample_quantile(rrs, 0.5));
    }
    chart.series.push_back(std::move(s));
  }
  run.write_csv("report/e2_estimates.csv", csv.str());
  run.write_svg("report/e2_estimates.svg", render_svg(chart));
}

void report_fig3(Run& run) {
  const auto& c = run.config().fig3;
  std::ostringstream csv;
  csv << "look,median_p_h1,median_posterior_median,median_sd,frac_stopped\n";
  LineChart chart{"Posterior probability of a positive effect", "look", "P(beta > 0 | data)", {}, 0.0, 1.0, {c.delta1}};
  const fs::path f = cell_file(fig3_key(c));
  if (!run.current(f)) {
    log_line(fmt::format("gap: {} missing", f.string()));
  } else {
    auto in = open_input(run, f);
    CsvReader reader(in);
    reader.expect_header(
        {"replicate", "look", "cutoff_week", "p_h1", "median", "sd", "lo95", "hi95", "risk_count", "stopping_look"});
    std::map<int, std::vector<double>> p, med, sd;
    std::map<long, double> stop;
    std::set<long> reps;
    while (auto row = reader.next()) {
      const int look = static_cast<int>(row->as_long(1));
      p[look].push_back(row->as_double(3));
      med[look].push_back(row->as_double(4));
      sd[look].push_back(row->as_double(5));
      reps.insert(row->as_long(0));
      stop[row->as_long(0)] = row->as_double(9);
    }
    Series s{"median over replicates", {}, {}};
    for (const auto& [look, values] : p) {
      double stopped = 0.0;
      for (const auto& [r, at] : stop) {
        if (std::isfinite(at) && at <= look) stopped += 1.0;
      }
      csv << look << ',' << real(median_of(values)) << ',' << real(median_of(med[look])) << ','
          << real(median_of(sd[look])) << ',' << real(stopped / static_cast<double>(reps.size())) << '\n';
      s.x.push_back(look);
      s.y.push_back(median_of(values));
    }
    chart.series.push_back(std::move(s));
  }
  run.write_csv("report/fig3_posterior.csv", csv.str());
  run.write_svg("report/fig3_posterior.svg", render_svg(chart));
}

struct Calibrated {
  Method method;
  std::string design;
  double prior_variance;
  double delta1;
};

const fs::path kCalibrationFile = "calibration.csv";

std::vector<Calibrated> read_calibration(const Run& run) {
  std::vector<Calibrated> out;
  if (!run.current(kCalibrationFile)) return out;
  auto in = open_input(run, kCalibrationFile);
  CsvReader reader(in);
  reader.expect_header({"method", "design", "prior_variance", "target_type1", "delta1", "achieved_type1", "flagged"});
  while (auto row = reader.next()) {
    out.push_back({parse_method((*row)[0]), (*row)[1], row->as_double(2), row->as_double(4)});
  }
  return out;
}

void report_e3(Run& run) {
  const auto& c = run.config().e3;
  const auto index = read_index(run);
  if (index.empty()) log_line("no analyze results found; writing empty tables");
  MetricTable table, matched;
  std::map<std::string, std::vector<OutcomeTrajectory>> loaded;  // by cell id
  for (const auto& r : index) {
    if (r.status != "ok" || !run.current(r.file)) {
      log_line(fmt::format("gap: cell {} is {}", r.key.id(), r.status != "ok" ? r.status : "missing"));
      continue;
    }
    auto outcomes = read_cell(run, r.file);
    table.add(compute_metrics(r.key, outcomes));
    loaded[r.key.id()] = std::move(outcomes);
  }
  for (const auto& cal : read_calibration(run)) {
    for (const auto& r : index) {
      if (r.key.method != cal.method || r.key.design != cal.design || r.key.prior_variance != cal.prior_variance) {
        continue;
      }
      const auto it = loaded.find(r.key.id());
      if (it == loaded.end()) continue;
      CellKey key = r.key;
      key.delta1 = cal.delta1;
      matched.add(compute_metrics(key, with_threshold(it->second, cal.delta1)));
      break;
    }
  }
  std::ostringstream out;
  table.write_csv(out);
  run.write_csv("report/metrics.csv", out.str());
  std::ostringstream mout;
  matched.write_csv(mout);
  run.write_csv("report/matched_metrics.csv", mout.str());

  // Figures at the largest configured threshold.
  const double delta = c.thresholds.empty() ? 0.0 : *std::max_element(c.thresholds.begin(), c.thresholds.end());
  const double prior = c.prior_variances.front();
  for (const auto& d : c.designs) {
    const std::string name = d.name();
    const CellKey mx{Method::maxsprt, name, 0.0, 0.0}, by{Method::bayes, name, prior, delta},
        bb{Method::bbc, name, prior, delta};
    LineChart type1{fmt::format("Negative-control Type 1, {}", name), "look", "cumulative Type 1", {}, 0.0, {}, {c.alpha}};
    for (const auto& [key, label] : {std::pair{mx, std::string("MaxSPRT")}, {by, fmt::format("Bayes d={:g}", delta)},
                                     {bb, fmt::format("BBC d={:g}", delta)}}) {
      auto s = metric_series(table, key, 1.0, label, &MetricRow::type1);
      if (!s.x.empty()) type1.series.push_back(std::move(s));
    }
    run.write_svg(fs::path("report") / fmt::format("type1__{}.svg", name), render_svg(type1));

    LineChart power{fmt::format("Positive-control sensitivity, {}", name), "look", "sensitivity", {}, 0.0, 1.0, {}};
    for (double rr : {1.5, 2.0}) {
      for (const auto& [key, label] : {std::pair{mx, std::string("MaxSPRT")}, {bb, std::string("BBC")}}) {
        auto s = sensitivity_series(table, key, rr, fmt::format("{} RR {:g}", label, rr));
        if (!s.x.empty()) power.series.push_back(std::move(s));
      }
    }
    run.write_svg(fs::path("report") / fmt::format("power__{}.svg", name), render_svg(power));

    const fs::path density_file = bias_files(name)[2];
    if (run.current(density_file)) {
      auto in = open_input(run, density_file);
      CsvReader reader(in);
      reader.expect_header({"design", "look", "beta", "density"});
      std::map<int, Series> by_look;
      while (auto row = reader.next()) {
        const int look = static_cast<int>(row->as_long(1));
        if (look != 3 && look != 6 && look != 12) continue;
        auto& s = by_look[look];
        s.label = fmt::format("look {}", look);
        s.x.push_back(row->as_double(2));
        s.y.push_back(row->as_double(3));
      }
      LineChart density{fmt::format("Predictive bias density, {}", name), "bias b", "density", {}, 0.0, {}, {}};
      for (auto& [look, s] : by_look) density.series.push_back(std::move(s));
      run.write_svg(fs::path("report") / fmt::format("bias_density__{}.svg", name), render_svg(density));
    } else {
      log_line(fmt::format("gap: {} missing", density_file.string()));
    }
  }
}

}  // namespace

int cmd_simulate(const Options& o) {
  auto run = Run::open(o, true);
  const auto& c = run->config();
  run->begin_step("simulate");
  if (c.scenario == Scenario::e1) {
    if (run->resume() && run->current(kCountsFile)) {
      run->keep(kCountsFile);
      log_line("counts already simulated; skipped");
    } else {
      const auto counts = simulate_e1_counts(c.e1);
      std::ostringstream out;
      out << "replicate,look,count\n";
      for (std::size_t r = 0; r < counts.size(); ++r) {
        for (std::size_t t = 0; t < counts[r].size(); ++t) out << r << ',' << (t + 1) << ',' << counts[r][t] << '\n';
      }
      run->write_csv(kCountsFile, out.str());
    }
    run->end_step();
    return 0;
  }

  const auto jobs = run->population_jobs();
  std::atomic<long> done{0};
  parallel_for(jobs.size(), run->jobs(), [&](std::size_t k) {
    const auto& job = jobs[k];
    std::vector<fs::path> files{Run::replicate_dir(job.replicate) / "subjects.csv"};
    for (const auto& s : job.outcomes) files.push_back(Run::events_file(job.replicate, s.outcome_id));
    if (run->resume() && std::all_of(files.begin(), files.end(), [&](const auto& f) { return run->current(f); })) {
      for (const auto& f : files) run->keep(f);
      return;
    }
    std::vector<SubjectTrajectory> first;
    for (std::size_t i = 0; i < job.outcomes.size(); ++i) {
      auto traj = simulate_population(job.outcomes[i]);
      if (i == 0) {
        std::ostringstream out;
        write_subjects_csv(out, traj);
        run->write_csv(files[0], out.str());
        first = traj;
      } else {
        for (std::size_t j = 0; j < traj.size(); ++j) {
          if (traj[j].covariate != first[j].covariate || traj[j].vaccination_week != first[j].vaccination_week) {
            throw std::logic_error("outcomes of one replicate disagree on subjects");
          }
        }
      }
      std::ostringstream out;
      write_events_csv(out, traj);
      run->write_csv(files[i + 1], out.str());
    }
    const long n = ++done;
    if (n % 10 == 0) log_line(fmt::format("simulated {} replicates", n));
  });
  log_line(fmt::format("{} replicates ready under {}", jobs.size(), (run->root() / "data").string()));
  run->end_step();
  return 0;
}

int cmd_cv(const Options& o) {
  auto run = Run::open(o, false);
  run->require_step("simulate");
  const auto& c = run->config();
  run->begin_step("cv");
  switch (c.scenario) {
    case Scenario::e1: evaluate_e1(c.e1, read_counts(*run), run->providers()); break;
    case Scenario::e3: e3_critical_values(c.e3, run->providers(), log_line); break;
    default: log_line(fmt::format("scenario {} uses no critical values; nothing to do", scenario_name(c.scenario)));
  }
  const fs::path cv_dir = run->root() / "cv";
  if (fs::exists(cv_dir)) {
    std::vector<fs::path> names;
    for (const auto& entry : fs::directory_iterator(cv_dir)) {
      if (entry.path().extension() == ".json") names.push_back(fs::path("cv") / entry.path().filename());
    }
    std::sort(names.begin(), names.end());
    for (const auto& n : names) run->keep(n);
  }
  run->end_step();
  return 0;
}

int cmd_analyze(const Options& o) {
  auto run = Run::open(o, false);
  run->require_step("simulate");
  run->begin_step("analyze");
  int code = 0;
  switch (run->config().scenario) {
    case Scenario::e1: code = analyze_e1(*run); break;
    case Scenario::e2: code = analyze_e2(*run); break;
    case Scenario::fig3: code = analyze_fig3(*run, o); break;
    case Scenario::e3: code = analyze_e3(*run, o); break;
  }
  run->end_step();
  return code;
}

int cmd_calibrate(const Options& o) {
  auto run = Run::open(o, false);
  run->require_step("analyze");
  const auto& c = run->config();
  run->begin_step("calibrate");
  if (c.scenario != Scenario::e3) {
    log_line(fmt::format("calibrate applies to e3 only; scenario {} has nothing to calibrate", scenario_name(c.scenario)));
    run->end_step();
    return 0;
  }
  const auto index = read_index(*run);
  std::ostringstream out;
  out << "method,design,prior_variance,target_type1,delta1,achieved_type1,flagged\n";
  auto usable = [&](const IndexRow& r) { return r.status == "ok" && run->current(r.file); };
  for (const auto& d : c.e3.designs) {
    const auto mx = std::find_if(index.begin(), index.end(), [&](const IndexRow& r) {
      return r.key.method == Method::maxsprt && r.key.design == d.name() && usable(r);
    });
    if (mx == index.end()) {
      log_line(fmt::format("gap: no MaxSPRT cell for {}; skipped", d.name()));
      continue;
    }
    const auto ref = negative_controls_only(read_cell(*run, mx->file));
    if (ref.empty()) continue;
    double target = 0.0;
    for (const auto& t : ref) target += t.first_signal() ? 1.0 : 0.0;
    target /= static_cast<double>(ref.size());
    for (double v : c.e3.prior_variances) {
      for (Method m : {Method::bayes, Method::bbc}) {
        const auto cell = std::find_if(index.begin(), index.end(), [&](const IndexRow& r) {
          return r.key.method == m && r.key.design == d.name() && r.key.prior_variance == v && usable(r);
        });
        if (cell == index.end()) continue;
        const auto ncs = negative_controls_only(read_cell(*run, cell->file));
        if (ncs.empty()) continue;
        const auto cal = calibrate_threshold(ncs, target);
        out << method_name(m) << ',' << d.name() << ',' << real(v) << ',' << real(target) << ',' << real(cal.delta1)
            << ',' << real(cal.achieved_type1) << ',' << (cal.flagged ? 1 : 0) << '\n';
        log_line(fmt::format("{} {} prior {:g}: delta1 {:g} (Type 1 {:.3f} vs MaxSPRT {:.3f}){}", method_name(m),
                             d.name(), v, cal.delta1, cal.achieved_type1, target, cal.flagged ? " [unattainable]" : ""));
      }
    }
  }
  run->write_csv(kCalibrationFile, out.str());
  run->end_step();
  return 0;
}

int cmd_report(const Options& o) {
  auto run = Run::open(o, false);
  run->begin_step("report");
  switch (run->config().scenario) {
    case Scenario::e1: report_e1(*run); break;
    case Scenario::e2: report_e2(*run); break;
    case Scenario::fig3: report_fig3(*run); break;
    case Scenario::e3: report_e3(*run); break;
  }
  run->end_step();
  return 0;
}

}  // namespace seqsafety::cli

/*
 * Copyright (c) 2026, the bmmpp2 authors.
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

// Command-line front end: simulation, descriptors, fitting, likelihood,
// counting probabilities, queue analysis and packet-trace ingestion.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bmmpp/counting.hpp"
#include "bmmpp/descriptors.hpp"
#include "bmmpp/fit.hpp"
#include "bmmpp/json_io.hpp"
#include "bmmpp/likelihood.hpp"
#include "bmmpp/model.hpp"
#include "bmmpp/queue.hpp"
#include "bmmpp/simulate.hpp"
#include "bmmpp/trace.hpp"
#include "bmmpp/trace_io.hpp"

namespace {

using namespace bmmpp;

// Relative output paths land in $BMMPP_OUT_DIR when it is set.
std::string out_path(const std::string &path) {
  if (path.empty() || path.front() == '/') return path;
  const char *dir = std::getenv("BMMPP_OUT_DIR");
  if (!dir || !*dir) return path;
  std::string d(dir);
  if (d.back() != '/') d += '/';
  return d + path;
}

void write_text(const std::string &path, const std::string &content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  const std::string full = out_path(path);
  std::ofstream os(full);
  if (!os) throw Error("cli", "cannot open " + full + " for writing");
  os << content;
}

SimInit parse_init(const std::string &name) {
  if (name == "phi") return SimInit::StationaryPhi;
  if (name == "pi") return SimInit::StationaryPi;
  if (name == "1") return SimInit::State1;
  if (name == "2") return SimInit::State2;
  throw Error("cli", "unknown --init value '" + name + "' (phi, pi, 1, 2)");
}

// --config <file.json> injects {"flag": value} pairs as if they had been
// typed before the explicit flags, so the command line wins on conflict.
std::vector<std::string> inject_config(std::vector<std::string> args) {
  for (std::size_t i = 0; i + 1 < args.size(); ++i) {
    if (args[i] != "--config") continue;
    const std::string path = args[i + 1];
    args.erase(args.begin() + static_cast<long>(i),
               args.begin() + static_cast<long>(i) + 2);
    std::ifstream is(path);
    if (!is) throw Error("cli", "cannot open config " + path);
    json j;
    is >> j;
    std::vector<std::string> injected;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it.value().is_boolean()) {
        if (it.value().get<bool>()) injected.push_back("--" + it.key());
      } else {
        injected.push_back("--" + it.key());
        injected.push_back(it.value().is_string()
                               ? it.value().get<std::string>()
                               : it.value().dump());
      }
    }
    // Insert right after the subcommand token.
    std::size_t pos = 0;
    while (pos < args.size() && !args[pos].empty() && args[pos][0] == '-') ++pos;
    if (pos < args.size()) ++pos;
    args.insert(args.begin() + static_cast<long>(pos), injected.begin(), injected.end());
    break;
  }
  return args;
}

int run(int argc, char **argv) {
  CLI::App app{"two-state batch Markov modulated Poisson process toolkit"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  // ---- simulate ----------------------------------------------------------
  auto *sim = app.add_subcommand("simulate", "generate a trace from a model");
  std::string sim_model, sim_out = "-", sim_init = "phi";
  std::size_t sim_n = 1000;
  std::uint64_t sim_seed = 0, sim_stream = 0;
  sim->add_option("--model", sim_model, "model JSON file")->required();
  sim->add_option("--n", sim_n, "number of events")->required();
  sim->add_option("--seed", sim_seed, "rng seed");
  sim->add_option("--stream", sim_stream, "rng stream id");
  sim->add_option("--init", sim_init, "initial phase: phi | pi | 1 | 2");
  sim->add_option("--out", sim_out, "output trace CSV ('-' for stdout)");

  // ---- describe ----------------------------------------------------------
  auto *desc = app.add_subcommand(
      "describe", "descriptor table of a model, a trace, or both side by side");
  std::string desc_model, desc_trace, desc_out = "-", desc_csv;
  int desc_K = 0, desc_lags = 3;
  desc->add_option("--model", desc_model, "model JSON file");
  desc->add_option("--trace", desc_trace, "trace CSV file");
  desc->add_option("--K", desc_K, "max batch size for the empirical table");
  desc->add_option("--lags", desc_lags, "autocorrelation lags to report");
  desc->add_option("--out", desc_out, "output file ('-' for stdout)");
  desc->add_option("--csv", desc_csv, "also write the flat one-row CSV here");

  // ---- fit ---------------------------------------------------------------
  auto *fitc = app.add_subcommand("fit", "fit a model to a trace");
  std::string fit_trace, fit_out = "-", fit_model_out, fit_compare, fit_init,
              fit_variant = "general", fit_method = "moments";
  int fit_K = 0, fit_multistart = 100, fit_max_iter = 500;
  double fit_tau = 0.001, fit_tol = 1e-7;
  std::uint64_t fit_seed = 0, fit_stream = 0;
  bool fit_no_seed = false;
  fitc->add_option("--trace", fit_trace, "trace CSV file")->required();
  fitc->add_option("--K", fit_K, "max batch size (default: largest in trace)");
  fitc->add_option("--tau", fit_tau, "moment-weight in the objectives");
  fitc->add_option("--multistart", fit_multistart, "random starts per stage");
  fitc->add_option("--seed", fit_seed, "rng seed for the starts");
  fitc->add_option("--stream", fit_stream, "rng stream id");
  fitc->add_option("--variant", fit_variant, "general | iid-batch");
  fitc->add_option("--method", fit_method, "moments | em");
  fitc->add_option("--init", fit_init, "EM starting model JSON (method em)");
  fitc->add_option("--max-iter", fit_max_iter, "EM iteration cap");
  fitc->add_option("--tol", fit_tol, "EM loglik stopping tolerance");
  fitc->add_flag("--no-closed-form-seed", fit_no_seed,
                 "do not add the closed-form inversion to the starts");
  fitc->add_option("--out", fit_out, "fit result JSON ('-' for stdout)");
  fitc->add_option("--model-out", fit_model_out, "write the fitted model JSON here");
  fitc->add_option("--compare-csv", fit_compare,
                   "write empirical-vs-fitted descriptor CSV here");

  // ---- loglik ------------------------------------------------------------
  auto *llc = app.add_subcommand("loglik", "trace log-likelihood under a model");
  std::string ll_model, ll_trace;
  llc->add_option("--model", ll_model, "model JSON file")->required();
  llc->add_option("--trace", ll_trace, "trace CSV file")->required();

  // ---- count -------------------------------------------------------------
  auto *cnt = app.add_subcommand("count", "counting-process probabilities");
  std::string cnt_model, cnt_out = "-", cnt_series_out;
  double cnt_t = 1.0, cnt_eps = 1e-8, cnt_series_tmax = 0.0;
  int cnt_size_k = 0, cnt_series_points = 50, cnt_nmax = 0;
  cnt->add_option("--model", cnt_model, "model JSON file")->required();
  cnt->add_option("--t", cnt_t, "horizon");
  cnt->add_option("--eps", cnt_eps, "truncation budget");
  cnt->add_option("--size-k", cnt_size_k, "count only events of this batch size");
  cnt->add_option("--n-max", cnt_nmax, "override the automatic count cap");
  cnt->add_option("--out", cnt_out, "output CSV (n, p)");
  cnt->add_option("--series-t-max", cnt_series_tmax,
                  "also emit a (t, mean, sd) series up to this horizon");
  cnt->add_option("--series-points", cnt_series_points, "points in the series");
  cnt->add_option("--series-out", cnt_series_out, "series output CSV");

  // ---- queue -------------------------------------------------------------
  auto *que = app.add_subcommand("queue", "queue length at departures, batch/M/1");
  std::string que_model, que_out = "-", que_rho_kind = "customer";
  double que_mu = 0.0, que_rho = 0.0, que_eps = 1e-9;
  std::size_t que_sim = 0;
  std::uint64_t que_seed = 0;
  que->add_option("--model", que_model, "arrival model JSON file")->required();
  que->add_option("--mu", que_mu, "service rate");
  que->add_option("--rho", que_rho, "target intensity (sets mu from the model)");
  que->add_option("--rho-kind", que_rho_kind,
                  "which intensity --rho fixes: batch | customer");
  que->add_option("--eps", que_eps, "tail cut");
  que->add_option("--simulate", que_sim,
                  "also simulate this many departures as an oracle column");
  que->add_option("--seed", que_seed, "rng seed for --simulate");
  que->add_option("--out", que_out, "output CSV (i, z_i, tail_i[, sim])");

  // ---- ingest ------------------------------------------------------------
  auto *ing = app.add_subcommand("ingest", "packet file -> batch trace");
  std::string ing_input, ing_out = "-";
  int ing_format = 1, ing_threshold = 100, ing_cap = 4;
  double ing_bin = 1e-3;
  bool ing_ethernet = false;
  ing->add_option("--input", ing_input, "packet file (timestamp, size)")->required();
  ing->add_option("--format", ing_format, "1: time bins; 2: small/large labels");
  ing->add_option("--bin", ing_bin, "format 1 bin width (seconds)");
  ing->add_option("--cap", ing_cap, "format 1 max batch size");
  ing->add_option("--threshold", ing_threshold, "format 2 small/large size threshold");
  ing->add_flag("--ethernet", ing_ethernet, "enforce Ethernet size bounds");
  ing->add_option("--out", ing_out, "output trace CSV");

  // ---- sample-scatter ----------------------------------------------------
  auto *sca = app.add_subcommand("sample-scatter",
                                 "(cv, rhoT1) scatter over random models");
  std::string sca_out = "-";
  std::size_t sca_count = 100000;
  int sca_K = 2;
  std::uint64_t sca_seed = 0;
  double sca_lo = 0.5, sca_hi = 20.0;
  sca->add_option("--count", sca_count, "number of models");
  sca->add_option("--K", sca_K, "max batch size of the sampled models");
  sca->add_option("--seed", sca_seed, "rng seed");
  sca->add_option("--rate-lo", sca_lo, "exit-rate lower bound");
  sca->add_option("--rate-hi", sca_hi, "exit-rate upper bound");
  sca->add_option("--out", sca_out, "output CSV (cv, rhoT1)");

  // ---- synth-packets -----------------------------------------------------
  auto *syn = app.add_subcommand(
      "synth-packets", "synthetic packet file for exercising the ingest pipeline");
  std::string syn_out = "-";
  std::size_t syn_n = 100000;
  std::uint64_t syn_seed = 0;
  syn->add_option("--n", syn_n, "number of packets");
  syn->add_option("--seed", syn_seed, "rng seed");
  syn->add_option("--out", syn_out, "output packet file");

  std::vector<std::string> args(argv + 1, argv + argc);
  args = inject_config(std::move(args));
  std::vector<const char *> cargs{argv[0]};
  for (const std::string &a : args) cargs.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::ParseError &e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    std::cerr << error_envelope("args", e.what()).dump() << "\n";
    return 1;
  }

  if (sim->parsed()) {
    const BmmppModel model = load_model(sim_model);
    const Trace trace =
        simulate_trace(model, sim_n, RngSpec{sim_seed, sim_stream}, parse_init(sim_init));
    std::ostringstream os;
    write_trace_csv(os, trace);
    write_text(sim_out, os.str());
    return 0;
  }

  if (desc->parsed()) {
    if (desc_model.empty() && desc_trace.empty())
      throw Error("describe", "need --model, --trace, or both");
    std::optional<DescriptorReport> model_rep, trace_rep;
    if (!desc_model.empty()) model_rep = describe(load_model(desc_model), desc_lags);
    if (!desc_trace.empty()) {
      const Trace trace = read_trace_csv_file(desc_trace);
      const int K = (desc_K > 0) ? desc_K : trace.max_batch();
      trace_rep = empirical_report(trace, K, desc_lags);
    }
    if (model_rep && trace_rep) {
      write_text(desc_out, comparison_csv(*trace_rep, *model_rep));
    } else {
      const DescriptorReport &rep = model_rep ? *model_rep : *trace_rep;
      write_text(desc_out, report_to_json(rep).dump(2) + "\n");
      if (!desc_csv.empty())
        write_text(desc_csv, report_csv_header(rep) + "\n" + report_csv_row(rep) + "\n");
    }
    return 0;
  }

  if (fitc->parsed()) {
    const Trace trace = read_trace_csv_file(fit_trace);
    const int K = (fit_K > 0) ? fit_K : trace.max_batch();
    FitResult result;
    if (fit_method == "em") {
      BmmppModel init;
      if (!fit_init.empty()) {
        init = load_model(fit_init);
      } else {
        FitConfig pre;
        pre.rng = RngSpec{fit_seed, fit_stream};
        pre.tau = fit_tau;
        pre.multistart = fit_multistart;
        init = fit(trace, K, pre).model;  // moment fit as the default start
      }
      EmOptions opt;
      opt.max_iter = fit_max_iter;
      opt.tol = fit_tol;
      result = em_fit(trace, K, init, opt);
    } else if (fit_method == "moments") {
      FitConfig cfg;
      cfg.tau = fit_tau;
      cfg.multistart = fit_multistart;
      cfg.rng = RngSpec{fit_seed, fit_stream};
      cfg.seed_with_closed_form = !fit_no_seed;
      if (fit_variant == "iid-batch") cfg.variant = FitConfig::Variant::IidBatch;
      else if (fit_variant != "general")
        throw Error("fit", "unknown --variant '" + fit_variant + "'");
      result = fit(trace, K, cfg);
    } else {
      throw Error("fit", "unknown --method '" + fit_method + "'");
    }
    write_text(fit_out, fit_result_to_json(result).dump(2) + "\n");
    if (!fit_model_out.empty()) save_model(out_path(fit_model_out), result.model);
    if (!fit_compare.empty())
      write_text(fit_compare, comparison_csv(empirical_report(trace, K),
                                             describe(result.model)));
    return 0;
  }

  if (llc->parsed()) {
    const BmmppModel model = load_model(ll_model);
    const Trace trace = read_trace_csv_file(ll_trace);
    const LikelihoodValue lv = loglik(model, trace);
    std::cout << json{{"loglik", lv.loglik}, {"n", lv.n}}.dump(2) << "\n";
    return 0;
  }

  if (cnt->parsed()) {
    const BmmppModel model = load_model(cnt_model);
    CountOptions opt;
    if (cnt_nmax > 0) opt.n_max = cnt_nmax;
    const CountDistribution dist =
        (cnt_size_k > 0)
            ? count_distribution_size_k(model, cnt_t, cnt_size_k, cnt_eps, opt)
            : count_distribution(model, cnt_t, cnt_eps, opt);
    std::string csv = "n,p\n";
    char buf[64];
    for (std::size_t n = 0; n < dist.probs.size(); ++n) {
      std::snprintf(buf, sizeof(buf), "%zu,%.10g\n", n, dist.probs[n]);
      csv += buf;
    }
    write_text(cnt_out, csv);
    if (cnt_series_tmax > 0.0 && !cnt_series_out.empty()) {
      std::string series = "t,mean,sd\n";
      for (int i = 1; i <= cnt_series_points; ++i) {
        const double t = cnt_series_tmax * i / cnt_series_points;
        std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g\n", t, palm_mean(model, t),
                      std::sqrt(std::max(0.0, count_variance(model, t))));
        series += buf;
      }
      write_text(cnt_series_out, series);
    }
    return 0;
  }

  if (que->parsed()) {
    const BmmppModel model = load_model(que_model);
    QueueSpec spec;
    spec.tail_eps = que_eps;
    if (que_mu > 0.0) {
      spec.service_rate = que_mu;
    } else if (que_rho > 0.0) {
      QueueSpec probe;
      probe.service_rate = 1.0;
      const TrafficIntensity unit = traffic_intensity(model, probe);
      const double base = (que_rho_kind == "batch") ? unit.batch : unit.customer;
      if (que_rho_kind != "batch" && que_rho_kind != "customer")
        throw Error("queue", "unknown --rho-kind '" + que_rho_kind + "'");
      spec.service_rate = base / que_rho;
    } else {
      throw Error("queue", "provide --mu or --rho");
    }
    const TrafficIntensity rho = traffic_intensity(model, spec);
    const QueueLengthDist dist = queue_length_at_departures(model, spec);
    std::optional<QueueLengthDist> sim_dist;
    if (que_sim > 0)
      sim_dist = simulate_queue(model, spec, que_sim, RngSpec{que_seed, 0});
    std::string csv = sim_dist ? "i,z,tail,sim_z\n" : "i,z,tail\n";
    char buf[96];
    for (std::size_t i = 0; i < dist.z.size(); ++i) {
      if (sim_dist) {
        const double sz = (i < sim_dist->z.size()) ? sim_dist->z[i] : 0.0;
        std::snprintf(buf, sizeof(buf), "%zu,%.10g,%.10g,%.10g\n", i, dist.z[i],
                      dist.tail(i), sz);
      } else {
        std::snprintf(buf, sizeof(buf), "%zu,%.10g,%.10g\n", i, dist.z[i], dist.tail(i));
      }
      csv += buf;
    }
    write_text(que_out, csv);
    std::cerr << json{{"rho_batch", rho.batch},
                      {"rho_customer", rho.customer},
                      {"service_rate", spec.service_rate},
                      {"levels", dist.z.size()},
                      {"tail_mass", dist.tail_mass}}
                     .dump()
              << "\n";
    return 0;
  }

  if (ing->parsed()) {
    const RawPacketTrace raw = read_packet_file(ing_input);
    if (ing_ethernet) validate_packets(raw, true);
    AggregateReport report;
    Trace trace;
    if (ing_format == 1) {
      trace = aggregate_format1(raw, ing_bin, ing_cap, &report);
    } else if (ing_format == 2) {
      trace = aggregate_format2(raw, ing_threshold, 1e-6, &report);
    } else {
      throw Error("ingest", "--format must be 1 or 2");
    }
    std::ostringstream os;
    write_trace_csv(os, trace);
    write_text(ing_out, os.str());
    const TraceSummary s = trace_summary(trace);
    std::cerr << json{{"packets", report.packets},
                      {"events", report.events},
                      {"zero_gaps_floored", report.zero_gaps_floored},
                      {"mean", s.mean},
                      {"median", s.median},
                      {"cv", s.cv},
                      {"min", s.min},
                      {"max", s.max}}
                     .dump()
              << "\n";
    return 0;
  }

  if (sca->parsed()) {
    ModelBounds bounds;
    bounds.rate_lo = sca_lo;
    bounds.rate_hi = sca_hi;
    std::string csv = "cv,rhoT1\n";
    char buf[64];
    CounterRng seeder(RngSpec{sca_seed, 77});
    for (std::size_t i = 0; i < sca_count; ++i) {
      const BmmppModel m =
          sample_random_model(sca_K, RngSpec{sca_seed, 1000 + i}, bounds);
      const StationaryVectors sv = stationary_vectors(m);
      const double mu1 = time_moment(m, 1, sv);
      const double mu2 = time_moment(m, 2, sv);
      const double cv = std::sqrt(mu2 - mu1 * mu1) / mu1;
      std::snprintf(buf, sizeof(buf), "%.8g,%.8g\n", cv, rho_T(m, 1, sv));
      csv += buf;
    }
    write_text(sca_out, csv);
    return 0;
  }

  if (syn->parsed()) {
    const RawPacketTrace raw = make_standin_packets(syn_n, syn_seed);
    std::string out;
    out.reserve(syn_n * 18);
    char buf[64];
    for (std::size_t i = 0; i < raw.timestamps.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.6f %d\n", raw.timestamps[i], raw.sizes[i]);
      out += buf;
    }
    write_text(syn_out, out);
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  try {
    return run(argc, argv);
  } catch (const bmmpp::Error &e) {
    std::cerr << bmmpp::error_envelope(e.stage(), e.what()).dump() << "\n";
    return 1;
  } catch (const std::exception &e) {
    std::cerr << bmmpp::error_envelope("cli", e.what()).dump() << "\n";
    return 1;
  }
}

// qillum: Monte Carlo and closed-form comparison of optical
// object-detection protocols (fixed coherent pulses, random-intensity
// "mimic" pulses, and direct-measurement TMSV with an idler detector
// bank). Batch CLI producing self-describing CSV files.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qillum/analytic.hpp"
#include "qillum/csv.hpp"
#include "qillum/detection.hpp"
#include "qillum/mc.hpp"
#include "qillum/model.hpp"
#include "qillum/photonstats.hpp"
#include "qillum/version.hpp"

using namespace qillum;
using nlohmann::json;

namespace {

std::vector<Protocol> parse_protocols(const std::string& spec) {
  std::vector<Protocol> out;
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    const std::size_t comma = spec.find(',', pos);
    const std::string tok =
        spec.substr(pos, comma == std::string::npos ? comma : comma - pos);
    if (tok == "mimic" || tok == "random") {
      out.push_back(Protocol::random_coherent());
    } else if (tok == "fixed") {
      out.push_back(Protocol::fixed_coherent());
    } else if (tok.rfind("tmsv", 0) == 0) {
      int n = 1;
      if (tok.size() > 4) {
        if (tok[4] != ':')
          throw std::invalid_argument("bad protocol token: " + tok);
        n = std::stoi(tok.substr(5));
      }
      out.push_back(Protocol::tmsv_direct(n));
    } else if (!tok.empty()) {
      throw std::invalid_argument("unknown protocol: " + tok);
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) throw std::invalid_argument("no protocol given");
  return out;
}

std::string protocol_column(const Protocol& p) {
  if (p.kind == Protocol::Kind::tmsv_direct)
    return "tmsv" + std::to_string(p.idler_detectors);
  return p.name();
}

std::string scenario_label(const Scenario& s) {
  const auto& steps = s.steps();
  if (steps.size() == 1)
    return steps[0].kappa == 0.0 ? "absent" : "present";
  return "appears_at_" + std::to_string(steps[1].first_pulse);
}

/// Runs one protocol ensemble with a progress line on stderr every two
/// seconds (suppressed by --quiet).
EnsembleCurve run_with_progress(const Protocol& proto,
                                const SystemParams& params,
                                const Scenario& scenario, McOptions opt,
                                bool quiet) {
  std::atomic<std::uint64_t> done{0};
  opt.progress_pulses = quiet ? nullptr : &done;
  const std::uint64_t total = opt.runs * opt.pulses;

  std::atomic<bool> stop{false};
  std::thread monitor;
  if (!quiet) {
    monitor = std::thread([&]() {
      const auto t0 = std::chrono::steady_clock::now();
      while (!stop.load()) {
        std::this_thread::sleep_for(std::chrono::milliseconds(2000));
        if (stop.load()) break;
        const double frac = 100.0 * double(done.load()) / double(total);
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                          t0)
                .count();
        std::fprintf(stderr, "[qillum] %s: %5.1f%% (%.0fs elapsed)\n",
                     protocol_column(proto).c_str(), frac, secs);
      }
    });
  }
  EnsembleCurve curve;
  try {
    curve = ensemble_average(proto, params, scenario, opt);
  } catch (...) {
    stop.store(true);
    if (monitor.joinable()) monitor.join();
    throw;
  }
  stop.store(true);
  if (monitor.joinable()) monitor.join();
  return curve;
}

struct SimulateArgs {
  std::string protocols = "mimic,fixed,tmsv:1";
  double eta = 0.9, kappa = 0.1, nbar = 1.0, nbarb = 3.0;
  double dark_prob = 0.0, prior = 0.5;
  std::uint64_t runs = 500, pulses = 30000, stride = 0, seed = 42;
  std::size_t log_points = 0;
  std::uint64_t appear_at = 0;
  bool absent = false;
  int threads = 0;
  bool quiet = false;
  std::string output = "simulate.csv";
};

void write_sidecar(const std::string& csv_path, const json& meta) {
  std::ofstream f(csv_path + ".meta.json", std::ios::binary);
  if (!f) throw std::runtime_error("cannot open sidecar for " + csv_path);
  f << meta.dump(2) << "\n";
}

int cmd_simulate(const SimulateArgs& a) {
  const double folded_nbarb = effective_background(a.nbarb, a.dark_prob, a.eta);
  const SystemParams params =
      validate_params({a.eta, a.kappa, a.nbar, folded_nbarb, a.prior});
  const Scenario scenario = a.absent ? Scenario::absent()
                            : a.appear_at > 0
                                ? Scenario::appearing_at(a.appear_at, a.kappa)
                                : Scenario::constant(a.kappa);
  const std::vector<Protocol> protocols = parse_protocols(a.protocols);

  std::vector<EnsembleCurve> curves;
  for (std::size_t i = 0; i < protocols.size(); ++i) {
    McOptions opt;
    opt.runs = a.runs;
    opt.pulses = a.pulses;
    opt.master_seed = a.seed;
    opt.stride = a.stride;
    opt.log_points = a.log_points;
    opt.threads = a.threads;
    opt.stream_ctx = stream_context::kSimulation + i;
    curves.push_back(
        run_with_progress(protocols[i], params, scenario, opt, a.quiet));
  }

  CsvWriter csv(a.output);
  csv.comment("artifact", std::string("qillum ") + kVersion);
  csv.comment("command", "simulate");
  csv.comment("protocols", a.protocols);
  csv.comment("eta", a.eta);
  csv.comment("kappa", a.kappa);
  csv.comment("nbar", a.nbar);
  csv.comment("nbarb_stray", a.nbarb);
  csv.comment("dark_prob", a.dark_prob);
  csv.comment("nbarb_effective", folded_nbarb);
  csv.comment("prior", a.prior);
  csv.comment("scenario", scenario_label(scenario));
  csv.comment("runs", a.runs);
  csv.comment("pulses", a.pulses);
  csv.comment("seed", a.seed);

  std::vector<std::string> cols{"pulse_index"};
  for (const auto& p : protocols) cols.push_back(protocol_column(p));
  csv.header(cols);
  for (std::size_t g = 0; g < curves[0].pulse_index.size(); ++g) {
    std::vector<double> vals;
    for (const auto& c : curves) vals.push_back(c.mean[g]);
    csv.row(curves[0].pulse_index[g], vals);
  }
  csv.close();

  json meta{{"artifact", std::string("qillum ") + kVersion},
            {"command", "simulate"},
            {"protocols", a.protocols},
            {"eta", a.eta},
            {"kappa", a.kappa},
            {"nbar", a.nbar},
            {"nbarb_stray", a.nbarb},
            {"dark_prob", a.dark_prob},
            {"nbarb_effective", folded_nbarb},
            {"prior", a.prior},
            {"scenario", scenario_label(scenario)},
            {"runs", a.runs},
            {"pulses", a.pulses},
            {"seed", a.seed}};
  write_sidecar(a.output, meta);

  std::cout << "wrote " << a.output << " (" << curves[0].pulse_index.size()
            << " grid points, " << protocols.size() << " protocol(s))\n";
  for (std::size_t i = 0; i < protocols.size(); ++i)
    std::cout << "  " << protocol_column(protocols[i])
              << ": final mean posterior "
              << CsvWriter::format(curves[i].mean.back()) << "\n";
  return 0;
}

int cmd_analytic_point(double eta, double kappa, double nbar, double nbarb,
                       const std::string& output) {
  const SystemParams p = validate_params({eta, kappa, nbar, nbarb, 0.5});
  const double rc = p_rc_average(p);
  const double dm = p_dm_average(p);
  std::cout << "P_RC(single shot) = " << CsvWriter::format(rc) << "\n";
  std::cout << "P_DM(single shot) = " << CsvWriter::format(dm) << "\n";
  std::cout << "better: " << (rc > dm ? "mimic" : "direct-measurement")
            << "\n";
  if (!output.empty()) {
    CsvWriter csv(output);
    csv.comment("artifact", std::string("qillum ") + kVersion);
    csv.comment("command", "analytic point");
    csv.comment("eta", eta);
    csv.comment("kappa", kappa);
    csv.comment("nbarb", nbarb);
    csv.header({"nbar", "p_rc", "p_dm"});
    csv.row_strings({CsvWriter::format(nbar), CsvWriter::format(rc),
                     CsvWriter::format(dm)});
    csv.close();
  }
  return 0;
}

int cmd_analytic_crossover(double eta, double kappa,
                           const std::vector<double>& nbarb_grid, double lo,
                           double hi, const std::string& output) {
  const auto points = crossover_curve(eta, kappa, nbarb_grid, lo, hi);
  std::optional<CsvWriter> csv;
  if (!output.empty()) {
    csv.emplace(output);
    csv->comment("artifact", std::string("qillum ") + kVersion);
    csv->comment("command", "analytic crossover");
    csv->comment("eta", eta);
    csv->comment("kappa", kappa);
    csv->comment("search_lo", lo);
    csv->comment("search_hi", hi);
    csv->header({"nbarb", "nbar_min", "status"});
  }
  for (const auto& pt : points) {
    std::string status = "ok", value = "nan";
    if (!pt.crossover) {
      status = "no-crossing";
    } else {
      value = CsvWriter::format(pt.crossover->n_bar_min);
      if (pt.crossover->multiple_crossings) status = "multiple";
    }
    std::cout << "nbarb=" << CsvWriter::format(pt.n_bar_B)
              << "  nbar_min=" << value << "  " << status << "\n";
    if (csv)
      csv->row_strings({CsvWriter::format(pt.n_bar_B), value, status});
  }
  if (csv) csv->close();
  return 0;
}

int cmd_stats(double eta, double nbar, int ndet, int nmax,
              const std::vector<double>& poisson_lams,
              const std::string& output) {
  const auto count_pmf = idler_click_count_pmf(nbar, eta, ndet);
  std::vector<PhotonDistribution> cond;
  for (int k = 0; k <= ndet; ++k)
    cond.push_back(conditional_signal_pmf(
        nbar, eta, ndet, ClickPattern::make(k ? (1u << k) - 1u : 0u, ndet)));
  const PhotonDistribution avg = thermal_pmf(nbar);
  std::vector<PhotonDistribution> pois;
  for (double lam : poisson_lams) pois.push_back(poisson_pmf(lam));

  CsvWriter csv(output);
  csv.comment("artifact", std::string("qillum ") + kVersion);
  csv.comment("command", "stats");
  csv.comment("eta", eta);
  csv.comment("nbar", nbar);
  csv.comment("idler_detectors", std::uint64_t(ndet));
  csv.comment("g2_average_state", g2_zero(avg));
  for (int k = 0; k <= ndet; ++k) {
    csv.comment("p_" + std::to_string(k) + "_clicks",
                count_pmf[std::size_t(k)]);
    csv.comment("mean_given_" + std::to_string(k) + "_clicks",
                cond[std::size_t(k)].mean());
  }
  std::vector<std::string> cols{"n", "p_average"};
  for (int k = 0; k <= ndet; ++k)
    cols.push_back("p_cond_clicks" + std::to_string(k));
  for (double lam : poisson_lams)
    cols.push_back("p_poisson_" + CsvWriter::format(lam));
  csv.header(cols);
  for (int n = 0; n <= nmax; ++n) {
    std::vector<double> vals;
    vals.push_back(std::size_t(n) < avg.probs.size() ? avg.probs[n] : 0.0);
    for (const auto& d : cond)
      vals.push_back(std::size_t(n) < d.probs.size() ? d.probs[n] : 0.0);
    for (const auto& d : pois)
      vals.push_back(std::size_t(n) < d.probs.size() ? d.probs[n] : 0.0);
    csv.row(std::uint64_t(n), vals);
  }
  csv.close();
  std::cout << "wrote " << output << "\n";
  return 0;
}

struct FigureSpec {
  SimulateArgs sim;
  bool is_crossover = false;
  bool is_stats = false;
  double stats_eta = 0.9;
  double stats_nbar[2] = {0.5, 20.0};
  std::vector<double> stats_poisson_a, stats_poisson_b;
  double cross_eta = 0.9;
};

int cmd_figure(const std::string& name, std::uint64_t runs,
               std::uint64_t seed, const std::string& out_arg, int threads,
               bool quiet) {
  SimulateArgs a;
  a.runs = runs;
  a.seed = seed;
  a.threads = threads;
  a.quiet = quiet;
  a.output = out_arg.empty() ? ("figure_" + name + ".csv") : out_arg;

  if (name == "1a" || name == "1b") {
    a.protocols = "fixed,mimic,tmsv:1,tmsv:2,tmsv:4";
    a.eta = 0.9;
    a.kappa = 0.1;
    a.nbarb = 3.0;
    a.nbar = (name == "1a") ? 0.5 : 1.0;
    a.pulses = 30000;
    return cmd_simulate(a);
  }
  if (name == "2a" || name == "2b") {
    a.protocols = "fixed,mimic,tmsv:1";
    a.eta = 0.9;
    a.nbar = 1.0;
    a.kappa = (name == "2a") ? 1e-5 : 1e-7;
    a.nbarb = (name == "2a") ? 5.56e-6 : 5.56e-8;
    a.pulses = (name == "2a") ? 3000000 : 30000000;
    return cmd_simulate(a);
  }
  if (name == "3") {
    a.protocols = "fixed,mimic,tmsv:1";
    a.eta = 0.9;
    a.kappa = 0.1;
    a.nbar = 1.0;
    a.nbarb = 3.0;
    a.pulses = 30000;
    a.appear_at = 10000;
    return cmd_simulate(a);
  }
  if (name == "4") {
    a.protocols = "fixed,mimic,tmsv:1";
    a.eta = 0.2;
    a.kappa = 0.02;
    a.nbar = 20.0;
    a.nbarb = 20.0;
    a.pulses = 100000;
    return cmd_simulate(a);
  }
  if (name == "5a" || name == "5b") {
    std::vector<double> grid;
    for (int i = 0; i <= 24; ++i)
      grid.push_back(0.3 * std::pow(100.0, i / 24.0));  // 0.3 .. 30, log
    return cmd_analytic_crossover(name == "5a" ? 0.9 : 0.5, 0.1, grid, 0.01,
                                  100.0, a.output);
  }
  if (name == "d1" || name == "d2") {
    const std::string stem = a.output.size() > 4 &&
                                     a.output.substr(a.output.size() - 4) ==
                                         ".csv"
                                 ? a.output.substr(0, a.output.size() - 4)
                                 : a.output;
    if (name == "d1") {
      cmd_stats(0.9, 0.5, 1, 12, {}, stem + "_a.csv");
      cmd_stats(0.9, 20.0, 1, 80, {}, stem + "_b.csv");
    } else {
      cmd_stats(0.9, 0.5, 1, 12, {0.2, 0.7}, stem + "_a.csv");
      cmd_stats(0.9, 20.0, 1, 80, {12.0, 28.0}, stem + "_b.csv");
    }
    return 0;
  }
  throw std::invalid_argument("unknown figure name: " + name);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian object-detection protocol simulator"};
  app.set_config("--config")->configurable(false);

  SimulateArgs sim;
  CLI::App* simulate =
      app.add_subcommand("simulate", "Monte Carlo posterior curves");
  simulate->add_option("--protocol", sim.protocols,
                       "comma list: mimic,fixed,tmsv:N");
  simulate->add_option("--eta", sim.eta, "detector efficiency");
  simulate->add_option("--kappa", sim.kappa, "object reflectance");
  simulate->add_option("--nbar", sim.nbar, "mean signal photons per pulse");
  simulate->add_option("--nbarb", sim.nbarb,
                       "stray background photons per time-bin");
  simulate->add_option("--dark-prob", sim.dark_prob,
                       "dark-count probability, folded into the background");
  simulate->add_option("--prior", sim.prior, "prior P(object present)");
  simulate->add_option("--runs", sim.runs, "Monte Carlo runs");
  simulate->add_option("--pulses", sim.pulses, "pulses per run");
  simulate->add_option("--stride", sim.stride,
                       "record every N pulses (0 = auto)");
  simulate->add_option("--log-points", sim.log_points,
                       "use a log-spaced grid with this many points");
  simulate->add_option("--appear-at", sim.appear_at,
                       "object appears at this pulse index");
  simulate->add_flag("--absent", sim.absent, "object never present");
  simulate->add_option("--seed", sim.seed, "master seed");
  simulate->add_option("--threads", sim.threads, "worker threads (0 = auto)")
      ->envname("QILLUM_THREADS");
  simulate->add_flag("--quiet", sim.quiet, "suppress progress output");
  simulate->add_option("-o,--output", sim.output, "output CSV path");

  CLI::App* analytic =
      app.add_subcommand("analytic", "single-shot comparison theory");
  analytic->require_subcommand(1);
  double an_eta = 0.9, an_kappa = 0.1, an_nbar = 1.0, an_nbarb = 3.0;
  double an_lo = 0.01, an_hi = 100.0;
  double nbarb_min = 0.0, nbarb_max = 0.0;
  std::size_t nbarb_points = 0;
  std::string an_out;

  CLI::App* point = analytic->add_subcommand("point", "P_RC and P_DM");
  point->add_option("--eta", an_eta);
  point->add_option("--kappa", an_kappa);
  point->add_option("--nbar", an_nbar);
  point->add_option("--nbarb", an_nbarb);
  point->add_option("-o,--output", an_out, "optional CSV path");

  CLI::App* cross = analytic->add_subcommand(
      "crossover", "minimum nbar where the mimic average wins");
  cross->add_option("--eta", an_eta);
  cross->add_option("--kappa", an_kappa);
  cross->add_option("--nbarb", an_nbarb, "single background value");
  cross->add_option("--nbarb-min", nbarb_min, "grid start (with --nbarb-max)");
  cross->add_option("--nbarb-max", nbarb_max, "grid end");
  cross->add_option("--nbarb-points", nbarb_points, "log grid points");
  cross->add_option("--nmin-lo", an_lo, "search interval start");
  cross->add_option("--nmin-hi", an_hi, "search interval end");
  cross->add_option("-o,--output", an_out, "optional CSV path");

  std::string fig_name;
  std::uint64_t fig_runs = 500, fig_seed = 42;
  int fig_threads = 0;
  bool fig_quiet = false;
  std::string fig_out;
  CLI::App* figure =
      app.add_subcommand("figure", "reproduce a study configuration");
  figure->add_option("name", fig_name,
                     "one of 1a 1b 2a 2b 3 4 5a 5b d1 d2")
      ->required();
  figure->add_option("--runs", fig_runs, "Monte Carlo runs");
  figure->add_option("--seed", fig_seed, "master seed");
  figure->add_option("--threads", fig_threads, "worker threads")
      ->envname("QILLUM_THREADS");
  figure->add_flag("--quiet", fig_quiet, "suppress progress output");
  figure->add_option("-o,--output", fig_out, "output CSV path");

  double st_eta = 0.9, st_nbar = 0.5;
  int st_ndet = 1, st_nmax = 30;
  std::vector<double> st_poisson;
  std::string st_out = "stats.csv";
  CLI::App* stats =
      app.add_subcommand("stats", "photon-number distribution tables");
  stats->add_option("--eta", st_eta);
  stats->add_option("--nbar", st_nbar);
  stats->add_option("--ndet", st_ndet, "idler detectors");
  stats->add_option("--nmax", st_nmax, "largest photon number emitted");
  stats->add_option("--poisson", st_poisson,
                    "extra Poisson columns at these intensities");
  stats->add_option("-o,--output", st_out, "output CSV path");

  app.require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim);
    if (point->parsed())
      return cmd_analytic_point(an_eta, an_kappa, an_nbar, an_nbarb, an_out);
    if (cross->parsed()) {
      std::vector<double> grid;
      if (nbarb_points > 0) {
        if (!(nbarb_min > 0.0 && nbarb_max > nbarb_min))
          throw std::invalid_argument("need 0 < nbarb-min < nbarb-max");
        for (std::size_t i = 0; i < nbarb_points; ++i)
          grid.push_back(nbarb_min *
                         std::pow(nbarb_max / nbarb_min,
                                  nbarb_points == 1
                                      ? 0.0
                                      : double(i) / double(nbarb_points - 1)));
      } else {
        grid.push_back(an_nbarb);
      }
      return cmd_analytic_crossover(an_eta, an_kappa, grid, an_lo, an_hi,
                                    an_out);
    }
    if (figure->parsed())
      return cmd_figure(fig_name, fig_runs, fig_seed, fig_out, fig_threads,
                        fig_quiet);
    if (stats->parsed())
      return cmd_stats(st_eta, st_nbar, st_ndet, st_nmax, st_poisson, st_out);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

#include "nnmass/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "nnmass/archspec.hpp"
#include "nnmass/costmodel.hpp"
#include "nnmass/error.hpp"
#include "nnmass/restructure.hpp"
#include "nnmass/scaler.hpp"
#include "nnmass/search.hpp"
#include "nnmass/topology.hpp"
#include "nnmass/verify.hpp"

#include <unistd.h>

namespace nnmass {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string join_ints(const std::vector<int>& v, const char* sep = ",") {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + std::to_string(v[i]);
  return s;
}

std::int64_t to_count(double v, const char* flag) {
  if (!(v > 0.0) || v > 9.0e18) throw UsageError(std::string(flag) + ": must be a positive number");
  return std::llround(v);
}

// Emits to --out when given, else to stdout.
void emit(const std::string& out_path, const std::string& content, std::ostream& out) {
  if (out_path.empty()) {
    out << content;
  } else {
    write_file_atomic(out_path, content);
  }
}

struct ArchFlags {
  std::string preset;
  std::string arch_file;
  int resolution = 0;

  void add(CLI::App* app) {
    app->add_option("--preset", preset, "Preset architecture name");
    app->add_option("--arch", arch_file, "Architecture descriptor JSON file");
    app->add_option("--resolution", resolution, "Input resolution (defaults to the descriptor's)");
  }

  ArchDescriptor load() const {
    if (preset.empty() == arch_file.empty()) throw UsageError("exactly one of --preset or --arch is required");
    return preset.empty() ? parse_arch(read_file(arch_file)) : nnmass::preset(preset);
  }

  int res(const ArchDescriptor& a) const { return resolution > 0 ? resolution : a.input_resolution; }
};

struct GridFlags {
  MultiplierGrid grid;
  unsigned threads = 0;

  void add(CLI::App* app) {
    app->add_option("--wmin", grid.w_min, "Smallest width multiplier");
    app->add_option("--wmax", grid.w_max, "Largest width multiplier");
    app->add_option("--wsteps", grid.w_steps, "Width multiplier steps");
    app->add_option("--dmin", grid.d_min, "Smallest depth multiplier");
    app->add_option("--dmax", grid.d_max, "Largest depth multiplier");
    app->add_option("--dsteps", grid.d_steps, "Depth multiplier steps");
    app->add_option("--threads", threads, "Worker threads (0 = hardware concurrency)");
  }
};

CostAxis parse_axis(const std::string& s) {
  if (s == "macs") return CostAxis::Macs;
  if (s == "params") return CostAxis::Params;
  throw UsageError("--axis: expected macs or params");
}

Activation parse_branch_activation(const std::string& s) {
  if (s == "none") return Activation::none();
  if (s == "gelu") return Activation::gelu();
  if (s == "exp_kernel") return Activation::exp_kernel();
  throw UsageError("--branch-activation: expected none, gelu or exp_kernel");
}

AfrbVariant parse_variant(const std::string& s) {
  if (s == "A1") return AfrbVariant::A1;
  if (s == "A2") return AfrbVariant::A2;
  if (s == "A3") return AfrbVariant::A3;
  throw UsageError("--variant: expected A1, A2 or A3");
}

std::string cost_summary(const CostReport& r) {
  return "params=" + fmt("%.1f", r.total_params / 1e6) + "M macs=" + fmt("%.2f", r.total_macs / 1e9) + "B";
}

std::string frontier_csv(const std::vector<ScaleCandidate>& frontier, CostAxis axis) {
  std::ostringstream os;
  os << "cost,mass,w_m,d_m,params,macs\n";
  for (const auto& c : frontier) {
    os << candidate_cost(c, axis) << ',' << fmt("%.12g", c.mass) << ',' << fmt("%.12g", c.w_m) << ','
       << fmt("%.12g", c.d_m) << ',' << c.params << ',' << c.macs << '\n';
  }
  return os.str();
}

struct BudgetSpec {
  std::int64_t macs = 0;
  std::int64_t params = 0;
  bool operator==(const BudgetSpec&) const = default;
};

BudgetSpec parse_budget(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw UsageError("--budget: expected MACS:PARAMS, got '" + s + "'");
  try {
    std::size_t p1 = 0, p2 = 0;
    const std::string a = s.substr(0, colon), b = s.substr(colon + 1);
    const double macs = std::stod(a, &p1), params = std::stod(b, &p2);
    if (p1 != a.size() || p2 != b.size()) throw std::invalid_argument(s);
    return {to_count(macs, "--budget"), to_count(params, "--budget")};
  } catch (const std::logic_error&) {
    throw UsageError("--budget: expected MACS:PARAMS, got '" + s + "'");
  }
}

// Stage-structured presets used as comparison targets in report sections.
const char* reference_for(const BudgetSpec& b) {
  if (b == BudgetSpec{3'300'000'000, 21'000'000}) return "ran-i-t";
  if (b == BudgetSpec{4'500'000'000, 28'000'000}) return "ran-i-s";
  if (b == BudgetSpec{8'500'000'000, 50'000'000}) return "ran-i-b";
  return nullptr;
}

std::string report_text(const std::vector<ScaleCandidate>& cands, const std::vector<BudgetSpec>& budgets,
                        double tol) {
  std::ostringstream os;
  os << "scan: " << cands.size() << " candidates, "
     << std::count_if(cands.begin(), cands.end(), [](const auto& c) { return c.valid; }) << " valid\n";
  for (std::size_t i = 0; i < budgets.size(); ++i) {
    Budget b;
    b.target_macs = budgets[i].macs;
    b.target_params = budgets[i].params;
    b.tolerance = tol;
    b.validate();
    const auto filtered = filter_budget(cands, b);
    os << "\nbudget " << i + 1 << ": macs=" << budgets[i].macs << " params=" << budgets[i].params
       << " tol=" << fmt("%g", tol) << "\n";
    os << "  candidates: " << filtered.size() << "\n";
    if (filtered.empty()) {
      os << "  no candidates\n";
      continue;
    }
    const auto s = select_max_mass(filtered);
    os << "  selected: w_m=" << fmt("%.6g", s.w_m) << " d_m=" << fmt("%.6g", s.d_m) << " widths=["
       << join_ints(s.widths) << "] depths=[" << join_ints(s.depths) << "]\n";
    os << "  cost: params=" << s.params << " macs=" << s.macs << "\n";
    os << "  mass: " << fmt("%.12g", s.mass) << "\n";
    if (const char* ref = reference_for(budgets[i])) {
      const ArchDescriptor r = preset(ref);
      const bool same = r.stages->widths == s.widths && r.stages->depths == s.depths;
      os << "  reference " << ref << ": widths=[" << join_ints(r.stages->widths) << "] depths=["
         << join_ints(r.stages->depths) << "] mass=" << fmt("%.12g", nn_mass(r).mass)
         << (same ? " (identical)" : " (differs)") << "\n";
    }
  }
  return os.str();
}

std::string derived_path(const std::string& out, const std::string& suffix) {
  std::filesystem::path p(out);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

}  // namespace

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open '" + tmp + "' for writing");
    f << content;
    f.flush();
    if (!f) {
      std::filesystem::remove(tmp);
      throw Error("write to '" + path + "' failed");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error("cannot rename onto '" + path + "': " + ec.message());
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"nnmass: NN-Mass cost, scaling and restructuring toolkit"};
  app.name("nnmass");
  app.require_subcommand(1);

  std::string out_path, format;
  auto add_out = [&](CLI::App* sub, bool with_format) {
    sub->add_option("--out", out_path, "Output path (written atomically); stdout when omitted");
    if (with_format) {
      sub->add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "json", "text"}));
    }
  };

  // arch-validate
  ArchFlags validate_flags;
  auto* c_validate = app.add_subcommand("arch-validate", "Validate a descriptor and print its canonical form");
  validate_flags.add(c_validate);
  add_out(c_validate, false);

  // cost
  ArchFlags cost_flags;
  auto* c_cost = app.add_subcommand("cost", "Count parameters and MACs");
  cost_flags.add(c_cost);
  add_out(c_cost, true);

  // mass
  ArchFlags mass_flags;
  auto* c_mass = app.add_subcommand("mass", "NN-Mass and non-linear unit count");
  mass_flags.add(c_mass);
  add_out(c_mass, true);

  // scale
  ArchFlags scale_arch_flags;
  GridFlags scale_grid;
  double budget_macs = 0.0, budget_params = 0.0, tol = 0.025;
  auto* c_scale = app.add_subcommand("scale", "Enumerate width/depth candidates and select by mass");
  scale_arch_flags.add(c_scale);
  scale_grid.add(c_scale);
  c_scale->add_option("--budget-macs", budget_macs, "Target MACs");
  c_scale->add_option("--budget-params", budget_params, "Target parameters");
  c_scale->add_option("--tol", tol, "Relative budget tolerance");
  add_out(c_scale, true);

  // pareto
  ArchFlags pareto_arch_flags;
  GridFlags pareto_grid;
  std::string pareto_scan, axis = "macs";
  auto* c_pareto = app.add_subcommand("pareto", "Cost-vs-mass Pareto frontier");
  pareto_arch_flags.add(c_pareto);
  pareto_grid.add(c_pareto);
  c_pareto->add_option("--scan", pareto_scan, "Scan CSV produced by `scale` (instead of enumerating)");
  c_pareto->add_option("--axis", axis, "Cost axis")->check(CLI::IsMember({"macs", "params"}));
  add_out(c_pareto, false);

  // collapse-verify
  CollapseTrial trial;
  std::string expansion_text = "6";
  int trials = 1;
  bool sweep = false;
  double collapse_tol = 1e-10;
  auto* c_collapse = app.add_subcommand("collapse-verify", "Check 1x1/depthwise/1x1 collapse equivalence");
  c_collapse->add_option("--seed", trial.seed, "Seed of the first trial");
  c_collapse->add_option("--cin", trial.in_channels, "Input channels");
  c_collapse->add_option("--expansion", expansion_text, "Expansion ratio (e.g. 6 or 1/2)");
  c_collapse->add_option("--kernel", trial.kernel, "Depthwise kernel size");
  c_collapse->add_option("--stride", trial.stride, "Depthwise stride");
  c_collapse->add_option("--size", trial.height, "Input height and width");
  c_collapse->add_flag("--biased", trial.biased, "Add biases and batch norms");
  c_collapse->add_option("--trials", trials, "Consecutive seeds to run");
  c_collapse->add_flag("--sweep", sweep, "Cycle trials over C_in {2,4,8}, e {2,4,6}, k {3,5,7}, stride {1,2}");
  c_collapse->add_option("--tol", collapse_tol, "Max abs diff tolerance");
  add_out(c_collapse, false);

  // restructure
  ArchFlags restructure_flags;
  std::string keep_text = "3/5", branch = "none";
  std::vector<double> alphas;
  Band band;
  auto* c_restructure = app.add_subcommand("restructure", "Split ConvNext blocks or apply AFRB decisions");
  restructure_flags.add(c_restructure);
  c_restructure->add_option("--keep", keep_text, "Fraction of expanded channels kept non-linear");
  c_restructure->add_option("--branch-activation", branch, "Lower-branch activation")
      ->check(CLI::IsMember({"none", "gelu", "exp_kernel"}));
  c_restructure->add_option("--alphas", alphas, "Per-AFRB alpha values (ran_e descriptors)")->delimiter(',');
  c_restructure->add_option("--band-lo", band.lo, "Collapse band lower bound");
  c_restructure->add_option("--band-hi", band.hi, "Collapse band upper bound");
  add_out(c_restructure, false);

  // afrb-search
  std::string dataset = "blobs", variant = "A1", search_expansion = "4", summary_path;
  int n_samples = 256;
  double noise = 0.3;
  ModelConfig model_cfg;
  SearchConfig search_cfg;
  auto* c_search = app.add_subcommand("afrb-search", "Train AFRB MLP blocks with the alpha regularizer");
  c_search->add_option("--dataset", dataset, "blobs, moons or xor")->check(CLI::IsMember({"blobs", "moons", "xor"}));
  c_search->add_option("--n", n_samples, "Samples");
  c_search->add_option("--noise", noise, "Dataset noise");
  c_search->add_option("--blocks", model_cfg.blocks, "AFRB blocks");
  c_search->add_option("--width", model_cfg.width, "Block width (A1)");
  c_search->add_option("--expansion", search_expansion, "Expansion ratio");
  c_search->add_option("--variant", variant, "A1, A2 or A3")->check(CLI::IsMember({"A1", "A2", "A3"}));
  c_search->add_option("--lambda", search_cfg.lambda, "Regularizer weight");
  c_search->add_option("--lr", search_cfg.lr, "SGD learning rate");
  c_search->add_option("--epochs", search_cfg.epochs, "Epochs");
  c_search->add_option("--batch", search_cfg.batch, "Minibatch size");
  c_search->add_option("--band-lo", search_cfg.band.lo, "Collapse band lower bound");
  c_search->add_option("--band-hi", search_cfg.band.hi, "Collapse band upper bound");
  c_search->add_option("--seed", search_cfg.seed, "Seed for data, weights and shuffling");
  c_search->add_option("--summary", summary_path, "Summary JSON path; stdout when omitted");
  add_out(c_search, false);

  // ldi
  LinearDensenetConfig ldi_cfg;
  int ldi_trials = 200;
  double ldi_q = 0.0;
  auto* c_ldi = app.add_subcommand("ldi", "Layerwise dynamical isometry of linear DenseNet-type MLPs");
  c_ldi->add_option("--width", ldi_cfg.width, "Width w");
  c_ldi->add_option("--depth", ldi_cfg.depth, "Layers L");
  c_ldi->add_option("--skip", ldi_cfg.skip, "Skip channels per layer s");
  c_ldi->add_option("--q", ldi_q, "Initialization variance (default 1/k_hat)");
  c_ldi->add_option("--trials", ldi_trials, "Trials");
  c_ldi->add_option("--seed", ldi_cfg.seed, "Seed");
  add_out(c_ldi, false);

  // regions
  int reg_n = 4, reg_n0 = 2, reg_trials = 50, reg_grid = 256;
  double reg_radius = 3.0;
  std::uint64_t reg_seed = 0;
  std::vector<int> reg_depths{2, 3, 4}, reg_widths;
  bool reg_linear = false;
  auto* c_regions = app.add_subcommand("regions", "Count activation patterns of small ReLU networks");
  c_regions->add_option("--n", reg_n, "Hidden width");
  c_regions->add_option("--n0", reg_n0, "Input dimension (must be 2)");
  c_regions->add_option("--depths", reg_depths, "Hidden layer counts to sweep")->delimiter(',');
  c_regions->add_option("--widths", reg_widths, "Count one network with these layer widths, e.g. 2,4,4,1")
      ->delimiter(',');
  c_regions->add_flag("--linear", reg_linear, "With --widths: drop the ReLUs");
  c_regions->add_option("--trials", reg_trials, "Networks per depth");
  c_regions->add_option("--grid", reg_grid, "Lattice resolution");
  c_regions->add_option("--radius", reg_radius, "Box radius");
  c_regions->add_option("--seed", reg_seed, "Seed");
  add_out(c_regions, false);

  // report
  std::string report_scan, frontier_path;
  std::vector<std::string> budget_texts;
  double report_tol = 0.025;
  std::string report_axis = "macs";
  auto* c_report = app.add_subcommand("report", "Per-budget selection report from a scan CSV");
  c_report->add_option("--scan", report_scan, "Scan CSV produced by `scale`")->required();
  c_report->add_option("--budget", budget_texts, "MACS:PARAMS (repeatable)");
  c_report->add_option("--tol", report_tol, "Relative budget tolerance");
  c_report->add_option("--axis", report_axis, "Frontier cost axis")->check(CLI::IsMember({"macs", "params"}));
  c_report->add_option("--frontier", frontier_path, "Frontier plot-data CSV path");
  add_out(c_report, false);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (c_validate->parsed()) {
      const ArchDescriptor a = validate_flags.load();
      validate(a);
      if (!out_path.empty()) write_file_atomic(out_path, serialize_arch(a));
      out << "ok: " << a.name << " (" << a.blocks.size() << " blocks, family " << family_name(a.family) << ")\n";
    } else if (c_cost->parsed()) {
      const ArchDescriptor a = cost_flags.load();
      const CostReport r = count_arch(a, cost_flags.res(a));
      if (format == "json") {
        emit(out_path, cost_report_json(r), out);
      } else if (format == "csv") {
        emit(out_path, cost_report_csv(r), out);
      } else {
        emit(out_path, cost_summary(r) + "\n", out);
      }
      if (!out_path.empty()) out << cost_summary(r) << "\n";
    } else if (c_mass->parsed()) {
      const ArchDescriptor a = mass_flags.load();
      const MassReport r = nn_mass(a);
      if (format == "csv") throw UsageError("--format: mass supports text or json");
      emit(out_path, format == "json" ? mass_report_json(r) : mass_summary(r) + "\n", out);
      if (!out_path.empty()) out << mass_summary(r) << "\n";
    } else if (c_scale->parsed()) {
      const ArchDescriptor a = scale_arch_flags.load();
      std::optional<Budget> budget;
      if (budget_macs != 0.0 || budget_params != 0.0) {
        Budget b;
        if (budget_macs != 0.0) b.target_macs = to_count(budget_macs, "--budget-macs");
        if (budget_params != 0.0) b.target_params = to_count(budget_params, "--budget-params");
        b.tolerance = tol;
        b.validate();
        budget = b;
      }
      const auto cands = enumerate_candidates(a, scale_grid.grid, scale_arch_flags.res(a), scale_grid.threads);
      if (format == "text") throw UsageError("--format: scale supports csv or json");
      emit(out_path, format == "json" ? candidates_json(cands, budget) : candidates_csv(cands, budget), out);
      if (!out_path.empty()) {
        out << cands.size() << " candidates";
        if (budget) {
          const auto f = filter_budget(cands, *budget);
          out << ", " << f.size() << " in budget";
          if (!f.empty()) {
            const auto s = select_max_mass(f);
            out << "; selected w_m=" << fmt("%.6g", s.w_m) << " d_m=" << fmt("%.6g", s.d_m) << " widths=["
                << join_ints(s.widths) << "] depths=[" << join_ints(s.depths) << "] mass=" << fmt("%.12g", s.mass);
          }
        }
        out << "\n";
      }
    } else if (c_pareto->parsed()) {
      std::vector<ScaleCandidate> cands;
      if (!pareto_scan.empty()) {
        if (!pareto_arch_flags.preset.empty() || !pareto_arch_flags.arch_file.empty()) {
          throw UsageError("--scan excludes --preset/--arch");
        }
        cands = parse_candidates_csv(read_file(pareto_scan));
      } else {
        const ArchDescriptor a = pareto_arch_flags.load();
        cands = enumerate_candidates(a, pareto_grid.grid, pareto_arch_flags.res(a), pareto_grid.threads);
      }
      const CostAxis ax = parse_axis(axis);
      emit(out_path, candidates_csv(pareto_frontier(cands, ax), std::nullopt), out);
    } else if (c_collapse->parsed()) {
      trial.expansion = parse_rational(expansion_text);
      trial.width = trial.height;
      if (trials < 1) throw UsageError("--trials: must be >= 1");
      std::vector<CollapseResult> results;
      static const int cins[] = {2, 4, 8}, ks[] = {3, 5, 7}, strides[] = {1, 2};
      static const int es[] = {2, 4, 6};
      for (int i = 0; i < trials; ++i) {
        CollapseTrial t = trial;
        t.seed = trial.seed + static_cast<std::uint64_t>(i);
        if (sweep) {
          t.in_channels = cins[i % 3];
          t.expansion = Rational(es[(i / 3) % 3]);
          t.kernel = ks[(i / 9) % 3];
          t.stride = strides[(i / 27) % 2];
        }
        results.push_back(run_collapse_trial(t, collapse_tol));
      }
      std::string json = collapse_report_json(results);
      if (results.size() == 1) {
        auto j = nlohmann::ordered_json::parse(json);
        json = j.at(0).dump(2) + "\n";
      }
      emit(out_path, json, out);
      const bool all = std::all_of(results.begin(), results.end(), [](const auto& r) { return r.pass; });
      if (!all) {
        err << "collapse-verify: equivalence check failed\n";
        return 1;
      }
    } else if (c_restructure->parsed()) {
      const ArchDescriptor a = restructure_flags.load();
      ArchDescriptor r;
      if (!alphas.empty()) {
        r = apply_afrb_decisions(a, alphas, band);
      } else {
        r = restructure_arch(a, parse_rational(keep_text), parse_branch_activation(branch));
      }
      emit(out_path, serialize_arch(r), out);
      const CostReport cost = count_arch(r, restructure_flags.res(r));
      (out_path.empty() ? err : out) << r.name << ": " << cost_summary(cost) << " X=" << nonlinear_units(r) << "\n";
    } else if (c_search->parsed()) {
      model_cfg.variant = parse_variant(variant);
      model_cfg.expansion = parse_rational(search_expansion);
      model_cfg.seed = search_cfg.seed;
      if (model_cfg.variant != AfrbVariant::A1) model_cfg.width = model_cfg.in_dim;
      const Dataset data = make_dataset(parse_dataset_kind(dataset), n_samples, noise, search_cfg.seed);
      AfrbMlpModel model = make_afrb_model(model_cfg);
      const SearchTrace trace = train_search(model, data, search_cfg);
      emit(out_path, trace_csv(trace), out);
      const std::string summary = search_summary_json(model, trace, search_cfg.band);
      if (summary_path.empty()) {
        out << summary;
      } else {
        write_file_atomic(summary_path, summary);
      }
    } else if (c_ldi->parsed()) {
      if (ldi_trials < 50) throw UsageError("--trials: must be >= 50");
      LinearDensenetConfig probe = ldi_cfg;
      probe.q = 1.0;
      const double k_hat = build_linear_densenet(probe).k_hat;
      ldi_cfg.q = ldi_q > 0.0 ? ldi_q : 1.0 / k_hat;
      const LdiReport r = ldi_report(ldi_cfg, ldi_trials);
      emit(out_path, ldi_report_json(ldi_cfg, r), out);
    } else if (c_regions->parsed()) {
      if (!reg_widths.empty()) {
        const ReluMlp mlp = random_relu_mlp(reg_widths, reg_seed, !reg_linear);
        const RegionCount c = count_linear_regions(mlp, reg_radius, reg_grid);
        nlohmann::ordered_json j;
        j["widths"] = reg_widths;
        j["distinct_patterns"] = c.distinct_patterns;
        j["grid_resolution"] = c.grid_resolution;
        j["X"] = c.relu_units;
        j["log2_upper"] = c.log2_upper;
        emit(out_path, j.dump(2) + "\n", out);
      } else {
        std::vector<MontufarReport> reports;
        for (int l : reg_depths) {
          reports.push_back(montufar_consistency(reg_n, reg_n0, l, reg_trials, reg_seed, reg_grid, reg_radius));
        }
        emit(out_path, montufar_report_json(reports), out);
      }
    } else if (c_report->parsed()) {
      std::vector<BudgetSpec> budgets;
      if (budget_texts.empty()) {
        budgets = {{3'300'000'000, 21'000'000}, {4'500'000'000, 28'000'000}, {8'500'000'000, 50'000'000}};
      }
      for (const auto& t : budget_texts) {
        const BudgetSpec b = parse_budget(t);
        if (std::find(budgets.begin(), budgets.end(), b) != budgets.end()) {
          err << "warning: duplicate budget " << t << " ignored\n";
          continue;
        }
        budgets.push_back(b);
      }
      const auto cands = parse_candidates_csv(read_file(report_scan));
      const std::string text = report_text(cands, budgets, report_tol);
      const CostAxis ax = parse_axis(report_axis);
      const std::string frontier = frontier_csv(pareto_frontier(cands, ax), ax);
      std::string fpath = frontier_path;
      if (fpath.empty() && !out_path.empty()) fpath = derived_path(out_path, "_frontier.csv");
      if (fpath.empty()) {
        out << text << "\nfrontier (" << report_axis << ")\n" << frontier;
      } else {
        emit(out_path, text, out);
        write_file_atomic(fpath, frontier);
      }
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace nnmass

#include "reluforge/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>

#include "reluforge/circuit.hpp"
#include "reluforge/constructors.hpp"
#include "reluforge/error.hpp"
#include "reluforge/experiment.hpp"
#include "reluforge/io.hpp"
#include "reluforge/legendre.hpp"
#include "reluforge/pwl.hpp"
#include "reluforge/sampling.hpp"

namespace reluforge::cli {

namespace {

using io::format_double;

std::vector<double> parse_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  if (text.empty()) return out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      out.push_back(io::parse_double(item));
    } catch (const ValidationError&) {
      throw ValidationError(flag + ": cannot parse '" + item + "' as a number");
    }
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& text, const std::string& flag) {
  std::vector<int> out;
  for (double v : parse_list(text, flag)) {
    if (v != std::floor(v) || v < 1) throw ValidationError(flag + ": widths must be positive integers");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

/// x2, exp, sin3, or poly:c0,c1,... (coefficient k multiplies x^k).
ScalarFunction named_function(const std::string& name) {
  if (name == "x2") return [](double x) { return x * x; };
  if (name == "exp") return [](double x) { return std::exp(x); };
  if (name == "sin3") return [](double x) { return std::sin(3.0 * x); };
  if (name.rfind("poly:", 0) == 0) {
    Polynomial p{parse_list(name.substr(5), "--f")};
    if (p.coefficients.empty()) throw ValidationError("--f: polynomial needs coefficients");
    return [p](double x) { return p(x); };
  }
  throw ValidationError("--f: unknown function '" + name + "' (expected x2, exp, sin3 or poly:c0,c1,...)");
}

void emit(std::ostream& out, const std::string& path, const std::string& text) {
  if (path.empty())
    out << text;
  else
    io::write_file_atomic(path, text);
}

void print_shape(std::ostream& out, const Network& net) {
  out << "width=" << net.width() << "\ndepth=" << net.depth() << "\nparams=" << net.parameter_count() << "\n";
}

void positive(double v, const std::string& flag) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(flag + " must be positive");
}

struct MultiplierArgs {
  double m = 1.0, eps = 0.0;
  int bits = 0;
  double delta = 0.0;
  std::string out;
};

MultiplierDesign design_from(const MultiplierArgs& a) {
  positive(a.m, "--M");
  if (a.bits > 0) {
    const double delta = a.delta > 0.0 ? a.delta : 1.0 / (8.0 * std::ldexp(1.0, a.bits));
    return multiplier_design_from_bits(a.m, a.bits, delta);
  }
  positive(a.eps, "--eps");
  MultiplierOptions opts;
  if (a.delta > 0.0) opts.delta = a.delta;
  return multiplier_design(a.m, a.eps, opts);
}

void print_design(std::ostream& out, const MultiplierDesign& d) {
  out << "bits=" << d.bits << "\nerror_bound=" << format_double(d.error_bound(), 6)
      << "\ndelta=" << format_double(d.delta, 6) << "\n";
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Explicit ReLU constructions, linear-region analysis and approximation bounds", "reluforge"};
  app.require_subcommand(1);
  std::function<void()> action;

  // build
  auto* build = app.add_subcommand("build", "Construct a network and write it to a file");
  build->require_subcommand(1);

  MultiplierArgs mul_args;
  auto* b_mul = build->add_subcommand("multiplier", "Product network for (x, y) in [-M, M]^2");
  b_mul->add_option("--M", mul_args.m, "Input bound M")->required();
  b_mul->add_option("--eps", mul_args.eps, "Target sup error");
  b_mul->add_option("--bits", mul_args.bits, "Explicit digit count (overrides --eps)");
  b_mul->add_option("--delta", mul_args.delta, "Threshold band half-width");
  b_mul->add_option("--out", mul_args.out, "Output network file")->required();
  b_mul->callback([&] {
    action = [&] {
      if (mul_args.bits == 0 && mul_args.eps == 0.0) throw ValidationError("--eps or --bits is required");
      const auto design = design_from(mul_args);
      MultiplierOptions opts;
      if (mul_args.delta > 0.0) opts.delta = mul_args.delta;
      // The eps path also asserts the width and depth formulas.
      const Network net = mul_args.bits > 0 ? multiplier(design) : multiplier(mul_args.m, mul_args.eps, opts);
      save(net, mul_args.out);
      print_shape(out, net);
      print_design(out, design);
    };
  });

  MultiplierArgs sq_args;
  auto* b_sq = build->add_subcommand("square", "x -> x^2 through a multiplier with tied inputs");
  b_sq->add_option("--M", sq_args.m, "Input bound M")->required();
  b_sq->add_option("--eps", sq_args.eps, "Target sup error");
  b_sq->add_option("--bits", sq_args.bits, "Explicit digit count (overrides --eps)");
  b_sq->add_option("--delta", sq_args.delta, "Threshold band half-width");
  b_sq->add_option("--out", sq_args.out, "Output network file")->required();
  b_sq->callback([&] {
    action = [&] {
      if (sq_args.bits == 0 && sq_args.eps == 0.0) throw ValidationError("--eps or --bits is required");
      const auto design = design_from(sq_args);
      const Network net = square(design);
      save(net, sq_args.out);
      print_shape(out, net);
      print_design(out, design);
    };
  });

  int ball_d = 0;
  double ball_delta = 0.0, ball_shell = 0.0;
  bool ball_complement = false;
  std::string ball_out;
  auto* b_ball = build->add_subcommand("ball", "Depth-3 indicator of the complement of the unit ball");
  b_ball->add_option("--d", ball_d, "Input dimension")->required();
  b_ball->add_option("--delta", ball_delta, "L2 error budget")->required();
  b_ball->add_option("--shell", ball_shell, "Shell half-width around |x|^2 = 1")->required();
  b_ball->add_flag("--complement", ball_complement, "Emit ~1 inside the ball instead");
  b_ball->add_option("--out", ball_out, "Output network file")->required();
  b_ball->callback([&] {
    action = [&] {
      const Network net = ball_indicator(ball_d, ball_delta, ball_shell, {ball_complement});
      save(net, ball_out);
      print_shape(out, net);
      out << "knots=" << ball_indicator_knots(ball_d, ball_delta) << "\n";
    };
  });

  std::string circ_spec, circ_out;
  double circ_eps = 0.0;
  auto* b_circ = build->add_subcommand("circuit", "Compile an add/mul circuit file");
  b_circ->add_option("--spec", circ_spec, "Circuit file")->required();
  b_circ->add_option("--eps", circ_eps, "Target sup error")->required();
  b_circ->add_option("--out", circ_out, "Output network file")->required();
  b_circ->callback([&] {
    action = [&] {
      positive(circ_eps, "--eps");
      const auto compiled = compile_circuit(load_circuit(circ_spec), circ_eps);
      save(compiled.network(), circ_out);
      const auto& r = compiled.report();
      print_shape(out, compiled.network());
      out << "ops=" << r.op_count << "\nop_delta=" << format_double(r.op_delta, 6)
          << "\npredicted_budget=" << format_double(r.predicted_budget, 6)
          << "\npropagated_bound=" << format_double(r.propagated_bound, 6) << "\n";
    };
  });

  int rad_d = 0;
  double rad_constant = 0.0, rad_slope = 0.0;
  std::string rad_knots, rad_jumps, rad_out;
  auto* b_rad = build->add_subcommand("l1radial", "Exact network for x -> f(|x|_1) with piecewise-linear f");
  b_rad->add_option("--d", rad_d, "Input dimension")->required();
  b_rad->add_option("--constant", rad_constant, "f(0)");
  b_rad->add_option("--slope", rad_slope, "Initial slope of f");
  b_rad->add_option("--knots", rad_knots, "Comma-separated knots");
  b_rad->add_option("--jumps", rad_jumps, "Comma-separated slope changes, one per knot");
  b_rad->add_option("--out", rad_out, "Output network file")->required();
  b_rad->callback([&] {
    action = [&] {
      RadialPWL f{rad_constant, rad_slope, parse_list(rad_knots, "--knots"), parse_list(rad_jumps, "--jumps")};
      const Network net = l1_radial(f, rad_d);
      save(net, rad_out);
      print_shape(out, net);
    };
  });

  int tri_i = 0;
  std::string tri_out;
  auto* b_tri = build->add_subcommand("triangle", "Triangle wave phi^i");
  b_tri->add_option("--i", tri_i, "Number of compositions")->required();
  b_tri->add_option("--out", tri_out, "Output network file")->required();
  b_tri->callback([&] {
    action = [&] {
      const Network net = triangle_wave(tri_i);
      save(net, tri_out);
      print_shape(out, net);
    };
  });

  // eval
  std::string eval_net;
  std::vector<std::string> eval_x;
  auto* eval = app.add_subcommand("eval", "Evaluate a network at points");
  eval->add_option("--net", eval_net, "Network file")->required();
  eval->add_option("--x", eval_x, "Comma-separated input point (repeatable)")->required();
  eval->callback([&] {
    action = [&] {
      const Network net = load(eval_net);
      for (const auto& text : eval_x) {
        const auto x = parse_list(text, "--x");
        if (x.size() != net.input_dim())
          throw ValidationError("--x: expected " + std::to_string(net.input_dim()) + " coordinates");
        const Vector y = net.evaluate(Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size())));
        for (Eigen::Index i = 0; i < y.size(); ++i) out << (i ? "," : "") << format_double(y[i]);
        out << "\n";
      }
    };
  });

  // inspect
  std::string insp_net, insp_base, insp_dir, insp_out;
  double insp_lo = 0.0, insp_hi = 1.0;
  auto* inspect = app.add_subcommand("inspect", "Size, segment count and breakpoints along a line");
  inspect->add_option("net", insp_net, "Network file")->required();
  inspect->add_option("--lo", insp_lo, "Start of the parameter range");
  inspect->add_option("--hi", insp_hi, "End of the parameter range");
  inspect->add_option("--base", insp_base, "Comma-separated base point (default 0)");
  inspect->add_option("--direction", insp_dir, "Comma-separated direction, normalized (default e1)");
  inspect->add_option("--out", insp_out, "Breakpoint CSV file (default stdout)");
  inspect->callback([&] {
    action = [&] {
      const Network net = load(insp_net);
      const auto d = static_cast<Eigen::Index>(net.input_dim());
      Vector base = Vector::Zero(d), dir = Vector::Zero(d);
      dir[0] = 1.0;
      if (!insp_base.empty()) {
        const auto v = parse_list(insp_base, "--base");
        if (static_cast<Eigen::Index>(v.size()) != d) throw ValidationError("--base has the wrong dimension");
        base = Eigen::Map<const Vector>(v.data(), d);
      }
      if (!insp_dir.empty()) {
        const auto v = parse_list(insp_dir, "--direction");
        if (static_cast<Eigen::Index>(v.size()) != d) throw ValidationError("--direction has the wrong dimension");
        dir = Eigen::Map<const Vector>(v.data(), d);
        if (dir.norm() == 0.0) throw ValidationError("--direction must be nonzero");
        dir.normalize();
      }
      if (!(insp_lo < insp_hi)) throw ValidationError("--lo must be below --hi");
      const auto pwl = restrict_to_line(net, LineRestriction(base, dir, insp_lo, insp_hi));
      const auto bound = region_bound(net.width(), net.depth());
      print_shape(out, net);
      out << "segments=" << segment_count(pwl) << "\nregion_bound=" << bound.value
          << (bound.saturated ? " (saturated)" : "") << "\n";
      io::CsvTable csv({"t_break", "slope_left", "slope_right"});
      for (std::size_t j = 0; j < pwl.breakpoints().size(); ++j)
        csv.add_row({format_double(pwl.breakpoints()[j]), format_double(pwl.segments()[j].slope),
                     format_double(pwl.segments()[j + 1].slope)});
      if (insp_out.empty()) out << "\n";
      emit(out, insp_out, csv.str());
    };
  });

  // bounds
  std::string bnd_f = "x2", bnd_out;
  double bnd_a = 0.0, bnd_len = 1.0;
  int bnd_k = 8;
  auto* bounds = app.add_subcommand("bounds", "Fourier-Legendre coefficients and best linear fit error");
  bounds->add_option("--f", bnd_f, "x2, exp, sin3 or poly:c0,c1,...");
  bounds->add_option("--a", bnd_a, "Interval start");
  bounds->add_option("--len", bnd_len, "Interval length");
  bounds->add_option("--K", bnd_k, "Highest coefficient index");
  bounds->add_option("--out", bnd_out, "CSV file (default stdout)");
  bounds->callback([&] {
    action = [&] {
      positive(bnd_len, "--len");
      if (bnd_k < 1 || bnd_k > ShiftedLegendre::kMaxDegree) throw ValidationError("--K must lie in [1, 30]");
      const auto report = legendre_report(named_function(bnd_f), bnd_a, bnd_len, bnd_k);
      io::CsvTable csv({"i", "a_i"});
      for (std::size_t i = 0; i < report.coefficients.size(); ++i)
        csv.add_row({std::to_string(i), format_double(report.coefficients[i], 6)});
      csv.add_row({"linear_fit_error", format_double(report.linear_fit_error, 6)});
      csv.add_row({"tail_estimate", format_double(report.tail_estimate, 6)});
      emit(out, bnd_out, csv.str());
    };
  });

  // oracle
  std::string orc_f = "x2", orc_out;
  int orc_n = 1, orc_grid = 0;
  double orc_lo = 0.0, orc_hi = 1.0;
  bool orc_cont = false;
  auto* oracle = app.add_subcommand("oracle", "Best n-piece linear fit over a uniform knot grid");
  oracle->add_option("--f", orc_f, "x2, exp, sin3 or poly:c0,c1,...");
  oracle->add_option("--n", orc_n, "Number of pieces");
  oracle->add_option("--grid", orc_grid, "Grid cells (default 400 n)");
  oracle->add_option("--lo", orc_lo, "Domain start");
  oracle->add_option("--hi", orc_hi, "Domain end");
  oracle->add_flag("--continuous", orc_cont, "Refit the partition with a continuous function");
  oracle->add_option("--out", orc_out, "Piece CSV file (default stdout)");
  oracle->callback([&] {
    action = [&] {
      if (orc_n < 1) throw ValidationError("--n must be at least 1");
      const int grid = orc_grid > 0 ? orc_grid : 400 * orc_n;
      const auto r = optimal_pwl_oracle(named_function(orc_f), orc_n, grid, {orc_lo, orc_hi, orc_cont});
      out << "error=" << format_double(r.error, 10) << "\n";
      io::CsvTable csv({"piece", "start", "end", "slope", "intercept"});
      for (std::size_t j = 0; j < r.fit.segment_count(); ++j)
        csv.add_row({std::to_string(j), format_double(r.fit.segment_begin(j)), format_double(r.fit.segment_end(j)),
                     format_double(r.fit.segments()[j].slope), format_double(r.fit.segments()[j].intercept)});
      if (orc_out.empty()) out << "\n";
      emit(out, orc_out, csv.str());
    };
  });

  // slab
  int slab_d = 100;
  double slab_eps = 0.01;
  std::size_t slab_samples = 100000;
  std::uint64_t slab_seed = 1;
  std::string slab_w;
  auto* slab = app.add_subcommand("slab", "Monte-Carlo slab probability under the L1 sphere sampler");
  slab->add_option("--d", slab_d, "Dimension");
  slab->add_option("--eps", slab_eps, "Slab width");
  slab->add_option("--samples", slab_samples, "Number of draws");
  slab->add_option("--seed", slab_seed, "Random seed");
  slab->add_option("--w", slab_w, "Comma-separated w (default d e1)");
  slab->callback([&] {
    action = [&] {
      if (slab_d < 2) throw ValidationError("--d must be at least 2");
      Vector w = Vector::Zero(slab_d);
      w[0] = slab_d;
      if (!slab_w.empty()) {
        const auto v = parse_list(slab_w, "--w");
        if (static_cast<int>(v.size()) != slab_d) throw ValidationError("--w must have d entries");
        w = Eigen::Map<const Vector>(v.data(), slab_d);
      }
      const auto full = slab_probability(w, slab_eps, slab_d, slab_samples, slab_seed);
      const auto half = slab_probability(w, slab_eps / 2.0, slab_d, slab_samples, slab_seed);
      out << "estimate=" << format_double(full.probability, 6) << "\nci_half_width=" << format_double(full.half_width, 6)
          << "\nestimate_half_eps=" << format_double(half.probability, 6)
          << "\nci_half_width_half_eps=" << format_double(half.half_width, 6) << "\nratio="
          << (half.probability > 0.0 ? format_double(full.probability / half.probability, 6) : "nan") << "\n";
    };
  });

  // experiment
  SweepConfig sweep;
  int exp_seeds = 5;
  std::uint64_t exp_seed = 1;
  std::size_t exp_max_batches = 0;
  std::string exp_dir, exp_three = "100,20", exp_two = "100,200,400,800";
  auto* experiment = app.add_subcommand("experiment", "Depth-vs-width training sweep on the unit-ball indicator");
  experiment->add_option("--d", sweep.d, "Input dimension");
  experiment->add_option("--scale", sweep.scale, "Shrinks sample counts and widths, in (0, 1]");
  experiment->add_option("--seeds", exp_seeds, "Number of seeds");
  experiment->add_option("--seed", exp_seed, "First seed");
  experiment->add_option("--max-batches", exp_max_batches, "Batch cap per run (default: until the lr floor)");
  experiment->add_option("--three-layer", exp_three, "3-layer hidden widths at scale 1");
  experiment->add_option("--two-layer", exp_two, "2-layer hidden widths at scale 1");
  experiment->add_option("--out-dir", exp_dir, "Directory for the CSV files")->required();
  experiment->callback([&] {
    action = [&] {
      if (exp_seeds < 0) throw ValidationError("--seeds must be non-negative");
      sweep.seeds.clear();
      for (int s = 0; s < exp_seeds; ++s) sweep.seeds.push_back(exp_seed + static_cast<std::uint64_t>(s));
      sweep.three_layer = parse_int_list(exp_three, "--three-layer");
      sweep.two_layer = parse_int_list(exp_two, "--two-layer");
      if (exp_max_batches > 0) sweep.max_batches = exp_max_batches;
      const auto result = depth_vs_width_sweep(sweep);
      std::filesystem::create_directories(exp_dir);
      io::CsvTable summary({"arch", "seed", "final_valid_rmse", "params"});
      for (const auto& cell : result.cells) {
        io::CsvTable curve({"batch", "train_rmse", "valid_rmse"});
        for (const auto& p : cell.run.curve)
          curve.add_row({std::to_string(p.batch), format_double(p.train_rmse, 8), format_double(p.valid_rmse, 8)});
        const auto file = std::filesystem::path(exp_dir) / (cell.arch + "_seed" + std::to_string(cell.seed) + ".csv");
        io::write_file_atomic(file, curve.str());
        summary.add_row({cell.arch, std::to_string(cell.seed), format_double(cell.run.final_valid_rmse(), 8),
                         std::to_string(cell.run.params)});
      }
      io::write_file_atomic(std::filesystem::path(exp_dir) / "summary.csv", summary.str());
      const auto wins = result.deep_wins();
      const auto dim = result.diminishing_returns();
      out << "runs=" << result.cells.size() << "\ndeep_wins=" << std::count(wins.begin(), wins.end(), true) << "/"
          << wins.size() << "\ndiminishing_returns=" << std::count(dim.begin(), dim.end(), true) << "/" << dim.size()
          << "\n";
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (action) action();
    return 0;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const CLI::Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"reluforge"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace reluforge::cli

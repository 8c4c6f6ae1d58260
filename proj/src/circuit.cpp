#include "reluforge/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "reluforge/error.hpp"
#include "reluforge/io.hpp"

namespace reluforge {

double Interval::magnitude() const { return std::max(std::abs(lo), std::abs(hi)); }

namespace {

using Kind = CircuitNode::Kind;

bool is_op(const CircuitNode& n) { return n.kind == Kind::add || n.kind == Kind::mul; }

std::string label(const CircuitNode& n, std::size_t idx) {
  return n.name.empty() ? "node #" + std::to_string(idx) : n.name;
}

}  // namespace

Circuit::Circuit(std::size_t input_dim, std::vector<CircuitNode> nodes, std::size_t output, double bound)
    : input_dim_(input_dim), nodes_(std::move(nodes)), output_(output), bound_(bound) {
  if (nodes_.empty()) throw ValidationError("circuit has no nodes");
  if (output_ >= nodes_.size()) throw ValidationError("circuit output refers to a missing node");
  if (!(bound_ > 0.0) || !std::isfinite(bound_)) throw ValidationError("circuit bound M must be positive");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (n.kind == Kind::input && n.input_index >= input_dim_)
      throw ValidationError(label(n, i) + ": input index out of range");
    if (is_op(n) && (n.lhs >= nodes_.size() || n.rhs >= nodes_.size()))
      throw ValidationError(label(n, i) + ": operand refers to a missing node");
  }

  // Depth-first topological order with cycle detection.
  enum class Mark { none, active, done };
  std::vector<Mark> mark(nodes_.size(), Mark::none);
  std::vector<std::pair<std::size_t, int>> stack;
  for (std::size_t root = 0; root < nodes_.size(); ++root) {
    if (mark[root] != Mark::none) continue;
    stack.push_back({root, 0});
    mark[root] = Mark::active;
    while (!stack.empty()) {
      auto& [idx, child] = stack.back();
      const auto& n = nodes_[idx];
      if (is_op(n) && child < 2) {
        const std::size_t next = child == 0 ? n.lhs : n.rhs;
        ++child;
        if (mark[next] == Mark::active) throw ValidationError("circuit has a cycle through " + label(nodes_[next], next));
        if (mark[next] == Mark::none) {
          mark[next] = Mark::active;
          stack.push_back({next, 0});
        }
        continue;
      }
      mark[idx] = Mark::done;
      order_.push_back(idx);
      stack.pop_back();
    }
  }

  ranges_.assign(nodes_.size(), Interval{0.0, 0.0});
  const double tolerance = bound_ * (1.0 + 1e-12);
  for (std::size_t idx : order_) {
    const auto& n = nodes_[idx];
    Interval r{0.0, 0.0};
    switch (n.kind) {
      case Kind::input:
        r = {0.0, 1.0};
        break;
      case Kind::constant:
        r = {n.value, n.value};
        break;
      case Kind::add: {
        const Interval a = ranges_[n.lhs], b = ranges_[n.rhs];
        const double a1 = n.alpha * a.lo, a2 = n.alpha * a.hi, b1 = n.beta * b.lo, b2 = n.beta * b.hi;
        r = {std::min(a1, a2) + std::min(b1, b2), std::max(a1, a2) + std::max(b1, b2)};
        break;
      }
      case Kind::mul: {
        const Interval a = ranges_[n.lhs], b = ranges_[n.rhs];
        const double p[] = {a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
        r = {*std::min_element(std::begin(p), std::end(p)), *std::max_element(std::begin(p), std::end(p))};
        break;
      }
    }
    if (r.magnitude() > tolerance)
      throw ValidationError(label(n, idx) + " can reach " + io::format_double(r.magnitude()) +
                            ", outside the declared bound M=" + io::format_double(bound_));
    ranges_[idx] = r;
  }
}

std::size_t Circuit::op_count() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), is_op));
}

std::vector<double> Circuit::evaluate_all(std::span<const double> x) const {
  if (x.size() != input_dim_) throw ValidationError("circuit input has the wrong dimension");
  std::vector<double> v(nodes_.size(), 0.0);
  for (std::size_t idx : order_) {
    const auto& n = nodes_[idx];
    switch (n.kind) {
      case Kind::input: v[idx] = x[n.input_index]; break;
      case Kind::constant: v[idx] = n.value; break;
      case Kind::add: v[idx] = n.alpha * v[n.lhs] + n.beta * v[n.rhs]; break;
      case Kind::mul: v[idx] = v[n.lhs] * v[n.rhs]; break;
    }
  }
  return v;
}

double Circuit::evaluate(std::span<const double> x) const { return evaluate_all(x)[output_]; }

Circuit parse_circuit(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  std::map<std::string, std::size_t> ids;
  struct Pending {
    std::string lhs, rhs;
    std::size_t line;
  };
  std::vector<CircuitNode> nodes;
  std::vector<Pending> refs;
  double bound = 0.0;
  bool have_bound = false;
  std::string output_name;
  std::size_t output_line = 0;
  std::size_t input_dim = 0;

  auto number = [&](const std::string& tok) {
    try {
      return io::parse_double(tok);
    } catch (const ValidationError& e) {
      throw ParseError(lineno, e.what());
    }
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (!output_name.empty()) throw ParseError(lineno, "nothing may follow the output line");

    if (tok[0] == "bound") {
      if (tok.size() != 2 || tok[1].rfind("M=", 0) != 0) throw ParseError(lineno, "expected 'bound M=<v>'");
      if (have_bound) throw ParseError(lineno, "bound declared twice");
      bound = number(tok[1].substr(2));
      have_bound = true;
      continue;
    }
    if (!have_bound) throw ParseError(lineno, "circuit must start with 'bound M=<v>'");
    if (tok[0] == "output") {
      if (tok.size() != 2) throw ParseError(lineno, "expected 'output n<id>'");
      output_name = tok[1];
      output_line = lineno;
      continue;
    }
    if (tok.size() < 3 || tok[1] != "=" || tok[0].size() < 2 || tok[0][0] != 'n')
      throw ParseError(lineno, "expected 'n<id> = <op> ...'");
    if (ids.count(tok[0])) throw ParseError(lineno, tok[0] + " defined twice");

    CircuitNode node;
    node.name = tok[0];
    Pending pending{"", "", lineno};
    const std::string& op = tok[2];
    if (op == "input" && tok.size() == 4) {
      node.kind = Kind::input;
      long long idx = 0;
      try {
        idx = io::parse_integer(tok[3]);
      } catch (const ValidationError& e) {
        throw ParseError(lineno, e.what());
      }
      if (idx < 0) throw ParseError(lineno, "input index must be non-negative");
      node.input_index = static_cast<std::size_t>(idx);
      input_dim = std::max(input_dim, node.input_index + 1);
    } else if (op == "const" && tok.size() == 4) {
      node.kind = Kind::constant;
      node.value = number(tok[3]);
    } else if (op == "add" && tok.size() == 7) {
      node.kind = Kind::add;
      node.alpha = number(tok[3]);
      pending.lhs = tok[4];
      node.beta = number(tok[5]);
      pending.rhs = tok[6];
    } else if (op == "mul" && tok.size() == 5) {
      node.kind = Kind::mul;
      pending.lhs = tok[3];
      pending.rhs = tok[4];
    } else {
      throw ParseError(lineno, "unknown or malformed operation '" + op + "'");
    }
    ids[tok[0]] = nodes.size();
    nodes.push_back(std::move(node));
    refs.push_back(std::move(pending));
  }
  if (output_name.empty()) throw ParseError(lineno + 1, "missing 'output n<id>' line");

  auto resolve = [&](const std::string& name, std::size_t at) {
    auto it = ids.find(name);
    if (it == ids.end()) throw ParseError(at, "unknown node " + name);
    return it->second;
  };
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!is_op(nodes[i])) continue;
    nodes[i].lhs = resolve(refs[i].lhs, refs[i].line);
    nodes[i].rhs = resolve(refs[i].rhs, refs[i].line);
  }
  const std::size_t output = resolve(output_name, output_line);
  return Circuit(std::max<std::size_t>(input_dim, 1), std::move(nodes), output, bound);
}

Circuit load_circuit(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  return parse_circuit(in);
}

CompiledCircuit::CompiledCircuit(Circuit circuit, Network network, CompileReport report)
    : circuit_(std::move(circuit)), network_(std::move(network)), report_(std::move(report)) {}

bool CompiledCircuit::in_bad_set(std::span<const double> x) const {
  if (x.size() != circuit_.input_dim()) throw ValidationError("circuit input has the wrong dimension");
  const auto& nodes = circuit_.nodes();
  std::vector<double> v(nodes.size(), 0.0);
  std::size_t mul_seen = 0;
  for (std::size_t idx : circuit_.order()) {
    const auto& n = nodes[idx];
    switch (n.kind) {
      case Kind::input: v[idx] = x[n.input_index]; break;
      case Kind::constant: v[idx] = n.value; break;
      case Kind::add: v[idx] = n.alpha * v[n.lhs] + n.beta * v[n.rhs]; break;
      case Kind::mul: {
        if (designs_[idx].in_bad_set(v[n.lhs])) return true;
        Vector in(2);
        in << v[n.lhs], v[n.rhs];
        v[idx] = multipliers_[mul_seen++].evaluate(in)[0];
        break;
      }
    }
  }
  return false;
}

CompiledCircuit compile_circuit(const Circuit& circuit, double eps) {
  if (!(eps > 0.0)) throw ValidationError("compile_circuit needs eps > 0");
  const auto& nodes = circuit.nodes();
  const double m = circuit.bound();
  const std::size_t t = circuit.op_count();

  CompileReport report;
  report.op_count = t;
  report.eps = eps;
  report.op_delta = t == 0 ? eps : std::pow(3.0 * m, 1.0 - static_cast<double>(t)) * eps;
  report.predicted_budget = t == 0 ? 0.0 : std::pow(3.0 * m, static_cast<double>(t) - 1.0) * report.op_delta;
  if (t > 0 && report.op_delta < std::ldexp(m, -52))
    throw ValidationError("per-operation budget (3M)^(1-t) eps underflows double precision");

  const std::size_t out = circuit.output();
  if (nodes[out].kind == Kind::constant) throw ValidationError("a constant circuit output cannot be expressed without bias");

  // Error bounds per node and the multiplier built for each mul node.
  std::vector<double> err(nodes.size(), 0.0);
  std::vector<MultiplierDesign> designs(nodes.size());
  std::vector<Network> multipliers;
  std::vector<Network> op_nets(nodes.size(), identity_network(1));
  for (std::size_t idx : circuit.order()) {
    const auto& n = nodes[idx];
    if (n.kind == Kind::add) {
      err[idx] = std::abs(n.alpha) * err[n.lhs] + std::abs(n.beta) * err[n.rhs];
      op_nets[idx] = affine_adder(n.alpha, n.beta);
    } else if (n.kind == Kind::mul) {
      const double ea = err[n.lhs], eb = err[n.rhs];
      const double port_bound = m + std::max(ea, eb);
      double delta = report.op_delta;
      if (delta >= port_bound) delta = 0.5 * port_bound;
      designs[idx] = multiplier_design(port_bound, delta);
      op_nets[idx] = multiplier(designs[idx]);
      multipliers.push_back(op_nets[idx]);
      const double ma = circuit.ranges()[n.lhs].magnitude(), mb = circuit.ranges()[n.rhs].magnitude();
      err[idx] = ma * eb + mb * ea + ea * eb + delta;
    }
  }
  report.node_error_bounds = err;
  report.propagated_bound = err[out];

  // Values are keyed by node index for operations, and by
  // nodes.size() + i for network input i.
  auto key_of = [&](std::size_t idx) {
    return nodes[idx].kind == Kind::input ? nodes.size() + nodes[idx].input_index : idx;
  };
  std::vector<std::size_t> ops;
  for (std::size_t idx : circuit.order())
    if (is_op(nodes[idx])) ops.push_back(idx);

  // Last op position that reads each value.
  std::map<std::size_t, std::size_t> last_use;
  for (std::size_t j = 0; j < ops.size(); ++j) {
    const auto& n = nodes[ops[j]];
    for (std::size_t operand : {n.lhs, n.rhs})
      if (nodes[operand].kind != Kind::constant) last_use[key_of(operand)] = j;
  }
  const std::size_t out_key = key_of(out);

  std::vector<std::size_t> live;
  for (std::size_t i = 0; i < circuit.input_dim(); ++i) live.push_back(nodes.size() + i);
  std::optional<Network> total;

  for (std::size_t j = 0; j < ops.size(); ++j) {
    const std::size_t idx = ops[j];
    const auto& n = nodes[idx];
    const auto width = static_cast<Eigen::Index>(live.size());
    Matrix select = Matrix::Zero(2, width);
    Vector constant = Vector::Zero(2);
    for (int port = 0; port < 2; ++port) {
      const std::size_t operand = port == 0 ? n.lhs : n.rhs;
      if (nodes[operand].kind == Kind::constant) {
        constant[port] = nodes[operand].value;
        continue;
      }
      const auto pos = std::find(live.begin(), live.end(), key_of(operand)) - live.begin();
      select(port, pos) = 1.0;
    }

    std::vector<std::size_t> next;
    std::vector<ParallelPart> parts;
    std::vector<std::size_t> everything(live.size());
    for (std::size_t p = 0; p < live.size(); ++p) everything[p] = p;
    for (std::size_t p = 0; p < live.size(); ++p) {
      const auto it = last_use.find(live[p]);
      const bool needed = (it != last_use.end() && it->second > j) || live[p] == out_key;
      if (!needed) continue;
      next.push_back(live[p]);
      parts.push_back({identity_network(1), {p}});
    }
    next.push_back(idx);
    parts.push_back({affine_pre(op_nets[idx], select, constant), everything});
    Network stage = parallel(parts, live.size());
    total = total ? stack(*total, stage) : stage;
    live = std::move(next);
  }

  // Project onto the output value (a no-op when it is the only live value).
  const auto pos = std::find(live.begin(), live.end(), out_key) - live.begin();
  if (static_cast<std::size_t>(pos) == live.size()) throw ComputationError("circuit output was not kept live");
  if (live.size() != 1 || !total) {
    Matrix pick = Matrix::Zero(1, static_cast<Eigen::Index>(live.size()));
    pick(0, pos) = 1.0;
    Network select(live.size(), {Layer{std::move(pick), Vector::Zero(1), Activation::identity}});
    total = total ? stack(*total, select) : select;
  }
  report.width = total->width();
  report.depth = total->depth();

  CompiledCircuit compiled(circuit, std::move(*total), std::move(report));
  compiled.designs_ = std::move(designs);
  compiled.multipliers_ = std::move(multipliers);
  return compiled;
}

}  // namespace reluforge

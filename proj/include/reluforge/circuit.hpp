#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "reluforge/constructors.hpp"
#include "reluforge/network.hpp"

namespace reluforge {

struct CircuitNode {
  enum class Kind { input, constant, add, mul };
  Kind kind = Kind::input;
  std::size_t input_index = 0;  // input
  double value = 0.0;           // constant
  double alpha = 1.0;           // add: alpha * lhs + beta * rhs
  double beta = 1.0;
  std::size_t lhs = 0;  // add, mul: node indices
  std::size_t rhs = 0;
  std::string name;  // label from the spec file, for messages
};

struct Interval {
  double lo;
  double hi;
  double magnitude() const;
};

/// DAG of weighted additions and multiplications over inputs in [0, 1]^d.
/// Every intermediate value must stay inside [-M, M]; this is checked by
/// interval propagation at construction.
class Circuit {
 public:
  Circuit(std::size_t input_dim, std::vector<CircuitNode> nodes, std::size_t output, double bound);

  std::size_t input_dim() const { return input_dim_; }
  const std::vector<CircuitNode>& nodes() const { return nodes_; }
  std::size_t output() const { return output_; }
  double bound() const { return bound_; }
  /// Number of add and mul nodes.
  std::size_t op_count() const;
  /// Node indices in a dependency-respecting order.
  const std::vector<std::size_t>& order() const { return order_; }
  /// Value range of every node over [0, 1]^d.
  const std::vector<Interval>& ranges() const { return ranges_; }

  double evaluate(std::span<const double> x) const;
  std::vector<double> evaluate_all(std::span<const double> x) const;

 private:
  std::size_t input_dim_;
  std::vector<CircuitNode> nodes_;
  std::size_t output_;
  double bound_;
  std::vector<std::size_t> order_;
  std::vector<Interval> ranges_;
};

/// Spec file: header `bound M=<v>`, one node per line
/// `n<id> = input <i> | const <c> | add <a> n<x> <b> n<y> | mul n<x> n<y>`,
/// last line `output n<id>`. Blank lines and `#` comments are ignored.
Circuit parse_circuit(std::istream& in);
Circuit load_circuit(const std::string& path);

struct CompileReport {
  std::size_t op_count = 0;
  double eps = 0.0;
  /// Per-operation accuracy (3M)^{1-t} eps.
  double op_delta = 0.0;
  /// (3M)^{t-1} op_delta: worst case after t steps of 3M error growth.
  double predicted_budget = 0.0;
  /// Tighter bound from propagating |a||e_b| + |b||e_a| + e_a e_b + delta
  /// through the actual DAG with the interval ranges.
  double propagated_bound = 0.0;
  std::vector<double> node_error_bounds;
  std::size_t width = 0;
  std::size_t depth = 0;
};

/// A circuit lowered to one ReLU network. Keeps the multiplier designs so the
/// bad set (inputs where some multiplier's digit threshold is ambiguous)
/// can be tested.
class CompiledCircuit {
 public:
  const Network& network() const { return network_; }
  const CompileReport& report() const { return report_; }
  const Circuit& circuit() const { return circuit_; }

  /// Replays the compiled arithmetic (exact adds, multiplier networks) node by
  /// node and reports whether any multiplier saw its x operand in its bad set.
  bool in_bad_set(std::span<const double> x) const;

 private:
  friend CompiledCircuit compile_circuit(const Circuit& circuit, double eps);
  CompiledCircuit(Circuit circuit, Network network, CompileReport report);

  Circuit circuit_;
  Network network_;
  CompileReport report_;
  std::vector<MultiplierDesign> designs_;  // per node, meaningful for mul
  std::vector<Network> multipliers_;       // per mul node, in order()
};

/// Each mul becomes a multiplier with accuracy (3M)^{1-t} eps, each add an
/// exact 4-neuron adder; live values are carried between operations.
CompiledCircuit compile_circuit(const Circuit& circuit, double eps);

}  // namespace reluforge

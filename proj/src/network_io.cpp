#include <charconv>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "reluforge/error.hpp"
#include "reluforge/io.hpp"
#include "reluforge/network.hpp"

namespace reluforge {

namespace io {

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) throw ComputationError("cannot format number");
  return std::string(buf, end);
}

std::string format_double(double value, int significant_digits) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, significant_digits);
  if (ec != std::errc{}) throw ComputationError("cannot format number");
  return std::string(buf, end);
}

double parse_double(std::string_view token) {
  double value = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || token.empty())
    throw ValidationError("not a number: '" + std::string(token) + "'");
  return value;
}

long long parse_integer(std::string_view token) {
  long long value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size() || token.empty())
    throw ValidationError("not an integer: '" + std::string(token) + "'");
  return value;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ComputationError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw ComputationError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw ComputationError("cannot move output into place: " + path.string());
  }
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add_row(std::vector<std::string> cells) {
  if (cells.size() != header_.size()) throw ValidationError("csv row width does not match header");
  rows_.push_back(std::move(cells));
}

std::string CsvTable::str() const {
  std::string out;
  auto emit = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  emit(header_);
  for (const auto& row : rows_) emit(row);
  return out;
}

}  // namespace io

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) tokens.push_back(line.substr(i, j - i));
    i = j;
  }
  return tokens;
}

// Parses `key=<integer>`.
long long keyed_int(std::string_view token, std::string_view key, std::size_t line) {
  if (token.size() <= key.size() + 1 || token.substr(0, key.size()) != key || token[key.size()] != '=')
    throw ParseError(line, "expected " + std::string(key) + "=<n>, got '" + std::string(token) + "'");
  try {
    return io::parse_integer(token.substr(key.size() + 1));
  } catch (const ValidationError& e) {
    throw ParseError(line, e.what());
  }
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}
  // Skips blank lines; throws on EOF.
  std::vector<std::string_view> next(const char* expecting) {
    while (std::getline(in_, current_)) {
      ++line_;
      auto tokens = split_ws(current_);
      if (!tokens.empty()) return tokens;
    }
    throw ParseError(line_ + 1, std::string("unexpected end of file, expected ") + expecting);
  }
  std::size_t line() const { return line_; }

 private:
  std::istream& in_;
  std::string current_;
  std::size_t line_ = 0;
};

}  // namespace

void write_network(std::ostream& out, const Network& net) {
  out << "relunet v1 input=" << net.input_dim() << " layers=" << net.depth() << '\n';
  for (std::size_t i = 0; i < net.depth(); ++i) {
    const Layer& layer = net.layers()[i];
    out << "layer " << i + 1 << " out=" << layer.outputs()
        << " act=" << (layer.activation == Activation::relu ? "relu" : "id") << '\n';
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) out << io::format_double(layer.weights(r, c), 17) << ' ';
      out << io::format_double(layer.bias[r], 17) << '\n';
    }
  }
}

Network read_network(std::istream& in) {
  LineReader reader(in);
  auto header = reader.next("header");
  if (header.size() != 4 || header[0] != "relunet" || header[1] != "v1")
    throw ParseError(reader.line(), "expected 'relunet v1 input=<d> layers=<l>'");
  const long long input = keyed_int(header[2], "input", reader.line());
  const long long depth = keyed_int(header[3], "layers", reader.line());
  if (input <= 0 || depth <= 0) throw ParseError(reader.line(), "input and layers must be positive");

  std::vector<Layer> layers;
  long long fan_in = input;
  for (long long li = 1; li <= depth; ++li) {
    auto head = reader.next("layer header");
    if (head.size() != 4 || head[0] != "layer")
      throw ParseError(reader.line(), "expected 'layer <i> out=<n> act=<relu|id>'");
    long long index = 0;
    try {
      index = io::parse_integer(head[1]);
    } catch (const ValidationError& e) {
      throw ParseError(reader.line(), e.what());
    }
    if (index != li) throw ParseError(reader.line(), "layer index out of order");
    const long long outputs = keyed_int(head[2], "out", reader.line());
    if (outputs <= 0) throw ParseError(reader.line(), "layer must have at least one output");
    Activation act;
    if (head[3] == "act=relu")
      act = Activation::relu;
    else if (head[3] == "act=id")
      act = Activation::identity;
    else
      throw ParseError(reader.line(), "unknown activation '" + std::string(head[3]) + "'");

    Matrix w(outputs, fan_in);
    Vector b(outputs);
    for (long long r = 0; r < outputs; ++r) {
      auto row = reader.next("weight row");
      if (static_cast<long long>(row.size()) != fan_in + 1)
        throw ParseError(reader.line(), "expected " + std::to_string(fan_in + 1) + " numbers, got " +
                                            std::to_string(row.size()));
      try {
        for (long long c = 0; c < fan_in; ++c) w(r, c) = io::parse_double(row[static_cast<std::size_t>(c)]);
        b[r] = io::parse_double(row.back());
      } catch (const ValidationError& e) {
        throw ParseError(reader.line(), e.what());
      }
    }
    layers.push_back(Layer{std::move(w), std::move(b), act});
    fan_in = outputs;
  }
  return Network(static_cast<std::size_t>(input), std::move(layers));
}

void save(const Network& net, const std::filesystem::path& path) {
  std::ostringstream out;
  write_network(out, net);
  io::write_file_atomic(path, out.str());
}

Network load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return read_network(in);
}

}  // namespace reluforge

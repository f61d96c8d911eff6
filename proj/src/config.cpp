#include "perihom/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "perihom/error.hpp"

namespace perihom {

namespace {

struct Value {
  enum class Type { number, boolean, string, array } type = Type::number;
  double number = 0.0;
  bool boolean = false;
  std::string text;
  std::vector<Value> items;
};

class ValueParser {
 public:
  ValueParser(const std::string& s, const std::string& key, int line) : s_(s), key_(key), line_(line) {}

  Value parse() {
    Value v = value();
    skip();
    if (pos_ != s_.size()) fail("trailing characters after value");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(what + " in '" + key_ + "'", key_, line_); }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  Value value() {
    skip();
    if (pos_ >= s_.size()) fail("missing value");
    const char c = s_[pos_];
    Value v;
    if (c == '[') {
      v.type = Value::Type::array;
      ++pos_;
      skip();
      if (pos_ < s_.size() && s_[pos_] == ']') {
        ++pos_;
        return v;
      }
      for (;;) {
        v.items.push_back(value());
        skip();
        if (pos_ >= s_.size()) fail("unterminated array");
        if (s_[pos_] == ',') {
          ++pos_;
          skip();
          if (pos_ < s_.size() && s_[pos_] == ']') {  // trailing comma
            ++pos_;
            return v;
          }
          continue;
        }
        if (s_[pos_] == ']') {
          ++pos_;
          return v;
        }
        fail("expected ',' or ']'");
      }
    }
    if (c == '"') {
      v.type = Value::Type::string;
      const std::size_t end = s_.find('"', pos_ + 1);
      if (end == std::string::npos) fail("unterminated string");
      v.text = s_.substr(pos_ + 1, end - pos_ - 1);
      pos_ = end + 1;
      return v;
    }
    if (s_.compare(pos_, 4, "true") == 0 || s_.compare(pos_, 5, "false") == 0) {
      v.type = Value::Type::boolean;
      v.boolean = s_[pos_] == 't';
      pos_ += v.boolean ? 4 : 5;
      return v;
    }
    std::size_t start = pos_;
    if (s_[pos_] == '+') start = ++pos_;
    const char* first = s_.data() + start;
    const auto [ptr, ec] = std::from_chars(first, s_.data() + s_.size(), v.number);
    if (ec != std::errc() || ptr == first) fail("cannot parse value");
    pos_ = ptr - s_.data();
    return v;
  }

  const std::string& s_;
  std::string key_;
  int line_;
  std::size_t pos_ = 0;
};

// Strips a '#' comment that is not inside a string.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

int bracket_balance(const std::string& s) {
  int depth = 0;
  bool quoted = false;
  for (char c : s) {
    if (c == '"') quoted = !quoted;
    if (quoted) continue;
    if (c == '[') ++depth;
    if (c == ']') --depth;
  }
  return depth;
}

struct Context {
  std::string key;
  int line;
  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(what, key, line); }
};

double as_number(const Value& v, const Context& ctx) {
  if (v.type != Value::Type::number) ctx.fail("'" + ctx.key + "' must be a number");
  return v.number;
}

int as_int(const Value& v, const Context& ctx) {
  const double x = as_number(v, ctx);
  if (x != std::floor(x) || std::abs(x) > 2e9) ctx.fail("'" + ctx.key + "' must be an integer");
  return static_cast<int>(x);
}

bool as_bool(const Value& v, const Context& ctx) {
  if (v.type != Value::Type::boolean) ctx.fail("'" + ctx.key + "' must be true or false");
  return v.boolean;
}

std::string as_string(const Value& v, const Context& ctx) {
  if (v.type != Value::Type::string) ctx.fail("'" + ctx.key + "' must be a string");
  return v.text;
}

std::vector<double> as_vector(const Value& v, const Context& ctx) {
  if (v.type != Value::Type::array) ctx.fail("'" + ctx.key + "' must be an array of numbers");
  std::vector<double> out;
  for (const Value& x : v.items) out.push_back(as_number(x, ctx));
  return out;
}

Rows as_rows(const Value& v, const Context& ctx) {
  if (v.type == Value::Type::number) return {{v.number}};
  if (v.type != Value::Type::array) ctx.fail("'" + ctx.key + "' must be a nested array of numbers");
  Rows out;
  for (const Value& r : v.items) out.push_back(as_vector(r, ctx));
  return out;
}

std::vector<Rows> as_matrices(const Value& v, const Context& ctx) {
  if (v.type != Value::Type::array) ctx.fail("'" + ctx.key + "' must be an array of matrices");
  std::vector<Rows> out;
  for (const Value& m : v.items) out.push_back(as_rows(m, ctx));
  return out;
}

void one_of(const std::string& value, std::initializer_list<const char*> allowed, const Context& ctx) {
  std::string list;
  for (const char* a : allowed) {
    if (value == a) return;
    list += (list.empty() ? "" : ", ") + std::string(a);
  }
  ctx.fail("'" + ctx.key + "' = \"" + value + "\" is not one of " + list);
}

using Setter = std::function<void(Config&, const Value&, const Context&)>;

const std::map<std::string, std::map<std::string, Setter>>& setters() {
  static const std::map<std::string, std::map<std::string, Setter>> table = {
      {"symbol",
       {
           {"kind", [](Config& c, const Value& v, const Context& x) { c.symbol.kind = as_string(v, x); }},
           {"dim", [](Config& c, const Value& v, const Context& x) { c.symbol.dim = as_int(v, x); }},
           {"matrices", [](Config& c, const Value& v, const Context& x) { c.symbol.matrices = as_matrices(v, x); }},
           {"garding_c1", [](Config& c, const Value& v, const Context& x) { c.symbol.garding_c1 = as_number(v, x); }},
           {"garding_c2", [](Config& c, const Value& v, const Context& x) { c.symbol.garding_c2 = as_number(v, x); }},
       }},
      {"lattice",
       {
           {"basis", [](Config& c, const Value& v, const Context& x) { c.lattice.basis = as_rows(v, x); }},
       }},
      {"coefficient",
       {
           {"kind", [](Config& c, const Value& v, const Context& x) { c.coefficient.kind = as_string(v, x); }},
           {"value", [](Config& c, const Value& v, const Context& x) { c.coefficient.value = as_rows(v, x); }},
           {"low", [](Config& c, const Value& v, const Context& x) { c.coefficient.low = as_number(v, x); }},
           {"high", [](Config& c, const Value& v, const Context& x) { c.coefficient.high = as_number(v, x); }},
           {"fraction", [](Config& c, const Value& v, const Context& x) { c.coefficient.fraction = as_number(v, x); }},
           {"axis", [](Config& c, const Value& v, const Context& x) { c.coefficient.axis = as_int(v, x); }},
           {"mean", [](Config& c, const Value& v, const Context& x) { c.coefficient.mean = as_number(v, x); }},
           {"amplitude", [](Config& c, const Value& v, const Context& x) { c.coefficient.amplitude = as_number(v, x); }},
           {"a0", [](Config& c, const Value& v, const Context& x) { c.coefficient.a0 = as_number(v, x); }},
           {"a1", [](Config& c, const Value& v, const Context& x) { c.coefficient.a1 = as_number(v, x); }},
           {"b0", [](Config& c, const Value& v, const Context& x) { c.coefficient.b0 = as_number(v, x); }},
           {"b1", [](Config& c, const Value& v, const Context& x) { c.coefficient.b1 = as_number(v, x); }},
           {"resolution", [](Config& c, const Value& v, const Context& x) { c.coefficient.resolution = as_int(v, x); }},
           {"samples", [](Config& c, const Value& v, const Context& x) { c.coefficient.samples = as_vector(v, x); }},
       }},
      {"cell",
       {
           {"nodes", [](Config& c, const Value& v, const Context& x) { c.cell.nodes = as_int(v, x); }},
           {"tol", [](Config& c, const Value& v, const Context& x) { c.cell.tol = as_number(v, x); }},
           {"preconditioner",
            [](Config& c, const Value& v, const Context& x) { c.cell.preconditioner = as_string(v, x); }},
       }},
      {"problem",
       {
           {"kind", [](Config& c, const Value& v, const Context& x) { c.problem.kind = as_string(v, x); }},
           {"lambda", [](Config& c, const Value& v, const Context& x) { c.problem.lambda = as_number(v, x); }},
           {"eps", [](Config& c, const Value& v, const Context& x) { c.problem.eps = as_number(v, x); }},
           {"elements", [](Config& c, const Value& v, const Context& x) { c.problem.elements = as_int(v, x); }},
           {"side", [](Config& c, const Value& v, const Context& x) { c.problem.side = as_number(v, x); }},
           {"rhs_frequency",
            [](Config& c, const Value& v, const Context& x) { c.problem.rhs_frequency = as_int(v, x); }},
           {"tol", [](Config& c, const Value& v, const Context& x) { c.problem.tol = as_number(v, x); }},
           {"preconditioner",
            [](Config& c, const Value& v, const Context& x) { c.problem.preconditioner = as_string(v, x); }},
       }},
      {"study",
       {
           {"id", [](Config& c, const Value& v, const Context& x) { c.study.id = as_string(v, x); }},
           {"domain", [](Config& c, const Value& v, const Context& x) { c.study.domain = as_string(v, x); }},
           {"lambda", [](Config& c, const Value& v, const Context& x) { c.study.lambda = as_number(v, x); }},
           {"eps", [](Config& c, const Value& v, const Context& x) { c.study.eps = as_vector(v, x); }},
           {"nodes_per_eps", [](Config& c, const Value& v, const Context& x) { c.study.nodes_per_eps = as_int(v, x); }},
           {"side", [](Config& c, const Value& v, const Context& x) { c.study.side = as_number(v, x); }},
           {"rhs_frequency", [](Config& c, const Value& v, const Context& x) { c.study.rhs_frequency = as_int(v, x); }},
           {"interior_delta",
            [](Config& c, const Value& v, const Context& x) { c.study.interior_delta = as_number(v, x); }},
           {"interior_exponent",
            [](Config& c, const Value& v, const Context& x) { c.study.interior_exponent = as_number(v, x); }},
           {"plain_corrector",
            [](Config& c, const Value& v, const Context& x) { c.study.plain_corrector = as_bool(v, x); }},
           {"kernel", [](Config& c, const Value& v, const Context& x) { c.study.kernel = as_rows(v, x); }},
           {"tol", [](Config& c, const Value& v, const Context& x) { c.study.tol = as_number(v, x); }},
           {"preconditioner",
            [](Config& c, const Value& v, const Context& x) { c.study.preconditioner = as_string(v, x); }},
           {"seed", [](Config& c, const Value& v, const Context& x) { c.study.seed = as_int(v, x); }},
       }},
      {"output",
       {
           {"dir", [](Config& c, const Value& v, const Context& x) { c.output.dir = as_string(v, x); }},
           {"dump_fields", [](Config& c, const Value& v, const Context& x) { c.output.dump_fields = as_bool(v, x); }},
       }},
  };
  return table;
}

int config_dim(const Config& c) {
  if (c.symbol.kind == "elasticity_2d") return 2;
  if (c.symbol.kind == "custom") return static_cast<int>(c.symbol.matrices.size());
  return c.symbol.dim;
}

bool is_power_of_two(double x) {
  int e = 0;
  return x > 0.0 && std::frexp(x, &e) == 0.5;
}

void validate(Config& c, const std::map<std::string, int>& lines) {
  auto ctx = [&](const std::string& key) {
    const auto it = lines.find(key);
    return Context{key, it == lines.end() ? 0 : it->second};
  };
  one_of(c.symbol.kind, {"scalar_gradient", "elasticity_2d", "custom"}, ctx("symbol.kind"));
  const int d = config_dim(c);
  if (d < 1 || d > 3) ctx(c.symbol.kind == "custom" ? "symbol.matrices" : "symbol.dim").fail("dimension must be 1, 2 or 3");
  if (!(c.symbol.garding_c1 > 0.0)) ctx("symbol.garding_c1").fail("garding_c1 must be positive");
  if (!(c.symbol.garding_c2 >= 0.0)) ctx("symbol.garding_c2").fail("garding_c2 must be non-negative");
  c.symbol.dim = d;

  if (c.lattice.basis.empty()) {
    c.lattice.basis.assign(d, std::vector<double>(d, 0.0));
    for (int j = 0; j < d; ++j) c.lattice.basis[j][j] = 1.0;
  }
  if (static_cast<int>(c.lattice.basis.size()) != d) ctx("lattice.basis").fail("lattice needs d basis vectors");
  for (const auto& r : c.lattice.basis) {
    if (static_cast<int>(r.size()) != d) ctx("lattice.basis").fail("lattice basis vectors need d entries");
  }

  auto& k = c.coefficient;
  one_of(k.kind, {"constant", "laminate", "checkerboard", "trig", "divfree", "samples"}, ctx("coefficient.kind"));
  if (k.kind == "constant" && k.value.empty()) k.value = {{1.0}};
  if (k.axis < 1 || k.axis > d) ctx("coefficient.axis").fail("axis must be between 1 and d");
  if (k.kind == "laminate" && !(k.fraction > 0.0 && k.fraction < 1.0)) {
    ctx("coefficient.fraction").fail("fraction must lie in (0, 1)");
  }
  if (k.kind == "divfree" && d != 2) ctx("coefficient.kind").fail("divfree needs d = 2");
  if (k.kind == "samples" && k.resolution < 1) ctx("coefficient.resolution").fail("samples need resolution >= 1");

  one_of(c.cell.preconditioner, {"spectral", "jacobi", "none"}, ctx("cell.preconditioner"));
  if (c.cell.nodes != 0 && (c.cell.nodes < 8 || !is_power_of_two(c.cell.nodes))) {
    ctx("cell.nodes").fail("cell nodes must be 0 or a power of two >= 8");
  }
  if (!(c.cell.tol > 0.0)) ctx("cell.tol").fail("tol must be positive");

  one_of(c.problem.kind, {"neumann_eps", "neumann_eff", "periodic_eps", "periodic_eff"}, ctx("problem.kind"));
  one_of(c.problem.preconditioner, {"spectral", "jacobi", "none"}, ctx("problem.preconditioner"));
  if (!(c.problem.lambda >= 0.0)) ctx("problem.lambda").fail("lambda must be non-negative");
  if (!(c.problem.eps > 0.0)) ctx("problem.eps").fail("eps must be positive");
  if (c.problem.elements < 3) ctx("problem.elements").fail("elements must be at least 3");
  if (!(c.problem.side > 0.0)) ctx("problem.side").fail("side must be positive");
  if (c.problem.rhs_frequency < 0) ctx("problem.rhs_frequency").fail("rhs_frequency must be non-negative");

  auto& s = c.study;
  one_of(s.domain, {"square", "torus"}, ctx("study.domain"));
  one_of(s.preconditioner, {"spectral", "jacobi", "none"}, ctx("study.preconditioner"));
  if (!(s.lambda >= 0.0)) ctx("study.lambda").fail("lambda must be non-negative");
  if (s.lambda == 0.0 && s.domain == "torus") ctx("study.lambda").fail("lambda = 0 needs domain = \"square\"");
  if (s.eps.size() < 3) ctx("study.eps").fail("eps list needs at least three values");
  for (std::size_t i = 0; i < s.eps.size(); ++i) {
    if (!is_power_of_two(s.eps[i]) || (i > 0 && !(s.eps[i] < s.eps[i - 1]))) {
      ctx("study.eps").fail("eps list must be dyadic (powers of two) and strictly decreasing");
    }
  }
  if (s.nodes_per_eps < 8 || !is_power_of_two(s.nodes_per_eps)) {
    ctx("study.nodes_per_eps").fail("nodes_per_eps must be a power of two >= 8");
  }
  if (!(s.side > 0.0)) ctx("study.side").fail("side must be positive");
  if (!(s.interior_delta >= 0.0) || s.interior_delta >= 0.5 * s.side) {
    ctx("study.interior_delta").fail("interior_delta must lie in [0, side / 2)");
  }
  if (!(s.interior_exponent >= 0.0)) ctx("study.interior_exponent").fail("interior_exponent must be non-negative");
  if (s.rhs_frequency < 0) ctx("study.rhs_frequency").fail("rhs_frequency must be non-negative");
  if (!(s.tol > 0.0)) ctx("study.tol").fail("tol must be positive");
}

std::string number(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  std::string s(buf, ptr);
  // Keep floats recognizable as such for TOML readers.
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string integer(long long x) { return std::to_string(x); }

std::string vec(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + number(v[i]);
  return s + "]";
}

std::string rows(const Rows& r) {
  std::string s = "[";
  for (std::size_t i = 0; i < r.size(); ++i) s += (i ? ", " : "") + vec(r[i]);
  return s + "]";
}

std::string quoted(const std::string& s) { return "\"" + s + "\""; }

Eigen::MatrixXd to_matrix(const Rows& r) {
  const Eigen::Index rows_n = static_cast<Eigen::Index>(r.size());
  const Eigen::Index cols_n = rows_n ? static_cast<Eigen::Index>(r[0].size()) : 0;
  Eigen::MatrixXd m(rows_n, cols_n);
  for (Eigen::Index i = 0; i < rows_n; ++i) {
    if (static_cast<Eigen::Index>(r[i].size()) != cols_n) {
      throw ConfigError("ragged matrix rows", {}, 0);
    }
    for (Eigen::Index j = 0; j < cols_n; ++j) m(i, j) = r[i][j];
  }
  return m;
}

}  // namespace

Config parse_config(const std::string& text) {
  Config c;
  std::map<std::string, int> lines;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']' && line.find('=') == std::string::npos) {
      section = trim(line.substr(1, line.size() - 2));
      if (!setters().contains(section)) throw ConfigError("unknown section [" + section + "]", section, line_no);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value", {}, line_no);
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    const int start = line_no;
    while (bracket_balance(value) > 0 && std::getline(in, raw)) {
      ++line_no;
      value += " " + trim(strip_comment(raw));
    }
    const std::string full = section.empty() ? key : section + "." + key;
    if (section.empty()) throw ConfigError("key '" + key + "' outside any section", key, start);
    const auto& table = setters().at(section);
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError("unknown key '" + full + "'", full, start);
    if (lines.contains(full)) throw ConfigError("duplicate key '" + full + "'", full, start);
    lines[full] = start;
    it->second(c, ValueParser(value, full, start).parse(), Context{full, start});
  }
  validate(c, lines);
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorKind::io_error, "cannot read " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string emit_config(const Config& c) {
  std::ostringstream o;
  o << "[symbol]\n"
    << "kind = " << quoted(c.symbol.kind) << '\n'
    << "dim = " << c.symbol.dim << '\n';
  if (!c.symbol.matrices.empty()) {
    o << "matrices = [";
    for (std::size_t i = 0; i < c.symbol.matrices.size(); ++i) o << (i ? ", " : "") << rows(c.symbol.matrices[i]);
    o << "]\n";
  }
  o << "garding_c1 = " << number(c.symbol.garding_c1) << '\n'
    << "garding_c2 = " << number(c.symbol.garding_c2) << "\n\n";
  o << "[lattice]\nbasis = " << rows(c.lattice.basis) << "\n\n";
  const auto& k = c.coefficient;
  o << "[coefficient]\n"
    << "kind = " << quoted(k.kind) << '\n';
  if (!k.value.empty()) o << "value = " << rows(k.value) << '\n';
  o << "low = " << number(k.low) << '\n'
    << "high = " << number(k.high) << '\n'
    << "fraction = " << number(k.fraction) << '\n'
    << "axis = " << k.axis << '\n'
    << "mean = " << number(k.mean) << '\n'
    << "amplitude = " << number(k.amplitude) << '\n'
    << "a0 = " << number(k.a0) << '\n'
    << "a1 = " << number(k.a1) << '\n'
    << "b0 = " << number(k.b0) << '\n'
    << "b1 = " << number(k.b1) << '\n'
    << "resolution = " << k.resolution << '\n';
  if (!k.samples.empty()) o << "samples = " << vec(k.samples) << '\n';
  o << "\n[cell]\n"
    << "nodes = " << c.cell.nodes << '\n'
    << "tol = " << number(c.cell.tol) << '\n'
    << "preconditioner = " << quoted(c.cell.preconditioner) << "\n\n";
  const auto& p = c.problem;
  o << "[problem]\n"
    << "kind = " << quoted(p.kind) << '\n'
    << "lambda = " << number(p.lambda) << '\n'
    << "eps = " << number(p.eps) << '\n'
    << "elements = " << p.elements << '\n'
    << "side = " << number(p.side) << '\n'
    << "rhs_frequency = " << p.rhs_frequency << '\n'
    << "tol = " << number(p.tol) << '\n'
    << "preconditioner = " << quoted(p.preconditioner) << "\n\n";
  const auto& s = c.study;
  o << "[study]\n"
    << "id = " << quoted(s.id) << '\n'
    << "domain = " << quoted(s.domain) << '\n'
    << "lambda = " << number(s.lambda) << '\n'
    << "eps = " << vec(s.eps) << '\n'
    << "nodes_per_eps = " << s.nodes_per_eps << '\n'
    << "side = " << number(s.side) << '\n'
    << "rhs_frequency = " << s.rhs_frequency << '\n'
    << "interior_delta = " << number(s.interior_delta) << '\n'
    << "interior_exponent = " << number(s.interior_exponent) << '\n'
    << "plain_corrector = " << (s.plain_corrector ? "true" : "false") << '\n';
  if (!s.kernel.empty()) o << "kernel = " << rows(s.kernel) << '\n';
  o << "tol = " << number(s.tol) << '\n'
    << "preconditioner = " << quoted(s.preconditioner) << '\n'
    << "seed = " << integer(s.seed) << "\n\n";
  o << "[output]\n"
    << "dir = " << quoted(c.output.dir) << '\n'
    << "dump_fields = " << (c.output.dump_fields ? "true" : "false") << '\n';
  return o.str();
}

std::string config_hash(const Config& config) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : emit_config(config)) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

SymbolOperator make_operator(const Config& c) {
  if (c.symbol.kind == "elasticity_2d") return elasticity_2d();
  if (c.symbol.kind == "custom") {
    std::vector<Eigen::MatrixXd> mats;
    for (const Rows& r : c.symbol.matrices) mats.push_back(to_matrix(r));
    return make_symbol(std::move(mats), "custom");
  }
  return scalar_gradient(c.symbol.dim);
}

Lattice make_lattice(const Config& c) {
  std::vector<Eigen::VectorXd> vecs;
  for (const auto& r : c.lattice.basis) vecs.push_back(Eigen::Map<const Eigen::VectorXd>(r.data(), r.size()));
  return build_lattice(vecs);
}

PeriodicCoefficient make_coefficient(const Config& c) {
  const int m = make_operator(c).rows;
  const int d = c.symbol.dim;
  const auto& k = c.coefficient;
  if (k.kind == "constant") {
    const Eigen::MatrixXd v = to_matrix(k.value);
    if (v.rows() == 1 && v.cols() == 1) return constant_coefficient(v(0, 0) * Eigen::MatrixXd::Identity(m, m));
    if (v.rows() != m || v.cols() != m) {
      throw ConfigError("coefficient.value must be 1 x 1 or " + std::to_string(m) + " x " + std::to_string(m),
                        "coefficient.value");
    }
    return constant_coefficient(v);
  }
  if (k.kind == "laminate") return laminate_coefficient(m, k.low, k.high, k.fraction, k.axis - 1);
  if (k.kind == "checkerboard") return checkerboard_coefficient(m, d, k.low, k.high);
  if (k.kind == "trig") return trig_coefficient(m, k.mean, k.amplitude, k.axis - 1);
  if (k.kind == "divfree") {
    if (m != 2) throw ConfigError("divfree needs a 2 x 2 coefficient (scalar gradient in 2D)", "coefficient.kind");
    return divfree_diag_coefficient(k.a0, k.a1, k.b0, k.b1);
  }
  return sampled_coefficient(m, d, k.resolution, k.samples);
}

CellOptions make_cell_options(const Config& c) {
  CellOptions o;
  o.nodes_per_dim = c.cell.nodes;
  o.tol = c.cell.tol;
  o.preconditioner = c.cell.preconditioner;
  return o;
}

std::vector<AffineField> make_kernel(const Config& c, const Rows& rows_in) {
  const SymbolOperator op = make_operator(c);
  const int n = op.cols, d = op.dim;
  std::vector<AffineField> out;
  for (const auto& r : rows_in) {
    if (static_cast<int>(r.size()) != n + n * d) {
      throw ConfigError("kernel rows need n + n*d = " + std::to_string(n + n * d) + " entries", "study.kernel");
    }
    AffineField z{Eigen::VectorXd(n), Eigen::MatrixXd(n, d)};
    for (int i = 0; i < n; ++i) z.offset(i) = r[i];
    for (int i = 0; i < n; ++i) {
      for (int l = 0; l < d; ++l) z.gradient(i, l) = r[n + i * d + l];
    }
    out.push_back(z);
  }
  return out;
}

StudySpec make_study(const Config& c) {
  StudySpec s;
  s.id = c.study.id;
  s.op = make_operator(c);
  s.lattice = make_lattice(c);
  s.coefficient = make_coefficient(c);
  s.cell = make_cell_options(c);
  s.cell.nodes_per_dim = c.cell.nodes;  // 0: matched to nodes_per_eps
  s.domain = c.study.domain == "torus" ? StudyDomain::torus : StudyDomain::square;
  s.lambda = c.study.lambda;
  s.eps = c.study.eps;
  s.nodes_per_eps = c.study.nodes_per_eps;
  s.side = c.study.side;
  s.rhs_frequency = c.study.rhs_frequency;
  s.interior_delta = c.study.interior_delta;
  s.interior_exponent = c.study.interior_exponent;
  s.plain_corrector = c.study.plain_corrector;
  s.garding_c1 = c.symbol.garding_c1;
  s.garding_c2 = c.symbol.garding_c2;
  s.kernel = make_kernel(c, c.study.kernel);
  s.tol = c.study.tol;
  s.preconditioner = c.study.preconditioner;
  return s;
}

}  // namespace perihom

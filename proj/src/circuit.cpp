#include "mtomo/circuit.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "mtomo/errors.hpp"

namespace mtomo::circuit {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

// Recursive-descent evaluator for  expr := ['-'] atom (('*' | '/') ['-'] atom)*
class AngleParser {
 public:
  AngleParser(std::string_view text, std::optional<double> theta, int line) : s_(text), theta_(theta), line_(line) {}

  double parse() {
    skip();
    if (pos_ == s_.size()) fail("empty angle expression");
    double value = factor();
    for (;;) {
      skip();
      if (pos_ == s_.size()) break;
      const char op = s_[pos_];
      if (op != '*' && op != '/') fail(std::string("unexpected '") + op + "' in angle expression");
      ++pos_;
      const double rhs = factor();
      if (op == '*') {
        value *= rhs;
      } else {
        if (rhs == 0.0) fail("division by zero in angle expression");
        value /= rhs;
      }
    }
    return value;
  }

 private:
  double factor() {
    skip();
    double sign = 1.0;
    while (pos_ < s_.size() && (s_[pos_] == '-' || s_[pos_] == '+')) {
      if (s_[pos_] == '-') sign = -sign;
      ++pos_;
      skip();
    }
    return sign * atom();
  }

  double atom() {
    skip();
    if (pos_ == s_.size()) fail("angle expression ends unexpectedly");
    const std::string_view rest = s_.substr(pos_);
    if (rest.starts_with("pi")) {
      pos_ += 2;
      return std::numbers::pi;
    }
    if (rest.starts_with("theta")) {
      pos_ += 5;
      if (!theta_) fail("angle uses 'theta' but no value was bound");
      return *theta_;
    }
    double v = 0.0;
    const auto res = std::from_chars(rest.data(), rest.data() + rest.size(), v);
    if (res.ec != std::errc() || res.ptr == rest.data()) fail("bad angle token '" + std::string(rest) + "'");
    pos_ += static_cast<std::size_t>(res.ptr - rest.data());
    return v;
  }

  void skip() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(line_, what); }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::optional<double> theta_;
  int line_;
};

int parse_qubit(std::string_view tok, int num_qubits, int line) {
  int q = -1;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), q);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    throw ParseError(line, "bad qubit index '" + std::string(tok) + "'");
  }
  if (q < 0 || q >= num_qubits) {
    throw ParseError(line, "qubit " + std::to_string(q) + " out of range for " + std::to_string(num_qubits) +
                               "-qubit circuit");
  }
  return q;
}

// Applies the 2x2 matrix [[u00, u01], [u10, u11]] to qubit q.
void apply_single(ComplexVector& a, int q, Complex u00, Complex u01, Complex u10, Complex u11) {
  const Eigen::Index stride = Eigen::Index{1} << q;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (i & stride) continue;
    const Complex lo = a[i];
    const Complex hi = a[i | stride];
    a[i] = u00 * lo + u01 * hi;
    a[i | stride] = u10 * lo + u11 * hi;
  }
}

}  // namespace

std::string_view mnemonic(GateKind kind) {
  switch (kind) {
    case GateKind::H: return "h";
    case GateKind::X: return "x";
    case GateKind::CX: return "cx";
    case GateKind::CZ: return "cz";
    case GateKind::RX: return "rx";
    case GateKind::RY: return "ry";
    case GateKind::RZ: return "rz";
  }
  return "?";
}

void Circuit::validate() const {
  if (num_qubits < 1 || num_qubits > kMaxQubits) {
    throw ValidationError("circuit: qubit count " + std::to_string(num_qubits) + " outside [1, " +
                          std::to_string(kMaxQubits) + "]");
  }
  for (std::size_t idx = 0; idx < gates.size(); ++idx) {
    const Gate& g = gates[idx];
    const int arity = g.two_qubit() ? 2 : 1;
    for (int t = 0; t < arity; ++t) {
      if (g.targets[t] < 0 || g.targets[t] >= num_qubits) {
        throw ValidationError("circuit: gate " + std::to_string(idx) + " targets qubit " +
                              std::to_string(g.targets[t]) + " outside the register");
      }
    }
    if (g.two_qubit() && g.targets[0] == g.targets[1]) {
      throw ValidationError("circuit: gate " + std::to_string(idx) + " uses the same qubit twice");
    }
  }
}

Circuit parse_circuit(std::string_view text, std::optional<double> theta) {
  Circuit c;
  bool have_header = false;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    std::string_view line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    std::string_view head = line;
    std::string_view angle_text;
    std::string_view operands;
    const auto paren = line.find('(');
    if (paren != std::string_view::npos) {
      const auto close = line.find(')', paren);
      if (close == std::string_view::npos) throw ParseError(line_no, "missing ')'");
      head = trim(line.substr(0, paren));
      angle_text = line.substr(paren + 1, close - paren - 1);
      operands = line.substr(close + 1);
    } else {
      const auto sp = line.find_first_of(" \t");
      head = line.substr(0, sp);
      operands = sp == std::string_view::npos ? std::string_view{} : line.substr(sp);
    }
    const auto args = split_ws(operands);

    if (head == "qubits") {
      if (have_header) throw ParseError(line_no, "duplicate 'qubits' header");
      if (args.size() != 1 || paren != std::string_view::npos) throw ParseError(line_no, "expected 'qubits <n>'");
      int n = 0;
      const auto res = std::from_chars(args[0].data(), args[0].data() + args[0].size(), n);
      if (res.ec != std::errc() || res.ptr != args[0].data() + args[0].size() || n < 1 || n > kMaxQubits) {
        throw ParseError(line_no, "qubit count must be an integer in [1, " + std::to_string(kMaxQubits) + "]");
      }
      c.num_qubits = n;
      have_header = true;
      continue;
    }
    if (!have_header) throw ParseError(line_no, "gate before 'qubits <n>' header");

    Gate g;
    int arity = 1;
    bool rotation = false;
    if (head == "h") {
      g.kind = GateKind::H;
    } else if (head == "x") {
      g.kind = GateKind::X;
    } else if (head == "cx") {
      g.kind = GateKind::CX;
      arity = 2;
    } else if (head == "cz") {
      g.kind = GateKind::CZ;
      arity = 2;
    } else if (head == "rx" || head == "ry" || head == "rz") {
      g.kind = head == "rx" ? GateKind::RX : head == "ry" ? GateKind::RY : GateKind::RZ;
      rotation = true;
    } else {
      throw ParseError(line_no, "unknown gate '" + std::string(head) + "'");
    }
    if (rotation && paren == std::string_view::npos) {
      throw ParseError(line_no, "rotation '" + std::string(head) + "' needs an angle, e.g. " + std::string(head) +
                                    "(pi/2)");
    }
    if (!rotation && paren != std::string_view::npos) {
      throw ParseError(line_no, "gate '" + std::string(head) + "' takes no angle");
    }
    if (static_cast<int>(args.size()) != arity) {
      throw ParseError(line_no, "gate '" + std::string(head) + "' expects " + std::to_string(arity) + " qubit(s)");
    }
    for (int t = 0; t < arity; ++t) g.targets[t] = parse_qubit(args[t], c.num_qubits, line_no);
    if (arity == 2 && g.targets[0] == g.targets[1]) throw ParseError(line_no, "two-qubit gate on a single qubit");
    if (rotation) g.angle = AngleParser(angle_text, theta, line_no).parse();
    c.gates.push_back(g);
  }
  if (!have_header) throw ParseError(line_no, "missing 'qubits <n>' header");
  return c;
}

std::string format_circuit(const Circuit& c) {
  std::ostringstream os;
  os << "qubits " << c.num_qubits << "\n";
  for (const Gate& g : c.gates) {
    os << mnemonic(g.kind);
    if (g.rotation()) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "(%.17g)", g.angle);
      os << buf;
    }
    os << " " << g.targets[0];
    if (g.two_qubit()) os << " " << g.targets[1];
    os << "\n";
  }
  return os.str();
}

StateVector zero_state(int num_qubits) {
  if (num_qubits < 1 || num_qubits > kMaxQubits) throw ValidationError("zero_state: unsupported qubit count");
  StateVector sv{num_qubits, ComplexVector::Zero(Eigen::Index{1} << num_qubits)};
  sv.amplitudes[0] = 1.0;
  return sv;
}

void apply_gate(StateVector& sv, const Gate& g) {
  ComplexVector& a = sv.amplitudes;
  const int q = g.targets[0];
  const double c = std::cos(0.5 * g.angle);
  const double s = std::sin(0.5 * g.angle);
  const Complex i1(0.0, 1.0);
  switch (g.kind) {
    case GateKind::H: {
      const double r = std::numbers::sqrt2 / 2.0;
      apply_single(a, q, r, r, r, -r);
      break;
    }
    case GateKind::X:
      apply_single(a, q, 0.0, 1.0, 1.0, 0.0);
      break;
    case GateKind::RX:
      apply_single(a, q, c, -i1 * s, -i1 * s, c);
      break;
    case GateKind::RY:
      apply_single(a, q, c, -s, s, c);
      break;
    case GateKind::RZ:
      apply_single(a, q, Complex(c, -s), 0.0, 0.0, Complex(c, s));
      break;
    case GateKind::CX: {
      const Eigen::Index cm = Eigen::Index{1} << g.targets[0];
      const Eigen::Index tm = Eigen::Index{1} << g.targets[1];
      for (Eigen::Index i = 0; i < a.size(); ++i) {
        if ((i & cm) && !(i & tm)) std::swap(a[i], a[i | tm]);
      }
      break;
    }
    case GateKind::CZ: {
      const Eigen::Index m = (Eigen::Index{1} << g.targets[0]) | (Eigen::Index{1} << g.targets[1]);
      for (Eigen::Index i = 0; i < a.size(); ++i) {
        if ((i & m) == m) a[i] = -a[i];
      }
      break;
    }
  }
}

StateVector simulate(const Circuit& c) {
  c.validate();
  StateVector sv = zero_state(c.num_qubits);
  for (const Gate& g : c.gates) apply_gate(sv, g);
  return sv;
}

std::vector<double> populations(const StateVector& sv) {
  std::vector<double> p(sv.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::norm(sv.amplitudes[static_cast<Eigen::Index>(i)]);
  return p;
}

Complex coherence(const StateVector& sv, int i, int j) {
  const int dim = static_cast<int>(sv.size());
  if (i < 1 || i > dim || j < 1 || j > dim) {
    throw ValidationError("coherence: basis index (" + std::to_string(i) + "," + std::to_string(j) +
                          ") outside [1, " + std::to_string(dim) + "]");
  }
  return std::conj(sv.amplitudes[i - 1]) * sv.amplitudes[j - 1];
}

ComplexMatrix outer_product(const StateVector& sv) { return sv.amplitudes * sv.amplitudes.adjoint(); }

}  // namespace mtomo::circuit

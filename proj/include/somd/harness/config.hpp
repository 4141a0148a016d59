#pragma once

// Experiment configuration: a flat `key = value` text format, space and
// regularizer description strings, and their resolution into library objects.
//
// Grammar of a configuration file:
//
//   line     := blank | comment | section | entry
//   comment  := '#' ...
//   section  := '[' name ']'          keys below are read as name.key
//   entry    := key '=' value         trailing '# ...' is ignored
//
// Space strings:        term ('+' term)*
//   term := standard | sparse(s=INT) | noisy(eps=REAL)
//         | spherical(eps=REAL[,kappa=REAL]) | lowrank(d=INT)
// Regularizer strings:  auto | rterm ('+' rterm)*
//   rterm := neg_entropy | squared_qnorm(q=REAL) | qnorm_sparse(s=INT)
//          | scaled_euclidean(eps=REAL)

#include "somd/core.hpp"
#include "somd/loss_spaces.hpp"
#include "somd/lowrank_geometry.hpp"
#include "somd/random.hpp"
#include "somd/regularizers.hpp"

#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace somd::harness {

class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

enum class Algorithm { kOmd, kHedge };
enum class OutputFormat { kCsv, kJson };

struct ExperimentConfig {
  Index N = 0;
  Index T = 0;
  Index trials = 1;
  std::uint64_t seed = 0;
  std::string space;
  /// Seed of the random geometry (spherical axes, low-rank bases).
  std::uint64_t space_seed = 0;
  Algorithm algorithm = Algorithm::kOmd;
  std::string regularizer = "auto";
  /// Empty means the certified rate.
  std::optional<double> eta;
  double persistence = 0.5;
  std::string output_path = "-";
  OutputFormat format = OutputFormat::kCsv;
  std::vector<std::string> sweep_spaces;
  std::vector<Index> sweep_N;
  std::vector<Index> sweep_T;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(trim(cur));
  return out;
}

/// Splits on `sep` outside parentheses.
inline std::vector<std::string> split_top(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char ch : s) {
    if (ch == '(') ++depth;
    if (ch == ')') --depth;
    if (depth < 0) throw ConfigError("unbalanced ')' in '" + s + "'");
    if (ch == sep && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (depth != 0) throw ConfigError("unbalanced '(' in '" + s + "'");
  out.push_back(trim(cur));
  return out;
}

inline double parse_real(const std::string& text, const std::string& what) {
  const std::string s = trim(text);
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) {
    throw ConfigError(what + ": expected a real number, got '" + text + "'");
  }
  return v;
}

inline long long parse_integer(const std::string& text, const std::string& what) {
  const std::string s = trim(text);
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
    throw ConfigError(what + ": expected an integer, got '" + text + "'");
  }
  return v;
}

inline Index parse_positive(const std::string& text, const std::string& what) {
  const long long v = parse_integer(text, what);
  if (v < 1) throw ConfigError(what + " must be positive");
  return static_cast<Index>(v);
}

inline std::uint64_t parse_seed(const std::string& text, const std::string& what) {
  const std::string s = trim(text);
  errno = 0;
  char* end = nullptr;
  if (!s.empty() && s[0] == '-') throw ConfigError(what + " must be nonnegative");
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
    throw ConfigError(what + ": expected an unsigned integer, got '" + text + "'");
  }
  return static_cast<std::uint64_t>(v);
}

/// name(key=value, ...) split into its name and arguments.
struct Term {
  std::string name;
  std::map<std::string, std::string> args;

  const std::string* find(const std::string& key) const {
    const auto it = args.find(key);
    return it == args.end() ? nullptr : &it->second;
  }
  const std::string& need(const std::string& key) const {
    const auto* v = find(key);
    if (v == nullptr) throw ConfigError(name + ": missing argument '" + key + "'");
    return *v;
  }
  void allow_only(std::initializer_list<const char*> keys) const {
    for (const auto& [k, v] : args) {
      bool ok = false;
      for (const char* allowed : keys) ok = ok || k == allowed;
      if (!ok) throw ConfigError(name + ": unknown argument '" + k + "'");
    }
  }
};

inline Term parse_term(const std::string& text) {
  const std::string s = trim(text);
  if (s.empty()) throw ConfigError("empty term");
  Term term;
  const auto open = s.find('(');
  if (open == std::string::npos) {
    term.name = s;
    return term;
  }
  if (s.back() != ')') throw ConfigError("malformed term '" + s + "'");
  term.name = trim(s.substr(0, open));
  const std::string inner = trim(s.substr(open + 1, s.size() - open - 2));
  if (inner.empty()) return term;
  for (const auto& part : split(inner, ',')) {
    const auto eq = part.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key=value in '" + s + "'");
    const std::string key = trim(part.substr(0, eq));
    if (!term.args.emplace(key, trim(part.substr(eq + 1))).second) {
      throw ConfigError("repeated argument '" + key + "' in '" + s + "'");
    }
  }
  return term;
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Q diag(lambda) Q' with Q Haar-orthogonal and lambda log-uniform on
/// [1, kappa]; the extreme eigenvalues are exactly 1 and kappa.
inline Matrix random_spd(Index n, double kappa, Rng& rng) {
  Matrix g(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) g(i, j) = standard_normal(rng);
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < n; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  Vector lambda(n);
  const double log_kappa = std::log(kappa);
  for (Index i = 0; i < n; ++i) lambda[i] = std::exp(log_kappa * uniform01(rng));
  lambda[0] = 1.0;
  if (n > 1) lambda[n - 1] = kappa;
  Matrix a = q * lambda.asDiagonal() * q.transpose();
  return 0.5 * (a + a.transpose());
}

inline LossSpaceSpec build_leaf(const Term& term, Index n, std::uint64_t seed) {
  if (term.name == "standard") {
    term.allow_only({});
    return LossSpaceSpec::standard(n);
  }
  if (term.name == "sparse") {
    term.allow_only({"s"});
    return LossSpaceSpec::sparse(n, parse_positive(term.need("s"), "sparse.s"));
  }
  if (term.name == "noisy") {
    term.allow_only({"eps"});
    return LossSpaceSpec::noisy(n, parse_real(term.need("eps"), "noisy.eps"));
  }
  if (term.name == "spherical") {
    term.allow_only({"eps", "kappa"});
    const double eps = parse_real(term.need("eps"), "spherical.eps");
    const double kappa = term.find("kappa") ? parse_real(*term.find("kappa"), "spherical.kappa") : 10.0;
    if (!(kappa >= 1.0)) throw ConfigError("spherical.kappa must be at least 1");
    Rng rng(seed);
    return LossSpaceSpec::spherical(random_spd(n, kappa, rng), eps);
  }
  if (term.name == "lowrank") {
    term.allow_only({"d"});
    const Index d = parse_positive(term.need("d"), "lowrank.d");
    if (d > n) throw ConfigError("lowrank.d must not exceed N");
    Rng rng(seed);
    Matrix u(n, d);
    for (Index j = 0; j < d; ++j) {
      for (Index i = 0; i < n; ++i) u(i, j) = uniform01(rng);
    }
    return LossSpaceSpec::low_rank(SubspaceSpec(u), mix_seed(seed, 0xB0B));
  }
  throw ConfigError("unknown loss space '" + term.name + "'");
}

}  // namespace detail

/// Builds the loss space described by `text` in dimension N. Random geometry
/// is drawn from `seed`, independently per '+'-separated term.
inline LossSpaceSpec parse_space(const std::string& text, Index n, std::uint64_t seed = 0) {
  if (n < 1) throw ConfigError("N must be positive");
  const auto parts = detail::split_top(text, '+');
  std::optional<LossSpaceSpec> out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    LossSpaceSpec leaf = detail::build_leaf(detail::parse_term(parts[i]), n, detail::mix_seed(seed, i));
    out = out ? LossSpaceSpec::additive(*out, leaf) : leaf;
  }
  return *out;
}

/// Builds an explicit regularizer description in dimension N.
inline Regularizer parse_regularizer(const std::string& text, Index n) {
  std::optional<Regularizer> out;
  for (const auto& part : detail::split_top(text, '+')) {
    const detail::Term term = detail::parse_term(part);
    Regularizer leaf = [&] {
      if (term.name == "neg_entropy") {
        term.allow_only({});
        return Regularizer::neg_entropy(n);
      }
      if (term.name == "squared_qnorm") {
        term.allow_only({"q"});
        return Regularizer::squared_qnorm(n, detail::parse_real(term.need("q"), "squared_qnorm.q"));
      }
      if (term.name == "qnorm_sparse") {
        term.allow_only({"s"});
        return make_qnorm_for_sparsity(detail::parse_positive(term.need("s"), "qnorm_sparse.s"), n);
      }
      if (term.name == "scaled_euclidean") {
        term.allow_only({"eps"});
        return Regularizer::scaled_euclidean(n, detail::parse_real(term.need("eps"), "scaled_euclidean.eps"));
      }
      throw ConfigError("unknown regularizer '" + term.name + "'");
    }();
    out = out ? compose(*out, leaf) : leaf;
  }
  return *out;
}

/// Parses a configuration document. Unknown keys are errors.
inline ExperimentConfig parse_config(std::istream& in, const std::string& origin = "<config>") {
  ExperimentConfig cfg;
  std::string line;
  std::string section;
  int lineno = 0;
  bool have_n = false;
  bool have_t = false;
  bool have_space = false;
  auto fail = [&](const std::string& msg) { throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + msg); };

  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = detail::trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']') fail("malformed section header");
      section = detail::trim(body.substr(1, body.size() - 2));
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    std::string key = detail::trim(body.substr(0, eq));
    const std::string value = detail::trim(body.substr(eq + 1));
    if (!section.empty()) key = section + "." + key;
    if (value.empty()) fail("empty value for '" + key + "'");

    try {
      if (key == "experiment.N") {
        cfg.N = detail::parse_positive(value, key);
        have_n = true;
      } else if (key == "experiment.T") {
        cfg.T = detail::parse_positive(value, key);
        have_t = true;
      } else if (key == "experiment.trials") {
        cfg.trials = detail::parse_positive(value, key);
      } else if (key == "experiment.seed") {
        cfg.seed = detail::parse_seed(value, key);
      } else if (key == "space" || key == "space.spec") {
        cfg.space = value;
        have_space = true;
      } else if (key == "space.seed") {
        cfg.space_seed = detail::parse_seed(value, key);
      } else if (key == "learner.algorithm") {
        if (value == "omd") {
          cfg.algorithm = Algorithm::kOmd;
        } else if (value == "hedge") {
          cfg.algorithm = Algorithm::kHedge;
        } else {
          fail("learner.algorithm must be omd or hedge");
        }
      } else if (key == "learner.regularizer") {
        cfg.regularizer = value;
      } else if (key == "learner.eta") {
        if (value == "optimal") {
          cfg.eta.reset();
        } else {
          const double eta = detail::parse_real(value, key);
          if (!(eta > 0.0)) fail("learner.eta must be positive");
          cfg.eta = eta;
        }
      } else if (key == "sequence.persistence") {
        cfg.persistence = detail::parse_real(value, key);
        if (!(cfg.persistence >= 0.0 && cfg.persistence <= 1.0)) fail("sequence.persistence must lie in [0, 1]");
      } else if (key == "output.path") {
        cfg.output_path = value;
      } else if (key == "output.format") {
        if (value == "csv") {
          cfg.format = OutputFormat::kCsv;
        } else if (value == "json") {
          cfg.format = OutputFormat::kJson;
        } else {
          fail("output.format must be csv or json");
        }
      } else if (key == "sweep.spaces") {
        cfg.sweep_spaces = detail::split(value, ';');
      } else if (key == "sweep.N") {
        cfg.sweep_N.clear();
        for (const auto& v : detail::split(value, ',')) cfg.sweep_N.push_back(detail::parse_positive(v, key));
      } else if (key == "sweep.T") {
        cfg.sweep_T.clear();
        for (const auto& v : detail::split(value, ',')) cfg.sweep_T.push_back(detail::parse_positive(v, key));
      } else {
        fail("unknown key '" + key + "'");
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      fail(e.what());
    }
  }
  const bool sweep = !cfg.sweep_spaces.empty();
  if (!sweep) {
    if (!have_n) throw ConfigError(origin + ": missing experiment.N");
    if (!have_t) throw ConfigError(origin + ": missing experiment.T");
    if (!have_space) throw ConfigError(origin + ": missing space");
  } else {
    if (cfg.sweep_N.empty() && !have_n) throw ConfigError(origin + ": sweep needs sweep.N or experiment.N");
    if (cfg.sweep_T.empty() && !have_t) throw ConfigError(origin + ": sweep needs sweep.T or experiment.T");
  }
  return cfg;
}

inline ExperimentConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in, path);
}

}  // namespace somd::harness

#include "levyctl/config.hpp"

#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "levyctl/errors.hpp"

namespace levyctl {

namespace {

using nlohmann::json;

std::string escape_token(const std::string& k) {
  std::string out;
  for (char ch : k) {
    if (ch == '~')
      out += "~0";
    else if (ch == '/')
      out += "~1";
    else
      out += ch;
  }
  return out;
}

// Maps each JSON pointer of an already validated document to the line it starts on.
class LineIndex {
 public:
  explicit LineIndex(const std::string& text) : t_(text) {
    ws();
    if (i_ < t_.size()) value("");
  }
  int line(const std::string& ptr) const {
    for (std::string p = ptr;; p = p.substr(0, p.rfind('/'))) {
      if (auto it = lines_.find(p); it != lines_.end()) return it->second;
      if (p.empty()) return 1;
    }
  }

 private:
  void ws() {
    while (i_ < t_.size() && std::isspace(static_cast<unsigned char>(t_[i_]))) {
      if (t_[i_] == '\n') ++line_;
      ++i_;
    }
  }
  std::string str() {
    ++i_;
    std::string s;
    while (i_ < t_.size() && t_[i_] != '"') {
      if (t_[i_] == '\\' && i_ + 1 < t_.size()) {
        s += t_[i_ + 1];
        i_ += 2;
        continue;
      }
      s += t_[i_++];
    }
    ++i_;
    return s;
  }
  void value(const std::string& ptr) {
    ws();
    lines_.emplace(ptr, line_);
    if (i_ >= t_.size()) return;
    const char c = t_[i_];
    if (c == '{' || c == '[') {
      const char close = c == '{' ? '}' : ']';
      ++i_;
      ws();
      if (i_ < t_.size() && t_[i_] == close) {
        ++i_;
        return;
      }
      for (int n = 0; i_ < t_.size(); ++n) {
        ws();
        std::string child = ptr + "/" + std::to_string(n);
        if (c == '{') {
          const int key_line = line_;
          child = ptr + "/" + escape_token(str());
          lines_[child] = key_line;
          ws();
          ++i_;  // ':'
          const int keep = key_line;
          value(child);
          lines_[child] = keep;
        } else {
          value(child);
        }
        ws();
        if (i_ < t_.size() && t_[i_] == ',') {
          ++i_;
          continue;
        }
        ++i_;
        return;
      }
    } else if (c == '"') {
      str();
    } else {
      while (i_ < t_.size() && !std::strchr(",]} \t\r\n", t_[i_])) ++i_;
    }
  }

  const std::string& t_;
  std::size_t i_ = 0;
  int line_ = 1;
  std::map<std::string, int> lines_;
};

struct Ctx {
  std::string source;
  LineIndex index;

  std::string where(const std::string& ptr) const {
    return source + ":" + std::to_string(index.line(ptr)) + ": " + (ptr.empty() ? "/" : ptr) +
           ": ";
  }
  [[noreturn]] void fail(const std::string& ptr, const std::string& msg) const {
    throw ConfigError(where(ptr) + msg);
  }
};

// One JSON object; every key must be consumed, and reads are type checked.
class Section {
 public:
  Section(const Ctx& ctx, const json& j, std::string ptr) : ctx_(ctx), j_(j), ptr_(std::move(ptr)) {
    if (!j_.is_object()) ctx_.fail(ptr_, "expected an object");
  }

  std::string path(const std::string& key) const { return ptr_ + "/" + escape_token(key); }
  bool has(const std::string& key) const { return j_.contains(key); }
  const json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    if (!has(key)) {
      if (fallback) return *fallback;
      ctx_.fail(path(key), "missing required number");
    }
    const json& v = raw(key);
    if (!v.is_number()) ctx_.fail(path(key), "expected a number");
    return v.get<double>();
  }
  long long integer(const std::string& key, long long fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number_integer()) ctx_.fail(path(key), "expected an integer");
    return v.get<long long>();
  }
  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_boolean()) ctx_.fail(path(key), "expected true or false");
    return v.get<bool>();
  }
  std::string text(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    if (!has(key)) {
      if (fallback) return *fallback;
      ctx_.fail(path(key), "missing required string");
    }
    const json& v = raw(key);
    if (!v.is_string()) ctx_.fail(path(key), "expected a string");
    return v.get<std::string>();
  }
  template <class E>
  E choice(const std::string& key, const std::map<std::string, E>& options,
           std::optional<E> fallback = std::nullopt) {
    if (!has(key) && fallback) return *fallback;
    const std::string s = text(key);
    if (auto it = options.find(s); it != options.end()) return it->second;
    std::string names;
    for (const auto& [name, _] : options) names += (names.empty() ? "" : ", ") + name;
    ctx_.fail(path(key), "unknown value \"" + s + "\" (expected one of: " + names + ")");
  }
  std::vector<double> numbers(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_array()) ctx_.fail(path(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) ctx_.fail(path(key) + "/" + std::to_string(i), "expected a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  void finish() const {
    for (const auto& [k, _] : j_.items())
      if (!used_.count(k)) ctx_.fail(path(k), "unknown key");
  }

  // Runs a factory and prefixes its errors with the location of the blamed field.
  template <class F>
  auto guarded(F&& f) const -> decltype(f()) {
    try {
      return f();
    } catch (const ConfigError& e) {
      throw ConfigError(ctx_.where(blame(e.what())) + e.what());
    } catch (const AssumptionViolation& e) {
      throw AssumptionViolation(ctx_.where(blame(e.what())) + e.what());
    }
  }

 private:
  // The field named earliest in the message, or the section itself.
  std::string blame(const std::string& msg) const {
    std::string best;
    std::size_t best_pos = std::string::npos;
    const auto is_word = [](char ch) {
      return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_';
    };
    for (const auto& [k, _] : j_.items()) {
      for (std::size_t pos = msg.find(k); pos != std::string::npos; pos = msg.find(k, pos + 1)) {
        const std::size_t end = pos + k.size();
        if ((pos > 0 && is_word(msg[pos - 1])) || (end < msg.size() && is_word(msg[end]))) continue;
        if (pos < best_pos) {
          best = k;
          best_pos = pos;
        }
        break;
      }
    }
    return best.empty() ? ptr_ : path(best);
  }

  const Ctx& ctx_;
  const json& j_;
  std::string ptr_;
  std::set<std::string> used_;
};

void read_model(const Ctx& ctx, const json& j, ModelConfig& m) {
  Section s(ctx, j, "/model");
  m.kind = s.choice<LevyKind>("kind", {{"brownian_drift", LevyKind::BrownianDrift},
                                       {"hyper_exponential", LevyKind::HyperExponential},
                                       {"beta_family", LevyKind::BetaFamily}});
  m.sigma = s.number("sigma");
  switch (m.kind) {
    case LevyKind::BrownianDrift: m.c = s.number("c"); break;
    case LevyKind::HyperExponential: {
      m.c = s.number("c");
      const json& arr = s.raw("jumps");
      if (!arr.is_array()) ctx.fail(s.path("jumps"), "expected an array of {rate, eta}");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        Section js(ctx, arr[i], s.path("jumps") + "/" + std::to_string(i));
        m.jumps.push_back({js.number("rate"), js.number("eta")});
        js.finish();
      }
      break;
    }
    case LevyKind::BetaFamily:
      m.beta = {s.number("delta_hat"), s.number("alpha"), s.number("beta"), s.number("varpi"),
                s.number("lambda")};
      break;
  }
  s.finish();
  s.guarded([&] { return m.build(); });
}

void read_cost(const Ctx& ctx, const json& j, RunConfig& rc) {
  CostConfig& c = rc.cost;
  Section s(ctx, j, "/cost");
  c.kind = s.choice<CostKind>("kind", {{"quadratic", CostKind::Quadratic},
                                       {"linear", CostKind::Linear},
                                       {"generic", CostKind::Generic}});
  c.C_U = s.number("C_U");
  c.C_D = s.number("C_D");
  if (c.kind == CostKind::Generic) {
    c.breaks = s.numbers("breaks");
    const json& arr = s.raw("coeffs");
    if (!arr.is_array()) ctx.fail(s.path("coeffs"), "expected an array of coefficient arrays");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string p = s.path("coeffs") + "/" + std::to_string(i);
      if (!arr[i].is_array()) ctx.fail(p, "expected an array of numbers");
      std::vector<double> row;
      for (std::size_t k = 0; k < arr[i].size(); ++k) {
        if (!arr[i][k].is_number()) ctx.fail(p + "/" + std::to_string(k), "expected a number");
        row.push_back(arr[i][k].get<double>());
      }
      c.coeffs.push_back(std::move(row));
    }
  } else {
    c.alpha_minus = s.number("alpha_minus");
    c.alpha_plus = s.number("alpha_plus");
  }
  c.route = s.choice<Route>("route",
                            {{"closed_form", Route::ClosedForm}, {"quadrature", Route::Quadrature}},
                            c.kind == CostKind::Generic ? Route::Quadrature : Route::ClosedForm);
  s.finish();
  s.guarded([&] { return c.build(rc.q, rc.quad); });
}

void read_numerics(const Ctx& ctx, const json& j, RunConfig& rc) {
  Section s(ctx, j, "/numerics");
  ScaleOptions& so = rc.scale;
  so.K = static_cast<int>(s.integer("K", so.K));
  if (so.K < 1) ctx.fail(s.path("K"), "K must be >= 1");
  so.method = s.choice<CoefficientMethod>(
      "coefficient_method",
      {{"residue", CoefficientMethod::Residue}, {"product", CoefficientMethod::Product}},
      so.method);
  so.tail_correction = s.boolean("tail_correction", so.tail_correction);
  so.x_min = s.number("x_min", so.x_min);
  so.tail_tol = s.number("tail_tol", so.tail_tol);
  so.strict_truncation = s.boolean("strict_truncation", so.strict_truncation);
  so.root_tol = s.number("root_tol", so.root_tol);
  SolverOptions& sv = rc.solver;
  sv.tol_fit = s.number("tol_fit", sv.tol_fit);
  sv.b_cap_factor = s.number("b_cap", sv.b_cap_factor);
  sv.case2_eps = s.number("case2_eps", sv.case2_eps);
  sv.prescan_points = static_cast<int>(s.integer("prescan_points", sv.prescan_points));
  rc.quad.rel = s.number("quad_rel", rc.quad.rel);
  rc.quad.abs = s.number("quad_abs", rc.quad.abs);
  const auto positive = [&](const std::string& key, double v) {
    if (!(v > 0.0 && std::isfinite(v))) ctx.fail(s.path(key), key + " must be > 0");
  };
  positive("x_min", so.x_min);
  positive("tail_tol", so.tail_tol);
  positive("root_tol", so.root_tol);
  positive("tol_fit", sv.tol_fit);
  positive("b_cap", sv.b_cap_factor);
  positive("case2_eps", sv.case2_eps);
  positive("quad_rel", rc.quad.rel);
  positive("quad_abs", rc.quad.abs);
  if (sv.prescan_points < 2) ctx.fail(s.path("prescan_points"), "prescan_points must be >= 2");
  s.finish();
}

void read_sim(const Ctx& ctx, const json* j, RunConfig& rc) {
  SimConfig& sc = rc.sim;
  // Defaults keep the discarded tail below 1e-5 of the discounted total.
  sc.dt = std::min(1e-2, 1e-2 / rc.q);
  sc.horizon = std::log(1e5) / rc.q;
  if (!j) {
    sc.validate(rc.q);
    return;
  }
  Section s(ctx, *j, "/sim");
  sc.n_paths = s.integer("n_paths", sc.n_paths);
  sc.dt = s.number("dt", sc.dt);
  sc.horizon = s.number("horizon", sc.horizon);
  const long long seed = s.integer("rng_seed", static_cast<long long>(sc.rng_seed));
  if (seed < 0) ctx.fail(s.path("rng_seed"), "rng_seed must be >= 0");
  sc.rng_seed = static_cast<std::uint64_t>(seed);
  sc.small_jump_cutoff = s.number("small_jump_cutoff", sc.small_jump_cutoff);
  sc.small_jump_mode = s.choice<SmallJumpMode>(
      "small_jump_mode",
      {{"drift_compensate", SmallJumpMode::DriftCompensate},
       {"gaussian_approx", SmallJumpMode::GaussianApprox}},
      sc.small_jump_mode);
  sc.reflection = s.choice<ReflectionScheme>(
      "reflection",
      {{"endpoint", ReflectionScheme::Endpoint},
       {"brownian_bridge", ReflectionScheme::BrownianBridge}},
      sc.reflection);
  sc.histogram_bins = static_cast<int>(s.integer("histogram_bins", sc.histogram_bins));
  sc.threads = static_cast<int>(s.integer("threads", sc.threads));
  if (s.has("x0")) {
    const json& arr = s.raw("x0");
    if (!arr.is_array()) ctx.fail(s.path("x0"), "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string p = s.path("x0") + "/" + std::to_string(i);
      if (arr[i].is_number()) {
        rc.sim_x0.push_back({"", arr[i].get<double>()});
      } else if (arr[i].is_string()) {
        const std::string name = arr[i].get<std::string>();
        if (name != "a_star" && name != "b_star" && name != "mid")
          ctx.fail(p, "expected a number or one of a_star, b_star, mid");
        rc.sim_x0.push_back({name, 0.0});
      } else {
        ctx.fail(p, "expected a number or one of a_star, b_star, mid");
      }
    }
  }
  s.finish();
  s.guarded([&] {
    sc.validate(rc.q);
    return 0;
  });
}

void read_verify(const Ctx& ctx, const json& j, VerifyOptions& v) {
  Section s(ctx, j, "/verify");
  v.points_per_region = static_cast<int>(s.integer("points_per_region", v.points_per_region));
  v.span = s.number("span", v.span);
  v.span_no_upper = s.number("span_no_upper", v.span_no_upper);
  v.tol_slope = s.number("tol_slope", v.tol_slope);
  v.tol_gen = s.number("tol_gen", v.tol_gen);
  v.tol_convex = s.number("tol_convex", v.tol_convex);
  v.eps_gen = s.number("eps_gen", v.eps_gen);
  v.quad_rel = s.number("quad_rel", v.quad_rel);
  v.quad_abs = s.number("quad_abs", v.quad_abs);
  v.threads = static_cast<int>(s.integer("threads", v.threads));
  if (v.points_per_region < 2) ctx.fail(s.path("points_per_region"), "must be >= 2");
  if (v.threads < 1) ctx.fail(s.path("threads"), "must be >= 1");
  if (!(v.eps_gen > 0.0 && v.eps_gen < 1.0)) ctx.fail(s.path("eps_gen"), "must lie in (0, 1)");
  s.finish();
}

void read_curves(const Ctx& ctx, const json& j, CurvesConfig& c) {
  Section s(ctx, j, "/curves");
  c.b_points = static_cast<int>(s.integer("b_points", c.b_points));
  c.x_points = static_cast<int>(s.integer("x_points", c.x_points));
  if (s.has("x_min")) c.x_min = s.number("x_min");
  if (s.has("x_max")) c.x_max = s.number("x_max");
  if (s.has("b_max")) c.b_max = s.number("b_max");
  if (c.b_points < 2) ctx.fail(s.path("b_points"), "must be >= 2");
  if (c.x_points < 2) ctx.fail(s.path("x_points"), "must be >= 2");
  if (c.x_min && c.x_max && !(*c.x_min < *c.x_max)) ctx.fail(s.path("x_max"), "must exceed x_min");
  s.finish();
}

}  // namespace

LevyModel ModelConfig::build() const {
  switch (kind) {
    case LevyKind::BrownianDrift: return LevyModel::brownian_drift(c, sigma);
    case LevyKind::HyperExponential: return LevyModel::hyper_exponential(c, sigma, jumps);
    case LevyKind::BetaFamily: return LevyModel::beta_family(beta, sigma);
  }
  throw ConfigError("unknown model kind");
}

CostSpec CostConfig::build(double q, const QuadratureTolerances& tol) const {
  CostSpec out = [&] {
    switch (kind) {
      case CostKind::Quadratic: return CostSpec::quadratic(alpha_minus, alpha_plus, C_U, C_D, q);
      case CostKind::Linear: return CostSpec::linear(alpha_minus, alpha_plus, C_U, C_D, q);
      case CostKind::Generic:
        return CostSpec::generic(PiecewisePolynomial(breaks, coeffs), C_U, C_D, q);
    }
    throw ConfigError("unknown cost kind");
  }();
  if (route != out.route()) out = out.with_route(route);
  out.quad_tol = tol;
  return out;
}

RunConfig parse_config(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // The parser reports a byte offset; convert it to a line.
    const std::size_t upto = std::min(e.byte, text.size());
    const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + upto, '\n'));
    throw ConfigError(source + ":" + std::to_string(line) + ": invalid JSON: " + e.what());
  }
  const Ctx ctx{source, LineIndex(text)};
  Section root(ctx, doc, "");
  RunConfig rc;
  rc.q = root.number("q");
  if (!(rc.q > 0.0 && std::isfinite(rc.q))) ctx.fail("/q", "q must be > 0");
  if (root.has("numerics")) read_numerics(ctx, root.raw("numerics"), rc);
  if (!root.has("model")) ctx.fail("/model", "missing required section");
  read_model(ctx, root.raw("model"), rc.model);
  if (!root.has("cost")) ctx.fail("/cost", "missing required section");
  read_cost(ctx, root.raw("cost"), rc);
  read_sim(ctx, root.has("sim") ? &root.raw("sim") : nullptr, rc);
  if (root.has("verify")) read_verify(ctx, root.raw("verify"), rc.verify);
  if (root.has("curves")) read_curves(ctx, root.raw("curves"), rc.curves);
  if (root.has("value")) {
    Section vs(ctx, root.raw("value"), "/value");
    if (vs.has("x")) rc.value_x = vs.numbers("x");
    vs.finish();
  }
  rc.output_dir = root.text("output_dir", rc.output_dir);
  root.finish();
  return rc;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

}  // namespace levyctl

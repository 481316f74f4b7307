#include "sysid/config.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <tomlplusplus/toml.hpp>

#include "sysid/error.hpp"
#include "sysid/matrix_io.hpp"

namespace sysid {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool same_matrix(const Matrix& x, const Matrix& y) {
  return x.rows() == y.rows() && x.cols() == y.cols() && (x.size() == 0 || x == y);
}

bool same_optional_matrix(const std::optional<Matrix>& x, const std::optional<Matrix>& y) {
  if (x.has_value() != y.has_value()) return false;
  return !x || same_matrix(*x, *y);
}

bool same_vector(const Vector& x, const Vector& y) { return x.size() == y.size() && (x.size() == 0 || x == y); }

// ---------------------------------------------------------------------------
// TOML to JSON

json toml_to_json(const toml::node& node, const std::string& path) {
  if (const auto* t = node.as_table()) {
    json obj = json::object();
    for (const auto& [k, v] : *t) obj[std::string(k.str())] = toml_to_json(v, path + "." + std::string(k.str()));
    return obj;
  }
  if (const auto* a = node.as_array()) {
    json arr = json::array();
    for (const auto& v : *a) arr.push_back(toml_to_json(v, path));
    return arr;
  }
  if (const auto* v = node.as_integer()) return json(v->get());
  if (const auto* v = node.as_floating_point()) return json(v->get());
  if (const auto* v = node.as_boolean()) return json(v->get());
  if (const auto* v = node.as_string()) return json(v->get());
  const auto& src = node.source().begin;
  throw InvalidArgument("line " + std::to_string(src.line) + ": field '" + path.substr(1) +
                        "': date/time values are not supported");
}

// ---------------------------------------------------------------------------
// Validating reader that collects every problem before failing.

class Reader {
 public:
  std::vector<std::string> errors;

  void fail(const std::string& path, const std::string& msg) { errors.push_back(path + ": " + msg); }

  void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
    for (const auto& [k, v] : obj.items()) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || k == a;
      if (!ok) fail(join(path, k), "unknown key");
    }
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

  bool table(const json& obj, const std::string& key, const std::string& path, const json*& out) {
    out = nullptr;
    if (!obj.contains(key)) return false;
    const json& v = obj.at(key);
    if (!v.is_object()) {
      fail(join(path, key), "expected a table");
      return false;
    }
    out = &v;
    return true;
  }

  std::optional<double> number(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.contains(key)) return std::nullopt;
    const json& v = obj.at(key);
    if (!v.is_number()) {
      fail(join(path, key), "expected a number");
      return std::nullopt;
    }
    const double x = v.get<double>();
    if (!std::isfinite(x)) {
      fail(join(path, key), "must be finite");
      return std::nullopt;
    }
    return x;
  }

  std::optional<long long> integer(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.contains(key)) return std::nullopt;
    const json& v = obj.at(key);
    if (!v.is_number_integer()) {
      fail(join(path, key), "expected an integer");
      return std::nullopt;
    }
    return v.get<long long>();
  }

  std::optional<int> positive_int(const json& obj, const std::string& key, const std::string& path) {
    const auto v = integer(obj, key, path);
    if (!v) return std::nullopt;
    if (*v < 1 || *v > std::numeric_limits<int>::max()) {
      fail(join(path, key), "must be a positive integer");
      return std::nullopt;
    }
    return static_cast<int>(*v);
  }

  std::optional<std::uint64_t> seed(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.contains(key)) return std::nullopt;
    const json& v = obj.at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) {
      if (v.get<long long>() < 0) {
        fail(join(path, key), "must be non-negative");
        return std::nullopt;
      }
      return static_cast<std::uint64_t>(v.get<long long>());
    }
    if (v.is_string()) {
      try {
        std::size_t pos = 0;
        const std::string s = v.get<std::string>();
        const unsigned long long x = std::stoull(s, &pos, 10);
        if (pos == s.size() && !s.empty() && s[0] != '-') return x;
      } catch (...) {
      }
    }
    fail(join(path, key), "expected a non-negative integer seed");
    return std::nullopt;
  }

  std::optional<std::string> string(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.contains(key)) return std::nullopt;
    const json& v = obj.at(key);
    if (!v.is_string()) {
      fail(join(path, key), "expected a string");
      return std::nullopt;
    }
    return v.get<std::string>();
  }

  std::optional<std::vector<double>> numbers(const json& v, const std::string& path) {
    if (!v.is_array()) {
      fail(path, "expected an array of numbers");
      return std::nullopt;
    }
    std::vector<double> out;
    for (const json& e : v) {
      if (!e.is_number() || !std::isfinite(e.get<double>())) {
        fail(path, "expected an array of finite numbers");
        return std::nullopt;
      }
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::optional<Matrix> matrix(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.contains(key)) return std::nullopt;
    const std::string p = join(path, key);
    const json& v = obj.at(key);
    if (!v.is_array() || v.empty()) {
      fail(p, "expected a non-empty array of rows");
      return std::nullopt;
    }
    std::vector<std::vector<double>> rows;
    for (const json& r : v) {
      auto row = numbers(r, p);
      if (!row) return std::nullopt;
      if (row->empty() || (!rows.empty() && row->size() != rows.front().size())) {
        fail(p, "rows must be non-empty and of equal length");
        return std::nullopt;
      }
      rows.push_back(std::move(*row));
    }
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return m;
  }

  std::optional<JordanSpec> jordan(const json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) {
      fail(path, "expected a non-empty array of {eigenvalue | re, im, size} tables");
      return std::nullopt;
    }
    JordanSpec spec;
    bool ok = true;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string p = path + "[" + std::to_string(i) + "]";
      const json& e = v[i];
      if (!e.is_object()) {
        fail(p, "expected a table");
        ok = false;
        continue;
      }
      check_keys(e, p, {"eigenvalue", "re", "im", "size"});
      const auto ev = number(e, "eigenvalue", p);
      const auto re = number(e, "re", p);
      const auto im = number(e, "im", p);
      const auto size = positive_int(e, "size", p);
      if (ev && (re || im)) {
        fail(p, "give either 'eigenvalue' or 're'/'im', not both");
        ok = false;
      } else if (!ev && !re) {
        fail(p, "missing 'eigenvalue' (or 're')");
        ok = false;
      }
      if (!size) {
        if (!e.contains("size")) fail(join(p, "size"), "missing");
        ok = false;
      }
      if (ok) spec.blocks.push_back({ev ? Complex(*ev, 0.0) : Complex(*re, im.value_or(0.0)), *size});
    }
    if (!ok) return std::nullopt;
    try {
      spec.validate(true);
    } catch (const InvalidArgument& e) {
      fail(path, e.what());
      return std::nullopt;
    }
    return spec;
  }
};

std::optional<RegimeClass> regime_from_string(const std::string& s) {
  if (s == "S0") return RegimeClass::S0;
  if (s == "S1") return RegimeClass::S1;
  if (s == "S2") return RegimeClass::S2;
  return std::nullopt;
}

void read_system(Reader& r, const json& sys, SystemSource& out) {
  const std::string path = "system";
  r.check_keys(sys, path, {"A", "A_file", "B", "B_file", "x0", "jordan", "composite", "random"});
  int sources = 0;
  for (const char* k : {"A", "A_file", "jordan", "composite", "random"}) sources += sys.contains(k) ? 1 : 0;
  if (sources != 1) {
    r.fail(path, "exactly one of A, A_file, jordan, composite, random is required (found " + std::to_string(sources) + ")");
  }
  if (auto a = r.matrix(sys, "A", path)) {
    out.kind = SystemSource::Kind::matrix;
    if (a->rows() != a->cols()) r.fail("system.A", "must be square");
    out.a = std::move(*a);
  }
  if (auto f = r.string(sys, "A_file", path)) {
    out.kind = SystemSource::Kind::file;
    out.a_file = *f;
  }
  if (sys.contains("jordan")) {
    if (auto j = r.jordan(sys.at("jordan"), "system.jordan")) {
      out.kind = SystemSource::Kind::jordan;
      out.jordan = std::move(*j);
    }
  }
  const json* comp = nullptr;
  if (r.table(sys, "composite", path, comp)) {
    const std::string p = "system.composite";
    r.check_keys(*comp, p, {"blocks", "similarity_seed", "conditioning"});
    out.kind = SystemSource::Kind::composite;
    out.similarity_seed = r.seed(*comp, "similarity_seed", p).value_or(0);
    out.conditioning = r.number(*comp, "conditioning", p).value_or(1.0);
    if (out.conditioning < 1.0) r.fail(p + ".conditioning", "must be >= 1");
    if (!comp->contains("blocks") || !comp->at("blocks").is_array() || comp->at("blocks").empty()) {
      r.fail(p + ".blocks", "expected a non-empty array of {jordan, tag} tables");
    } else {
      const json& blocks = comp->at("blocks");
      for (std::size_t i = 0; i < blocks.size(); ++i) {
        const std::string bp = p + ".blocks[" + std::to_string(i) + "]";
        const json& b = blocks[i];
        if (!b.is_object()) {
          r.fail(bp, "expected a table");
          continue;
        }
        r.check_keys(b, bp, {"jordan", "tag"});
        CompositeBlock cb;
        const auto tag = r.string(b, "tag", bp);
        const auto cls = tag ? regime_from_string(*tag) : std::nullopt;
        if (!cls) r.fail(bp + ".tag", "expected one of S0, S1, S2");
        std::optional<JordanSpec> j;
        if (b.contains("jordan")) j = r.jordan(b.at("jordan"), bp + ".jordan");
        else r.fail(bp + ".jordan", "missing");
        if (cls && j) out.blocks.push_back({*j, *cls});
      }
    }
  }
  const json* rnd = nullptr;
  if (r.table(sys, "random", path, rnd)) {
    const std::string p = "system.random";
    r.check_keys(*rnd, p, {"d", "rho", "seed"});
    out.kind = SystemSource::Kind::random;
    const auto d = r.positive_int(*rnd, "d", p);
    const auto rho = r.number(*rnd, "rho", p);
    if (!d) r.fail(p + ".d", "required positive integer");
    if (!rho || !(*rho > 0.0)) r.fail(p + ".rho", "required positive number");
    out.random_d = d.value_or(0);
    out.random_rho = rho.value_or(0.0);
    out.random_seed = r.seed(*rnd, "seed", p).value_or(0);
  }
  if (auto b = r.matrix(sys, "B", path)) out.b = std::move(*b);
  if (auto f = r.string(sys, "B_file", path)) out.b_file = *f;
  if (out.b && !out.b_file.empty()) r.fail("system", "give either B or B_file, not both");
  if (sys.contains("x0")) {
    if (auto x = r.numbers(sys.at("x0"), "system.x0")) {
      out.x0 = Eigen::Map<const Vector>(x->data(), static_cast<Eigen::Index>(x->size()));
    }
  }
  if (out.kind == SystemSource::Kind::matrix && out.a.rows() == out.a.cols()) {
    if (out.b && out.b->rows() != out.a.rows()) r.fail("system.B", "row count must equal the dimension of A");
    if (out.x0.size() != 0 && out.x0.size() != out.a.rows()) r.fail("system.x0", "length must equal the dimension of A");
  }
}

void read_config(Reader& r, const json& root, Config& cfg) {
  if (!root.is_object()) {
    r.fail("<root>", "expected a table");
    return;
  }
  r.check_keys(root, "", {"seed", "delta", "trials", "T", "T_grid", "system", "noise", "constants", "bounds", "experiment"});
  if (auto s = r.seed(root, "seed", "")) cfg.seed = *s;
  if (auto d = r.number(root, "delta", "")) {
    if (!(*d > 0.0 && *d < 1.0)) r.fail("delta", "must be in (0, 1)");
    cfg.delta = *d;
  }
  cfg.trials = r.positive_int(root, "trials", "");
  if (root.contains("trials") && !cfg.trials) cfg.trials = std::nullopt;
  cfg.T = r.positive_int(root, "T", "");
  if (root.contains("T_grid")) {
    const json& g = root.at("T_grid");
    bool ok = g.is_array() && !g.empty();
    std::vector<int> grid;
    if (ok) {
      for (const json& e : g) {
        if (!e.is_number_integer() || e.get<long long>() < 1 || e.get<long long>() > std::numeric_limits<int>::max()) {
          ok = false;
          break;
        }
        grid.push_back(static_cast<int>(e.get<long long>()));
      }
    }
    if (!ok) {
      r.fail("T_grid", "expected a non-empty array of positive integers");
    } else {
      for (std::size_t i = 1; i < grid.size(); ++i) {
        if (grid[i] <= grid[i - 1]) {
          r.fail("T_grid", "must be strictly ascending");
          break;
        }
      }
      cfg.T_grid = grid;
    }
  }
  const json* t = nullptr;
  if (r.table(root, "system", "", t)) read_system(r, *t, cfg.system);
  if (r.table(root, "noise", "", t)) {
    r.check_keys(*t, "noise", {"family", "alpha", "b", "m", "delta_trunc"});
    if (auto f = r.string(*t, "family", "noise")) {
      try {
        cfg.noise.family = noise_family_from_string(*f);
      } catch (const Error&) {
        r.fail("noise.family", "expected gaussian, subweibull or none");
      }
    }
    cfg.noise.alpha = r.number(*t, "alpha", "noise").value_or(cfg.noise.alpha);
    cfg.noise.b = r.number(*t, "b", "noise").value_or(cfg.noise.b);
    cfg.noise.m = r.number(*t, "m", "noise").value_or(cfg.noise.m);
    cfg.noise.delta_trunc = r.number(*t, "delta_trunc", "noise").value_or(cfg.noise.delta_trunc);
    try {
      cfg.noise.validate();
    } catch (const Error& e) {
      r.fail("noise", e.what());
    }
  }
  if (r.table(root, "constants", "", t)) {
    r.check_keys(*t, "constants", {"C", "c", "R"});
    cfg.constants.C = r.number(*t, "C", "constants").value_or(1.0);
    cfg.constants.c = r.number(*t, "c", "constants").value_or(1.0);
    cfg.constants.R = r.number(*t, "R", "constants").value_or(1.0);
    for (const auto& [name, v] : {std::pair<const char*, double>{"C", cfg.constants.C}, {"c", cfg.constants.c}, {"R", cfg.constants.R}}) {
      if (!(v > 0.0)) r.fail(std::string("constants.") + name, "must be positive");
    }
  }
  if (r.table(root, "bounds", "", t)) {
    r.check_keys(*t, "bounds", {"psi_samples", "psi_seed", "outbox_grid"});
    cfg.bounds.psi_samples = r.positive_int(*t, "psi_samples", "bounds").value_or(cfg.bounds.psi_samples);
    if (cfg.bounds.psi_samples < 2) r.fail("bounds.psi_samples", "must be >= 2");
    cfg.bounds.psi_seed = r.seed(*t, "psi_seed", "bounds").value_or(cfg.bounds.psi_seed);
    cfg.bounds.outbox_grid = r.positive_int(*t, "outbox_grid", "bounds").value_or(cfg.bounds.outbox_grid);
  }
  if (r.table(root, "experiment", "", t)) {
    const std::string p = "experiment";
    r.check_keys(*t, p, {"a", "regular_threshold", "T_selfnorm", "T_sandwich", "T_markov", "T_lower", "lower_A", "deltas",
                         "floor_T"});
    ExperimentParams& e = cfg.experiment;
    e.a = r.number(*t, "a", p).value_or(e.a);
    if (!(e.a > 0.0)) r.fail("experiment.a", "must be positive");
    e.regular_threshold = r.number(*t, "regular_threshold", p).value_or(e.regular_threshold);
    if (!(e.regular_threshold > 0.0)) r.fail("experiment.regular_threshold", "must be positive");
    e.T_selfnorm = r.positive_int(*t, "T_selfnorm", p).value_or(e.T_selfnorm);
    e.T_sandwich = r.positive_int(*t, "T_sandwich", p).value_or(e.T_sandwich);
    e.T_markov = r.positive_int(*t, "T_markov", p).value_or(e.T_markov);
    e.T_lower = r.positive_int(*t, "T_lower", p).value_or(e.T_lower);
    e.floor_T = r.positive_int(*t, "floor_T", p).value_or(e.floor_T);
    if (auto m = r.matrix(*t, "lower_A", p)) {
      if (m->rows() != m->cols()) r.fail("experiment.lower_A", "must be square");
      e.lower_A = std::move(*m);
    }
    if (t->contains("deltas")) {
      if (auto ds = r.numbers(t->at("deltas"), "experiment.deltas")) {
        if (ds->empty()) r.fail("experiment.deltas", "must not be empty");
        for (double d : *ds) {
          if (!(d > 0.0 && d < 1.0)) {
            r.fail("experiment.deltas", "each delta must be in (0, 1)");
            break;
          }
        }
        e.deltas = *ds;
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Serialization

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json jordan_json(const JordanSpec& spec) {
  json arr = json::array();
  for (const JordanBlock& b : spec.blocks) {
    arr.push_back({{"re", b.eigenvalue.real()}, {"im", b.eigenvalue.imag()}, {"size", b.size}});
  }
  return arr;
}

json seed_json(std::uint64_t s) {
  if (s <= static_cast<std::uint64_t>(std::numeric_limits<long long>::max())) return json(static_cast<long long>(s));
  return json(std::to_string(s));
}

std::string toml_value(const json& v) {
  if (v.is_object()) {
    std::string out = "{ ";
    bool first = true;
    for (const auto& [k, e] : v.items()) {
      if (!first) out += ", ";
      first = false;
      out += k + " = " + toml_value(e);
    }
    return out + " }";
  }
  if (v.is_array()) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i > 0) out += ", ";
      out += toml_value(v[i]);
    }
    return out + "]";
  }
  if (v.is_number_float()) {
    std::string s = format_double(v.get<double>());
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
  }
  if (v.is_string()) return json(v.get<std::string>()).dump();
  return v.dump();
}

}  // namespace

bool operator==(const SystemSource& x, const SystemSource& y) {
  return x.kind == y.kind && same_matrix(x.a, y.a) && x.a_file == y.a_file && x.jordan == y.jordan &&
         x.blocks.size() == y.blocks.size() &&
         std::equal(x.blocks.begin(), x.blocks.end(), y.blocks.begin(),
                    [](const CompositeBlock& p, const CompositeBlock& q) { return p.spec == q.spec && p.tag == q.tag; }) &&
         x.similarity_seed == y.similarity_seed && x.conditioning == y.conditioning && x.random_d == y.random_d &&
         x.random_rho == y.random_rho && x.random_seed == y.random_seed && same_optional_matrix(x.b, y.b) &&
         x.b_file == y.b_file && same_vector(x.x0, y.x0);
}

bool operator==(const ExperimentParams& x, const ExperimentParams& y) {
  return x.a == y.a && x.regular_threshold == y.regular_threshold && x.T_selfnorm == y.T_selfnorm &&
         x.T_sandwich == y.T_sandwich && x.T_markov == y.T_markov && x.T_lower == y.T_lower &&
         same_optional_matrix(x.lower_A, y.lower_A) && x.deltas == y.deltas && x.floor_T == y.floor_T;
}

bool operator==(const Config& x, const Config& y) {
  return x.system == y.system && x.noise == y.noise && x.T == y.T && x.T_grid == y.T_grid && x.trials == y.trials &&
         x.seed == y.seed && x.delta == y.delta && x.constants == y.constants && x.bounds == y.bounds &&
         x.experiment == y.experiment;
}

Config parse_config_text(std::string_view text, ConfigFormat format, std::string_view origin, const fs::path& base_dir) {
  json root;
  if (format == ConfigFormat::toml) {
    try {
      const toml::table tbl = toml::parse(text, origin);
      root = toml_to_json(tbl, "");
    } catch (const toml::parse_error& e) {
      throw InvalidArgument(std::string(origin) + ":" + std::to_string(e.source().begin.line) + ":" +
                            std::to_string(e.source().begin.column) + ": " + std::string(e.description()));
    }
  } else {
    try {
      root = json::parse(text);
    } catch (const json::parse_error& e) {
      throw InvalidArgument(std::string(origin) + ": " + e.what());
    }
  }
  Config cfg;
  cfg.base_dir = base_dir;
  Reader r;
  read_config(r, root, cfg);
  if (!r.errors.empty()) {
    std::string msg = std::string(origin) + ": invalid configuration";
    for (const auto& e : r.errors) msg += "\n  - " + e;
    throw InvalidArgument(msg);
  }
  return cfg;
}

Config parse_config(const fs::path& path) {
  const std::string text = read_file(path);
  const ConfigFormat fmt = path.extension() == ".json" ? ConfigFormat::json : ConfigFormat::toml;
  return parse_config_text(text, fmt, path.string(), path.parent_path());
}

json config_to_json(const Config& c) {
  json root = json::object();
  root["seed"] = seed_json(c.seed);
  root["delta"] = c.delta;
  if (c.trials) root["trials"] = *c.trials;
  if (c.T) root["T"] = *c.T;
  if (!c.T_grid.empty()) root["T_grid"] = c.T_grid;

  const SystemSource& s = c.system;
  if (s.kind != SystemSource::Kind::none) {
    json sys = json::object();
    switch (s.kind) {
      case SystemSource::Kind::matrix: sys["A"] = matrix_json(s.a); break;
      case SystemSource::Kind::file: sys["A_file"] = s.a_file; break;
      case SystemSource::Kind::jordan: sys["jordan"] = jordan_json(s.jordan); break;
      case SystemSource::Kind::composite: {
        json blocks = json::array();
        for (const auto& b : s.blocks) blocks.push_back({{"jordan", jordan_json(b.spec)}, {"tag", std::string(to_string(b.tag))}});
        sys["composite"] = {{"blocks", blocks}, {"similarity_seed", seed_json(s.similarity_seed)}, {"conditioning", s.conditioning}};
        break;
      }
      case SystemSource::Kind::random:
        sys["random"] = {{"d", s.random_d}, {"rho", s.random_rho}, {"seed", seed_json(s.random_seed)}};
        break;
      case SystemSource::Kind::none: break;
    }
    if (s.b) sys["B"] = matrix_json(*s.b);
    if (!s.b_file.empty()) sys["B_file"] = s.b_file;
    if (s.x0.size() > 0) sys["x0"] = std::vector<double>(s.x0.data(), s.x0.data() + s.x0.size());
    root["system"] = sys;
  }
  root["noise"] = {{"family", std::string(to_string(c.noise.family))},
                   {"alpha", c.noise.alpha},
                   {"b", c.noise.b},
                   {"m", c.noise.m},
                   {"delta_trunc", c.noise.delta_trunc}};
  root["constants"] = {{"C", c.constants.C}, {"c", c.constants.c}, {"R", c.constants.R}};
  root["bounds"] = {{"psi_samples", c.bounds.psi_samples},
                    {"psi_seed", seed_json(c.bounds.psi_seed)},
                    {"outbox_grid", c.bounds.outbox_grid}};
  const ExperimentParams& e = c.experiment;
  json ex = {{"a", e.a},
             {"regular_threshold", e.regular_threshold},
             {"T_selfnorm", e.T_selfnorm},
             {"T_sandwich", e.T_sandwich},
             {"T_markov", e.T_markov},
             {"T_lower", e.T_lower},
             {"deltas", e.deltas},
             {"floor_T", e.floor_T}};
  if (e.lower_A) ex["lower_A"] = matrix_json(*e.lower_A);
  root["experiment"] = ex;
  return root;
}

std::string serialize_config_toml(const Config& c) {
  const json root = config_to_json(c);
  std::ostringstream out;
  // Scalars first, then one [table] per section.
  for (const auto& [k, v] : root.items()) {
    if (!v.is_object()) out << k << " = " << toml_value(v) << "\n";
  }
  for (const auto& [k, v] : root.items()) {
    if (!v.is_object()) continue;
    out << "\n[" << k << "]\n";
    for (const auto& [k2, v2] : v.items()) out << k2 << " = " << toml_value(v2) << "\n";
  }
  return out.str();
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

std::uint64_t config_hash(const Config& c) { return fnv1a64(config_to_json(c).dump()); }

SystemSpec build_system(const SystemSource& src, const fs::path& base_dir) {
  auto resolve = [&](const std::string& f) { return fs::path(f).is_absolute() ? fs::path(f) : base_dir / f; };
  SystemSpec spec;
  switch (src.kind) {
    case SystemSource::Kind::none: throw InvalidArgument("no system configured (add a [system] table)");
    case SystemSource::Kind::matrix: spec.a = src.a; break;
    case SystemSource::Kind::file: spec.a = read_matrix_csv(resolve(src.a_file)); break;
    case SystemSource::Kind::jordan: spec = SystemSpec::from_jordan(src.jordan); break;
    case SystemSource::Kind::composite:
      spec = build_composite(src.blocks, src.similarity_seed, src.conditioning);
      break;
    case SystemSource::Kind::random:
      spec.a = random_matrix_with_radius(src.random_d, src.random_rho, src.random_seed);
      break;
  }
  if (src.b) spec.b = *src.b;
  if (!src.b_file.empty()) spec.b = read_matrix_csv(resolve(src.b_file));
  spec.x0 = src.x0;
  spec.validate();
  return spec;
}

}  // namespace sysid

#include "parisi/io.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

namespace parisi {

using nlohmann::json;

namespace {

std::vector<double> parse_args(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw ConfigError("bad preset argument '" + item + "'");
    }
    if (item.find_first_not_of(" \t", used) != std::string::npos)
      throw ConfigError("bad preset argument '" + item + "'");
    out.push_back(v);
  }
  return out;
}

int as_int(double v, const std::string& what) {
  if (v != std::floor(v) || v < 1 || v > 64) throw ConfigError(what + " must be a small positive integer");
  return static_cast<int>(v);
}

std::string read_file(const std::string& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + file + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
}

template <typename F>
auto as_config(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.name() + ": " + e.what());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid document: ") + e.what());
  }
}

Vector vector_from(const json& a) {
  Vector v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a.at(i).get<double>();
  return v;
}

json vector_to(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

std::vector<Atom> atoms_from(const json& a, int D) {
  std::vector<Atom> atoms;
  for (const auto& x : a) {
    Atom atom{vector_from(x.at("point")), x.at("weight").get<double>()};
    if (atom.point.size() != D) throw ConfigError("atom point has the wrong dimension");
    atoms.push_back(std::move(atom));
  }
  return atoms;
}

SpinMeasure measure_from(const json& doc, int D) {
  if (doc.contains("atoms")) return SpinMeasure(D, atoms_from(doc.at("atoms"), D));
  if (!doc.contains("measure")) throw ConfigError("model needs 'atoms' or 'measure'");
  const json& m = doc.at("measure");
  if (m.is_string()) {
    const auto s = m.get<std::string>();
    if (s == "ising") return ising_measure(D);
    if (s == "potts") return potts_measure(D);
    throw ConfigError("unknown measure '" + s + "' (expected ising or potts)");
  }
  return SpinMeasure(D, atoms_from(m.at("atoms"), D));
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

ModelInstance preset_model(const std::string& text) {
  static const std::regex re(R"(^\s*([a-z_]+)\s*(?:\((.*)\))?\s*$)");
  std::smatch m;
  if (!std::regex_match(text, m, re)) throw ConfigError("unknown model '" + text + "'");
  const std::string name = m[1];
  const std::vector<double> args = m[2].matched ? parse_args(m[2]) : std::vector<double>{};
  auto want = [&](std::size_t n) {
    if (args.size() != n) throw ConfigError("preset " + name + " takes " + std::to_string(n) + " argument(s)");
  };
  return as_config([&] {
    if (name == "sk") {
      want(0);
      return sk_model();
    }
    if (name == "counterexample") {
      want(0);
      return counterexample_model();
    }
    if (name == "potts") {
      want(1);
      return potts_model(as_int(args[0], "potts D"));
    }
    if (name == "bp_sk") {
      want(1);
      return bp_sk_model(args[0]);
    }
    if (name == "ising_diag") {
      if (args.size() < 2) throw ConfigError("ising_diag takes D and at least one coefficient");
      return ising_diag_model(as_int(args[0], "ising_diag D"), {args.begin() + 1, args.end()});
    }
    throw ConfigError("unknown preset '" + name + "'");
  });
}

ModelInstance model_from_json(const json& doc) {
  return as_config([&] {
    if (!doc.is_object()) throw ConfigError("model document must be an object");
    if (doc.contains("schema") && doc.at("schema") != kModelSchema)
      throw ConfigError("unsupported model schema " + doc.at("schema").dump());
    const int D = doc.at("dimension").get<int>();
    if (D < 1) throw ConfigError("dimension must be at least 1");
    const bool formal = doc.value("formal", false);
    std::vector<Monomial> monos;
    for (const auto& m : doc.at("monomials")) {
      Monomial mono{{}, m.at("coeff").get<double>()};
      for (const auto& e : m.at("entries")) {
        if (!e.is_array() || e.size() != 2) throw ConfigError("entry must be a [row, col] pair");
        const int r = e.at(0).get<int>(), c = e.at(1).get<int>();
        if (r < 1 || r > D || c < 1 || c > D)
          throw ConfigError("entry index out of range 1.." + std::to_string(D));
        mono.entries.push_back({r - 1, c - 1});
      }
      monos.push_back(std::move(mono));
    }
    ModelInstance model{CovarianceSpec(D, std::move(monos), formal), measure_from(doc, D),
                        doc.value("t", 0.0), doc.value("name", std::string())};
    model.validate();
    return model;
  });
}

json model_to_json(const ModelInstance& model) {
  json doc;
  doc["schema"] = kModelSchema;
  doc["name"] = model.name;
  doc["dimension"] = model.covariance.dimension();
  doc["formal"] = model.covariance.formal();
  doc["t"] = model.t;
  json monos = json::array();
  for (const auto& m : model.covariance.monomials()) {
    json entries = json::array();
    for (const auto& e : m.entries) entries.push_back({e.row + 1, e.col + 1});
    monos.push_back({{"coeff", m.coeff}, {"entries", entries}});
  }
  doc["monomials"] = monos;
  std::vector<Atom> atoms = model.measure.atoms();
  std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) {
    return std::lexicographical_compare(a.point.begin(), a.point.end(), b.point.begin(), b.point.end());
  });
  json aj = json::array();
  for (const auto& a : atoms) aj.push_back({{"point", vector_to(a.point)}, {"weight", a.weight}});
  doc["atoms"] = aj;
  return doc;
}

ModelInstance parse_model_text(const std::string& text) { return model_from_json(parse_json(text)); }

ModelInstance load_model(const std::string& file_or_preset) {
  std::error_code ec;
  if (std::filesystem::is_regular_file(file_or_preset, ec)) {
    ModelInstance m = parse_model_text(read_file(file_or_preset));
    if (m.name.empty()) m.name = file_or_preset;
    return m;
  }
  try {
    return preset_model(file_or_preset);
  } catch (const ConfigError&) {
    throw ConfigError("'" + file_or_preset + "' is neither a model file nor a preset");
  }
}

std::string model_hash(const ModelInstance& model) {
  json doc = model_to_json(model);
  doc.erase("name");
  doc.erase("t");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(doc.dump())));
  return buf;
}

json path_to_json(const AnyPath& path) {
  json doc;
  json values = json::array();
  if (auto p = std::get_if<ScalarPath>(&path)) {
    doc["cone"] = "scalar";
    doc["grid"] = p->grid;
    for (double v : p->values) values.push_back(v);
  } else if (auto p = std::get_if<PairPath>(&path)) {
    doc["cone"] = "pair";
    doc["grid"] = p->grid;
    for (const auto& v : p->values) values.push_back({v(0), v(1)});
  } else {
    const auto& q = std::get<PsdPath>(path);
    doc["cone"] = "psd";
    doc["grid"] = q.grid;
    for (const auto& m : q.values) {
      json rows = json::array();
      for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_to(m.row(i).transpose()));
      values.push_back(rows);
    }
  }
  doc["values"] = values;
  return doc;
}

AnyPath path_from_json(const json& doc) {
  return as_config([&]() -> AnyPath {
    const auto cone = doc.at("cone").get<std::string>();
    const auto grid = doc.at("grid").get<std::vector<double>>();
    const json& vals = doc.at("values");
    if (cone == "scalar") {
      ScalarPath p{grid, vals.get<std::vector<double>>()};
      validate_path(p);
      return p;
    }
    if (cone == "pair") {
      PairPath p{grid, {}};
      for (const auto& v : vals) {
        if (v.size() != 2) throw ConfigError("pair values are [lambda1, lambda2]");
        p.values.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
      }
      validate_path(p);
      return p;
    }
    if (cone == "psd") {
      PsdPath p{grid, {}};
      for (const auto& v : vals) {
        const auto n = static_cast<Eigen::Index>(v.size());
        Matrix m(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
          if (static_cast<Eigen::Index>(v.at(i).size()) != n) throw ConfigError("psd values must be square");
          m.row(i) = vector_from(v.at(i)).transpose();
        }
        p.values.push_back(std::move(m));
      }
      validate_path(p);
      return p;
    }
    throw ConfigError("unknown cone '" + cone + "'");
  });
}

AnyPath load_path(const std::string& file) { return path_from_json(parse_json(read_file(file))); }

std::string path_to_csv(const AnyPath& path) {
  std::ostringstream out;
  out.precision(17);
  if (auto p = std::get_if<ScalarPath>(&path)) {
    out << "u_start,u_end,p\n";
    for (int l = 0; l < p->levels(); ++l) out << p->grid[l] << ',' << p->grid[l + 1] << ',' << p->values[l] << '\n';
  } else if (auto p = std::get_if<PairPath>(&path)) {
    out << "u_start,u_end,lambda1,lambda2\n";
    for (int l = 0; l < p->levels(); ++l)
      out << p->grid[l] << ',' << p->grid[l + 1] << ',' << p->values[l](0) << ',' << p->values[l](1) << '\n';
  } else {
    const auto& q = std::get<PsdPath>(path);
    const Eigen::Index D = q.values.empty() ? 0 : q.values.front().rows();
    out << "u_start,u_end";
    for (Eigen::Index i = 0; i < D; ++i) out << ",q" << i + 1 << i + 1;
    for (Eigen::Index i = 0; i < D; ++i)
      for (Eigen::Index j = i + 1; j < D; ++j) out << ",q" << i + 1 << j + 1;
    out << '\n';
    for (int l = 0; l < q.levels(); ++l) {
      out << q.grid[l] << ',' << q.grid[l + 1];
      for (Eigen::Index i = 0; i < D; ++i) out << ',' << q.values[l](i, i);
      for (Eigen::Index i = 0; i < D; ++i)
        for (Eigen::Index j = i + 1; j < D; ++j) out << ',' << q.values[l](i, j);
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace parisi

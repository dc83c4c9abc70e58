#include "pointlab/model_io.hpp"

#include <fstream>

#include "pointlab/errors.hpp"

namespace pointlab {

using nlohmann::json;

namespace {

double number(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key) || !obj.at(key).is_number()) {
    throw DomainError(where + "." + key + ": expected a number");
  }
  return obj.at(key).get<double>();
}

Mat2 matrix(const json& m, const std::string& where) {
  if (!m.is_array() || m.size() != 2 || !m[0].is_array() || !m[1].is_array() ||
      m[0].size() != 2 || m[1].size() != 2) {
    throw DomainError(where + ": expected a 2x2 array");
  }
  for (const auto& row : m) {
    for (const auto& v : row) {
      if (!v.is_number()) throw DomainError(where + ": non-numeric entry");
    }
  }
  return {m[0][0].get<double>(), m[0][1].get<double>(), m[1][0].get<double>(),
          m[1][1].get<double>()};
}

}  // namespace

json to_json(const DisorderMeasure& measure) {
  json atoms = json::array();
  for (const SupportAtom& a : measure.atoms()) {
    json entry;
    entry["ell"] = a.ell;
    entry["weight"] = a.weight;
    const auto& kind = a.condition.kind();
    if (const auto* t = std::get_if<TrivialCondition>(&kind)) {
      entry["kind"] = "trivial";
      entry["params"] = {{"theta", t->theta}};
    } else if (const auto* c = std::get_if<ConnectingCondition>(&kind)) {
      entry["kind"] = "connecting";
      entry["params"] = {{"theta", c->theta},
                         {"B", {{c->B.a11, c->B.a12}, {c->B.a21, c->B.a22}}}};
    } else {
      const auto& s = std::get<SeparatingCondition>(kind);
      entry["kind"] = "separating";
      entry["params"] = {{"x", s.x}, {"y", s.y}, {"w", s.w}, {"z", s.z}};
    }
    atoms.push_back(std::move(entry));
  }
  return {{"name", measure.name()}, {"atoms", std::move(atoms)}};
}

DisorderMeasure measure_from_json(const json& j) {
  if (!j.is_object()) throw DomainError("model: expected a JSON object");
  if (!j.contains("atoms") || !j.at("atoms").is_array()) {
    throw DomainError("model.atoms: expected an array");
  }
  std::string name;
  if (j.contains("name")) {
    if (!j.at("name").is_string()) throw DomainError("model.name: expected a string");
    name = j.at("name").get<std::string>();
  }
  std::vector<SupportAtom> atoms;
  const json& list = j.at("atoms");
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string where = "model.atoms[" + std::to_string(i) + "]";
    const json& entry = list[i];
    SupportAtom atom;
    atom.ell = number(entry, "ell", where);
    atom.weight = number(entry, "weight", where);
    if (!(atom.ell > 0.0)) throw DomainError(where + ".ell: must be positive");
    if (!(atom.weight > 0.0)) throw DomainError(where + ".weight: must be positive");
    if (!entry.contains("kind") || !entry.at("kind").is_string()) {
      throw DomainError(where + ".kind: expected a string");
    }
    const std::string kind = entry.at("kind").get<std::string>();
    const json params = entry.value("params", json::object());
    const std::string pwhere = where + ".params";
    if (kind == "trivial") {
      atom.condition = VertexCondition::trivial(params.contains("theta")
                                                    ? number(params, "theta", pwhere)
                                                    : 0.0);
    } else if (kind == "connecting") {
      if (!params.contains("B")) throw DomainError(pwhere + ".B: missing");
      const double theta = params.contains("theta") ? number(params, "theta", pwhere) : 0.0;
      atom.condition = VertexCondition::connecting(theta, matrix(params.at("B"), pwhere + ".B"));
    } else if (kind == "separating") {
      atom.condition = VertexCondition::separating(
          number(params, "x", pwhere), number(params, "y", pwhere), number(params, "w", pwhere),
          number(params, "z", pwhere));
    } else {
      throw DomainError(where + ".kind: unknown kind '" + kind + "'");
    }
    atoms.push_back(std::move(atom));
  }
  return DisorderMeasure(std::move(atoms), std::move(name));
}

DisorderMeasure load_measure(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("model: cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw DomainError("model: " + path.string() + ": " + e.what());
  }
  return measure_from_json(j);
}

void save_measure(const DisorderMeasure& measure, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DomainError("model: cannot write " + path.string());
  out << to_json(measure).dump(2) << '\n';
}

}  // namespace pointlab

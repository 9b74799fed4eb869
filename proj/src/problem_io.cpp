#include "occrelax/problem_io.hpp"

#include <cmath>

#include "occrelax/io_util.hpp"

namespace occrelax::io {

using nlohmann::json;

namespace {

Interval interval(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ProblemError(std::string(what) + " entries must be [lo, hi]");
  return {j[0].get<double>(), j[1].get<double>()};
}

std::vector<Interval> intervals(const json& j, const char* what) {
  if (!j.is_array()) throw ProblemError(std::string(what) + " must be an array");
  std::vector<Interval> out;
  for (const auto& e : j) out.push_back(interval(e, what));
  return out;
}

json intervalsJson(const std::vector<Interval>& v) {
  json out = json::array();
  for (const auto& i : v) out.push_back({i.lo, i.hi});
  return out;
}

double number(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number())
    throw ProblemError(std::string("missing number '") + key + "'");
  return j[key].get<double>();
}

core::Domain domainFromJson(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    throw ProblemError("domain needs a 'kind'");
  const auto kind = j["kind"].get<std::string>();
  if (kind == "interval") return core::Domain::interval(number(j, "lo"), number(j, "hi"));
  if (kind == "box") {
    if (!j.contains("sides")) throw ProblemError("box domain needs 'sides'");
    return core::Domain::box(intervals(j["sides"], "sides"));
  }
  if (kind == "disk") return core::Domain::disk(number(j, "radius"));
  if (kind == "corona") return core::Domain::corona(number(j, "inner"), number(j, "outer"));
  throw ProblemError("unknown domain kind '" + kind + "'");
}

json domainToJson(const core::Domain& d) {
  switch (d.kind()) {
    case core::DomainKind::Interval: {
      const auto b = d.boundingBox().front();
      return {{"kind", "interval"}, {"lo", b.lo}, {"hi", b.hi}};
    }
    case core::DomainKind::Box:
      return {{"kind", "box"}, {"sides", intervalsJson(d.boundingBox())}};
    case core::DomainKind::Disk:
      return {{"kind", "disk"}, {"radius", d.outerRadius()}};
    case core::DomainKind::Corona:
      return {{"kind", "corona"}, {"inner", d.innerRadius()}, {"outer", d.outerRadius()}};
  }
  throw ProblemError("unknown domain kind");
}

core::ScalarField field(const json& j, const char* key, const expr::Arity& arity) {
  if (!j.contains(key)) return core::ScalarField::constant(0.0, arity);
  if (!j[key].is_string())
    throw ProblemError(std::string("field '") + key + "' must be an expression string");
  try {
    return core::ScalarField::fromExpression(j[key].get<std::string>(), arity);
  } catch (const std::exception& e) {
    throw ProblemError(std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace

core::VariationalProblem problemFromJson(const json& j) {
  if (!j.is_object()) throw ProblemError("problem must be a JSON object");
  if (j.contains("builtin")) {
    if (!j["builtin"].is_string()) throw ProblemError("'builtin' must be a string");
    return core::builtin(j["builtin"].get<std::string>());
  }
  core::VariationalProblem p;
  p.name = j.value("name", std::string("problem"));
  if (!j.contains("domain")) throw ProblemError("missing 'domain'");
  p.domain = domainFromJson(j["domain"]);
  if (j.contains("m")) {
    if (!j["m"].is_number_integer()) throw ProblemError("'m' must be an integer");
    p.m = j["m"].get<int>();
  }
  if (!j.contains("yBox") || !j.contains("zBox"))
    throw ProblemError("missing 'yBox' or 'zBox'");
  p.yBox = intervals(j["yBox"], "yBox");
  p.zBox = intervals(j["zBox"], "zBox");
  if (!j.contains("L")) throw ProblemError("missing field 'L'");
  const auto ia = p.interiorArity(), ba = p.boundaryArity();
  p.L = field(j, "L", ia);
  p.L.convexInZ = j.value("L_convex", false);
  p.F = field(j, "F", ia);
  p.G = field(j, "G", ia);
  p.Lb = field(j, "Lb", ba);
  p.Fb = field(j, "Fb", ba);
  p.Gb = field(j, "Gb", ba);
  if (j.contains("integral")) {
    if (!j["integral"].is_array()) throw ProblemError("'integral' must be an array");
    for (const auto& c : j["integral"]) {
      core::IntegralConstraint ic;
      ic.H = field(c, "H", ia);
      const auto rel = c.value("rel", std::string("le"));
      if (rel == "le")
        ic.relation = core::Relation::LessEqualZero;
      else if (rel == "eq")
        ic.relation = core::Relation::EqualTarget;
      else
        throw ProblemError("integral 'rel' must be \"le\" or \"eq\"");
      ic.target = c.value("target", 0.0);
      p.integral.push_back(std::move(ic));
    }
  }
  if (j.contains("hint")) {
    const auto& h = j["hint"];
    p.hint.nx = h.value("nx", std::vector<int>{});
    p.hint.ny = h.value("ny", p.hint.ny);
    p.hint.nz = h.value("nz", p.hint.nz);
    p.hint.degree = h.value("degree", p.hint.degree);
    p.hint.yDegree = h.value("yDegree", p.hint.yDegree);
  }
  p.validate();
  return p;
}

core::VariationalProblem parseProblem(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ProblemError("malformed JSON at byte offset " + std::to_string(e.byte) + ": " +
                       e.what());
  }
  try {
    return problemFromJson(j);
  } catch (const json::exception& e) {
    throw ProblemError(std::string("invalid problem: ") + e.what());
  }
}

core::VariationalProblem loadProblem(const std::string& path) {
  return parseProblem(readFile(path));
}

json problemToJson(const core::VariationalProblem& p) {
  const core::ScalarField* fields[] = {&p.L, &p.F, &p.G, &p.Lb, &p.Fb, &p.Gb};
  bool textual = true;
  for (const auto* f : fields) textual = textual && !f->source().empty();
  for (const auto& c : p.integral) textual = textual && !c.H.source().empty();
  if (!textual) {
    if (p.builtinName.empty())
      throw ProblemError("problem '" + p.name + "' has fields without expression text");
    return {{"builtin", p.builtinName}};
  }
  json j;
  j["name"] = p.name;
  j["domain"] = domainToJson(p.domain);
  j["m"] = p.m;
  j["yBox"] = intervalsJson(p.yBox);
  j["zBox"] = intervalsJson(p.zBox);
  j["L"] = p.L.source();
  j["L_convex"] = p.L.convexInZ;
  j["F"] = p.F.source();
  j["G"] = p.G.source();
  j["Lb"] = p.Lb.source();
  j["Fb"] = p.Fb.source();
  j["Gb"] = p.Gb.source();
  j["integral"] = json::array();
  for (const auto& c : p.integral)
    j["integral"].push_back(
        {{"H", c.H.source()},
         {"rel", c.relation == core::Relation::LessEqualZero ? "le" : "eq"},
         {"target", c.target}});
  j["hint"] = {{"nx", p.hint.nx},
               {"ny", p.hint.ny},
               {"nz", p.hint.nz},
               {"degree", p.hint.degree},
               {"yDegree", p.hint.yDegree}};
  return j;
}

namespace {

void dumpTo(const json& j, int depth, std::string& out) {
  const std::string pad(2 * (depth + 1), ' '), close(2 * depth, ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (const auto& [key, value] : j.items()) {
        if (!first) out += ",\n";
        first = false;
        out += pad + json(key).dump() + ": ";
        dumpTo(value, depth + 1, out);
      }
      out += "\n" + close + "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",\n";
        out += pad;
        dumpTo(j[i], depth + 1, out);
      }
      out += "\n" + close + "]";
      return;
    }
    case json::value_t::number_float: {
      const double v = j.get<double>();
      out += std::isfinite(v) ? formatDouble(v) : "null";
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace

std::string dumpJson(const json& j) {
  std::string out;
  dumpTo(j, 0, out);
  out += '\n';
  return out;
}

}  // namespace occrelax::io

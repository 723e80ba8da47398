#include "pzos/io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "pzos/errors.hpp"

namespace pzos::io {

using nlohmann::json;

namespace {

json vec_to_json(const Vec& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Vec vec_from_json(const json& j, const char* key) {
  if (!j.is_array()) throw InvalidArgument(fmt::format("field '{}' must be an array", key));
  Vec v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = j[i].get<double>();
  return v;
}

void require_keys(const json& doc, std::initializer_list<const char*> allowed, const char* what) {
  if (!doc.is_object()) throw InvalidArgument(fmt::format("{} must be an object", what));
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : doc.items()) {
    if (!ok.count(key)) throw InvalidArgument(fmt::format("unknown key '{}' in {}", key, what));
  }
  for (const char* k : allowed) {
    if (!doc.contains(k)) throw InvalidArgument(fmt::format("missing key '{}' in {}", k, what));
  }
}

}  // namespace

json to_json(const routing::RoutingInstance& inst) {
  json edges = json::array();
  for (const auto& e : inst.edges) {
    edges.push_back({{"tail", e.tail}, {"head", e.head}, {"a", e.a}, {"b", e.b}});
  }
  json commodities = json::array();
  for (const auto& c : inst.commodities) {
    commodities.push_back({{"origin", c.origin},
                           {"destination", c.destination},
                           {"demand", c.demand},
                           {"sensitivity", c.sensitivity}});
  }
  return {{"kind", "routing"},      {"vertices", inst.vertices}, {"edges", edges},
          {"commodities", commodities}, {"lambda", inst.lambda},     {"seed", inst.seed}};
}

json to_json(const security::SecurityInstance& inst) {
  return {{"kind", "security"},    {"n", inst.targets()},  {"w", vec_to_json(inst.w)},
          {"v", vec_to_json(inst.v)}, {"b", vec_to_json(inst.b)}, {"cA", vec_to_json(inst.cA)},
          {"cD", vec_to_json(inst.cD)}, {"budget", inst.budget}, {"seed", inst.seed}};
}

routing::RoutingInstance routing_from_json(const json& doc) {
  require_keys(doc, {"kind", "vertices", "edges", "commodities", "lambda", "seed"}, "routing instance");
  routing::RoutingInstance inst;
  inst.vertices = doc.at("vertices").get<int>();
  for (const auto& e : doc.at("edges")) {
    require_keys(e, {"tail", "head", "a", "b"}, "edge");
    inst.edges.push_back({e.at("tail").get<int>(), e.at("head").get<int>(), e.at("a").get<double>(),
                          e.at("b").get<double>()});
  }
  for (const auto& c : doc.at("commodities")) {
    require_keys(c, {"origin", "destination", "demand", "sensitivity"}, "commodity");
    inst.commodities.push_back({c.at("origin").get<int>(), c.at("destination").get<int>(),
                                c.at("demand").get<double>(), c.at("sensitivity").get<double>()});
  }
  inst.lambda = doc.at("lambda").get<double>();
  inst.seed = doc.at("seed").get<std::uint64_t>();
  inst.validate();
  return inst;
}

security::SecurityInstance security_from_json(const json& doc) {
  require_keys(doc, {"kind", "n", "w", "v", "b", "cA", "cD", "budget", "seed"}, "security instance");
  security::SecurityInstance inst;
  inst.w = vec_from_json(doc.at("w"), "w");
  inst.v = vec_from_json(doc.at("v"), "v");
  inst.b = vec_from_json(doc.at("b"), "b");
  inst.cA = vec_from_json(doc.at("cA"), "cA");
  inst.cD = vec_from_json(doc.at("cD"), "cD");
  inst.budget = doc.at("budget").get<double>();
  inst.seed = doc.at("seed").get<std::uint64_t>();
  if (doc.at("n").get<Index>() != inst.targets()) {
    throw InvalidArgument("security instance: n does not match the vector lengths");
  }
  inst.validate();
  return inst;
}

AnyInstance instance_from_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("kind")) {
    throw InvalidArgument("instance document needs a 'kind' field");
  }
  const auto kind = doc.at("kind").get<std::string>();
  if (kind == "routing") return routing_from_json(doc);
  if (kind == "security") return security_from_json(doc);
  throw InvalidArgument(fmt::format("unknown instance kind '{}'", kind));
}

AnyInstance load_instance(const std::filesystem::path& path) {
  try {
    return instance_from_json(json::parse(read_text(path)));
  } catch (const json::exception& e) {
    throw InvalidArgument(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void save_instance(const std::filesystem::path& path, const AnyInstance& instance) {
  const json doc = std::visit([](const auto& inst) { return to_json(inst); }, instance);
  write_text(path, doc.dump(2) + "\n");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument(fmt::format("cannot write '{}'", path.string()));
  out << text;
}

std::string git_blob_hash(const std::string& bytes) {
  std::string blob = fmt::format("blob {}", bytes.size());
  blob.push_back('\0');
  blob += bytes;
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(blob.data(), blob.size(), digest, &len, EVP_sha1(), nullptr) != 1) {
    throw Error("SHA-1 digest failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

}  // namespace pzos::io

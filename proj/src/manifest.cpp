#include "json.hpp"
#include "sad/error.hpp"
#include "sad/factory.hpp"
#include "sad/scenario_io.hpp"

namespace sad {

namespace {

nlohmann::ordered_json entries_to_json(const std::vector<ManifestEntry>& entries) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& e : entries)
    arr.push_back(nlohmann::ordered_json{{"path", e.path},
                                         {"id", e.id},
                                         {"kind", std::string(to_string(e.kind))},
                                         {"seed", e.seed},
                                         {"easy", e.easy}});
  return arr;
}

std::vector<ManifestEntry> entries_from_json(const nlohmann::json& arr, const std::string& field) {
  if (!arr.is_array()) throw SchemaError(field, "expected array");
  std::vector<ManifestEntry> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string path = field + "[" + std::to_string(i) + "]";
    const auto& j = arr[i];
    try {
      ManifestEntry e;
      e.path = j.at("path").get<std::string>();
      e.id = j.value("id", std::string{});
      const auto kind = parse_kind(j.value("kind", std::string{"Other"}));
      if (!kind) throw SchemaError(path + ".kind", "unknown scenario kind");
      e.kind = *kind;
      e.seed = j.value("seed", std::uint64_t{0});
      e.easy = j.value("easy", false);
      out.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw SchemaError(path, ex.what());
    }
  }
  return out;
}

}  // namespace

std::string manifest_to_json(const Manifest& m) {
  nlohmann::ordered_json doc;
  doc["schema_version"] = 1;
  doc["seed"] = m.seed ? nlohmann::ordered_json(*m.seed) : nlohmann::ordered_json(nullptr);
  doc["train"] = entries_to_json(m.train);
  doc["test"] = entries_to_json(m.test);
  return doc.dump(1) + "\n";
}

Manifest manifest_from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("<root>", std::string("parse error: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("<root>", "expected object");
  Manifest m;
  if (doc.contains("seed") && !doc["seed"].is_null()) m.seed = doc["seed"].get<std::uint64_t>();
  if (doc.contains("train")) m.train = entries_from_json(doc["train"], "train");
  if (doc.contains("test")) m.test = entries_from_json(doc["test"], "test");
  return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
  return manifest_from_json(read_text_file(path));
}

std::vector<std::filesystem::path> split_paths(const std::filesystem::path& manifest_path, bool test) {
  const Manifest m = load_manifest(manifest_path);
  const auto dir = manifest_path.parent_path();
  std::vector<std::filesystem::path> out;
  for (const auto& e : test ? m.test : m.train) out.push_back(dir / e.path);
  return out;
}

std::vector<std::filesystem::path> evaluation_paths(const std::filesystem::path& manifest_path) {
  const Manifest m = load_manifest(manifest_path);
  const auto dir = manifest_path.parent_path();
  std::vector<std::filesystem::path> out;
  for (const auto& e : m.test.empty() ? m.train : m.test) out.push_back(dir / e.path);
  return out;
}

std::vector<std::shared_ptr<const Scenario>> load_scenarios(const std::vector<std::filesystem::path>& paths) {
  std::vector<std::shared_ptr<const Scenario>> out;
  out.reserve(paths.size());
  for (const auto& p : paths) {
    try {
      out.push_back(std::make_shared<const Scenario>(load_scenario_file(p)));
    } catch (const SchemaError& e) {
      throw SchemaError(p.string(), e.what());
    }
  }
  return out;
}

}  // namespace sad

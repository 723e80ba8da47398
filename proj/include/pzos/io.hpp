#pragma once

#include <filesystem>
#include <string>
#include <variant>

#include <nlohmann/json_fwd.hpp>

#include "pzos/routing.hpp"
#include "pzos/security.hpp"

namespace pzos::io {

/// Instance documents are JSON objects tagged by "kind". Reals are written
/// in shortest round-trip form, so loading a saved instance gives the same
/// bits back.
nlohmann::json to_json(const routing::RoutingInstance& instance);
nlohmann::json to_json(const security::SecurityInstance& instance);

routing::RoutingInstance routing_from_json(const nlohmann::json& doc);
security::SecurityInstance security_from_json(const nlohmann::json& doc);

using AnyInstance = std::variant<routing::RoutingInstance, security::SecurityInstance>;

AnyInstance instance_from_json(const nlohmann::json& doc);
AnyInstance load_instance(const std::filesystem::path& path);
void save_instance(const std::filesystem::path& path, const AnyInstance& instance);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Git blob id: SHA-1 of "blob <size>\0" followed by the bytes.
std::string git_blob_hash(const std::string& bytes);

}  // namespace pzos::io

#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

namespace heis {

/// JSON text with every floating-point number printed as %.17g, keys in the
/// order nlohmann::ordered_json keeps them; non-finite numbers become null.
std::string dump_json(const nlohmann::ordered_json& value, int indent = 2);

/// Writes dump_json(value) plus a trailing newline; throws Error on I/O failure.
void write_json_file(const std::string& path, const nlohmann::ordered_json& value);

/// %.17g formatting used by every emitted file.
std::string format_double(double x);

}  // namespace heis

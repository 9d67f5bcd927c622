#pragma once

#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace portopt {

/// Fixed 12-significant-digit rendering used by every emitted file, so a
/// repeated run produces byte-identical output.
std::string format_number(double v);

/// Minimal ordered JSON value for report emission.  (Config *parsing* uses a
/// full JSON library; emission goes through this writer to keep key order
/// and number formatting deterministic.)
class JsonValue {
public:
    using Array = std::vector<JsonValue>;

    static JsonValue object();
    static JsonValue array();
    static JsonValue str(std::string s);
    static JsonValue num(double v);
    static JsonValue integer(long long v);
    static JsonValue boolean(bool b);

    JsonValue& set(const std::string& key, JsonValue v);  // objects only
    JsonValue& push(JsonValue v);                         // arrays only

    std::string dump(int indent = 2) const;

private:
    struct Object {
        std::vector<std::pair<std::string, JsonValue>> items;
    };
    std::variant<std::monostate, bool, long long, double, std::string,
                 std::shared_ptr<Array>, std::shared_ptr<Object>>
        value_;
    void dump_to(std::string& out, int indent, int depth) const;
};

}  // namespace portopt

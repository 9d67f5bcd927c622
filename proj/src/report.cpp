#include "portopt/report.hpp"

#include <cmath>
#include <cstdio>

#include "portopt/errors.hpp"

namespace portopt {

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

JsonValue JsonValue::object() {
    JsonValue v;
    v.value_ = std::make_shared<Object>();
    return v;
}
JsonValue JsonValue::array() {
    JsonValue v;
    v.value_ = std::make_shared<Array>();
    return v;
}
JsonValue JsonValue::str(std::string s) {
    JsonValue v;
    v.value_ = std::move(s);
    return v;
}
JsonValue JsonValue::num(double d) {
    JsonValue v;
    v.value_ = d;
    return v;
}
JsonValue JsonValue::integer(long long i) {
    JsonValue v;
    v.value_ = i;
    return v;
}
JsonValue JsonValue::boolean(bool b) {
    JsonValue v;
    v.value_ = b;
    return v;
}

JsonValue& JsonValue::set(const std::string& key, JsonValue v) {
    auto* obj = std::get_if<std::shared_ptr<Object>>(&value_);
    if (!obj) throw InvalidArgument("JsonValue::set on non-object");
    (*obj)->items.emplace_back(key, std::move(v));
    return *this;
}

JsonValue& JsonValue::push(JsonValue v) {
    auto* arr = std::get_if<std::shared_ptr<Array>>(&value_);
    if (!arr) throw InvalidArgument("JsonValue::push on non-array");
    (*arr)->push_back(std::move(v));
    return *this;
}

namespace {
void append_escaped(std::string& out, const std::string& s) {
    out += '"';
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    out += '"';
}
}  // namespace

void JsonValue::dump_to(std::string& out, int indent, int depth) const {
    const std::string pad(static_cast<std::size_t>(indent) * (depth + 1), ' ');
    const std::string close_pad(static_cast<std::size_t>(indent) * depth, ' ');
    if (std::holds_alternative<std::monostate>(value_)) {
        out += "null";
    } else if (const bool* b = std::get_if<bool>(&value_)) {
        out += *b ? "true" : "false";
    } else if (const long long* i = std::get_if<long long>(&value_)) {
        out += std::to_string(*i);
    } else if (const double* d = std::get_if<double>(&value_)) {
        out += format_number(*d);
    } else if (const std::string* s = std::get_if<std::string>(&value_)) {
        append_escaped(out, *s);
    } else if (const auto* arr = std::get_if<std::shared_ptr<Array>>(&value_)) {
        if ((*arr)->empty()) {
            out += "[]";
            return;
        }
        out += "[\n";
        for (std::size_t i = 0; i < (*arr)->size(); ++i) {
            out += pad;
            (**arr)[i].dump_to(out, indent, depth + 1);
            if (i + 1 < (*arr)->size()) out += ',';
            out += '\n';
        }
        out += close_pad + "]";
    } else if (const auto* obj = std::get_if<std::shared_ptr<Object>>(&value_)) {
        if ((*obj)->items.empty()) {
            out += "{}";
            return;
        }
        out += "{\n";
        for (std::size_t i = 0; i < (*obj)->items.size(); ++i) {
            out += pad;
            append_escaped(out, (*obj)->items[i].first);
            out += ": ";
            (*obj)->items[i].second.dump_to(out, indent, depth + 1);
            if (i + 1 < (*obj)->items.size()) out += ',';
            out += '\n';
        }
        out += close_pad + "}";
    }
}

std::string JsonValue::dump(int indent) const {
    std::string out;
    dump_to(out, indent, 0);
    return out;
}

}  // namespace portopt

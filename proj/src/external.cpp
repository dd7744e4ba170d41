#include "lx/external.hpp"

#include <stdexcept>

#include "lx/ops.hpp"

namespace lx {

namespace {

[[noreturn]] void shape(const std::string& path, const std::string& msg) {
    throw std::invalid_argument((path.empty() ? std::string("$") : path) + ": " + msg);
}

class FromJson {
public:
    explicit FromJson(const TypeUniverse& u) : u_(u) {}

    Value value(const nlohmann::json& j, const Type& t, const std::string& path) {
        switch (t.kind()) {
            case TypeKind::Never: shape(path, "no value has type Never");
            case TypeKind::None:
                if (!j.is_null()) shape(path, "expected null");
                return Value::none();
            case TypeKind::Bool:
                if (!j.is_boolean()) shape(path, "expected a boolean");
                return Value::boolean(j.get<bool>());
            case TypeKind::Nat:
            case TypeKind::Int:
            case TypeKind::BigNat:
            case TypeKind::BigInt:
            case TypeKind::Decimal:
            case TypeKind::Rational:
            case TypeKind::Float: return number(j, t, path);
            case TypeKind::String:
            case TypeKind::ASCIIString:
                if (!j.is_string()) shape(path, "expected a string");
                return Value::string(j.get<std::string>());
            case TypeKind::StringOf:
                if (!j.is_string()) shape(path, "expected a string");
                return Value::string_of(t.name(), j.get<std::string>());
            case TypeKind::Typedecl: {
                const auto* td = u_.typedecl(t.name());
                if (!td) shape(path, "unknown typedecl " + t.name());
                return Value::typedecl(t.name(), value(j, td->base, path));
            }
            case TypeKind::Tuple: {
                if (!j.is_array() || j.size() != t.args().size()) {
                    shape(path, "expected an array of " + std::to_string(t.args().size()) + " elements");
                }
                std::vector<Value> xs;
                for (std::size_t i = 0; i < t.args().size(); ++i) {
                    xs.push_back(value(j[i], t.args()[i], path + "[" + std::to_string(i) + "]"));
                }
                return Value::tuple(t, std::move(xs));
            }
            case TypeKind::Record: {
                if (!j.is_object() || j.size() != t.args().size()) shape(path, "expected an object with fields of " + t.str());
                std::vector<Value> xs;
                for (std::size_t i = 0; i < t.args().size(); ++i) {
                    const auto& n = t.field_names()[i];
                    if (!j.contains(n)) shape(path, "missing field " + n);
                    xs.push_back(value(j[n], t.args()[i], path + "." + n));
                }
                return Value::record(t, std::move(xs));
            }
            case TypeKind::List: {
                if (!j.is_array()) shape(path, "expected an array");
                std::vector<Value> xs;
                for (std::size_t i = 0; i < j.size(); ++i) {
                    xs.push_back(value(j[i], t.args()[0], path + "[" + std::to_string(i) + "]"));
                }
                return Value::list(t, std::move(xs));
            }
            case TypeKind::Map: {
                if (!j.is_array()) shape(path, "expected an array of [key, value] pairs");
                std::vector<std::pair<Value, Value>> es;
                for (std::size_t i = 0; i < j.size(); ++i) {
                    auto p = path + "[" + std::to_string(i) + "]";
                    if (!j[i].is_array() || j[i].size() != 2) shape(p, "expected a [key, value] pair");
                    es.emplace_back(value(j[i][0], t.args()[0], p + "[0]"), value(j[i][1], t.args()[1], p + "[1]"));
                }
                for (std::size_t a = 0; a < es.size(); ++a) {
                    for (std::size_t b = a + 1; b < es.size(); ++b) {
                        if (value_equal(es[a].first, es[b].first)) shape(path, "duplicate map key");
                    }
                }
                return Value::map(t, std::move(es));
            }
            case TypeKind::Ok:
            case TypeKind::Err: {
                const char* tag = t.kind() == TypeKind::Ok ? "Ok" : "Err";
                if (!j.is_object() || !j.contains("value")) shape(path, std::string("expected an ") + tag + " object");
                if (j.contains("$type") && j["$type"] != tag) shape(path, std::string("expected $type ") + tag);
                return Value::entity(t, {value(j["value"], t.args()[0], path + ".value")});
            }
            case TypeKind::Nominal: return nominal(j, t, path);
            case TypeKind::Union: return union_value(j, t, path);
        }
        shape(path, "unsupported type " + t.str());
    }

private:
    const TypeUniverse& u_;

    Value number(const nlohmann::json& j, const Type& t, const std::string& path) {
        std::string text;
        if (j.is_number_integer()) {
            text = j.is_number_unsigned() ? std::to_string(j.get<std::uint64_t>()) : std::to_string(j.get<std::int64_t>());
        } else if (j.is_number_float()) {
            if (t.is_integral()) shape(path, "expected an integer");
            text = j.dump();
        } else if (j.is_string() && t.kind() != TypeKind::Float) {
            text = j.get<std::string>();
        } else {
            shape(path, "expected a number for " + t.str());
        }
        try {
            return numeric_from_text(t, text);
        } catch (const std::exception&) {
            shape(path, "value " + text + " does not fit " + t.str());
        }
    }

    Value nominal(const nlohmann::json& j, const Type& t, const std::string& path) {
        if (!j.is_object()) shape(path, "expected an object");
        std::string name = t.name();
        if (j.contains("$type")) {
            if (!j["$type"].is_string()) shape(path, "$type must be a string");
            std::string dyn = j["$type"].get<std::string>();
            if (!u_.is_entity(dyn) || !u_.provides(dyn, name)) shape(path, dyn + " is not an entity of type " + name);
            name = dyn;
        } else if (!u_.is_entity(name)) {
            auto ents = u_.entities_providing(name);
            if (ents.size() != 1) shape(path, "object for concept " + name + " needs a $type member");
            name = ents[0];
        }
        const auto* info = u_.nominal(name);
        std::size_t extra = j.contains("$type") ? 1 : 0;
        if (j.size() != info->fields.size() + extra) shape(path, "expected exactly the fields of " + name);
        std::vector<Value> xs;
        for (const auto& f : info->fields) {
            if (!j.contains(f.name)) shape(path, "missing field " + f.name);
            xs.push_back(value(j[f.name], f.type, path + "." + f.name));
        }
        return Value::entity(Type::nominal(name), std::move(xs));
    }

    Value union_value(const nlohmann::json& j, const Type& t, const std::string& path) {
        std::string first_error;
        for (const auto& m : t.args()) {
            try {
                return value(j, m, path);
            } catch (const std::invalid_argument& e) {
                if (first_error.empty()) first_error = e.what();
            }
        }
        shape(path, "no member of " + t.str() + " matches (" + first_error + ")");
    }
};

nlohmann::json number_json(const Value& v) {
    switch (v.kind()) {
        case ValueKind::Nat: return v.as_nat();
        case ValueKind::Int: return v.as_int();
        case ValueKind::Float: return v.as_float();
        case ValueKind::BigNat:
        case ValueKind::BigInt: return v.as_big().str();
        case ValueKind::Decimal: return format_decimal(v.as_big());
        case ValueKind::Rational: {
            auto s = to_string(v);
            return s.substr(0, s.size() - 1);
        }
        default: return nullptr;
    }
}

}  // namespace

Value value_from_json(const nlohmann::json& j, const Type& t, const TypeUniverse& u) { return FromJson(u).value(j, t, ""); }

nlohmann::json value_to_json(const Value& v, const Type& t, const TypeUniverse& u) {
    switch (v.kind()) {
        case ValueKind::None: return nullptr;
        case ValueKind::Bool: return v.as_bool();
        case ValueKind::String:
        case ValueKind::StringOf: return v.as_string();
        case ValueKind::Typedecl: return value_to_json(v.base(), u.typedecl_base(v.name()), u);
        case ValueKind::Tuple: {
            auto out = nlohmann::json::array();
            for (std::size_t i = 0; i < v.items().size(); ++i) out.push_back(value_to_json(v.items()[i], v.type().args()[i], u));
            return out;
        }
        case ValueKind::Record: {
            auto out = nlohmann::json::object();
            for (std::size_t i = 0; i < v.items().size(); ++i) {
                out[v.type().field_names()[i]] = value_to_json(v.items()[i], v.type().args()[i], u);
            }
            return out;
        }
        case ValueKind::Entity: {
            auto out = nlohmann::json::object();
            const Type& dyn = v.type();
            if (dyn.kind() == TypeKind::Ok || dyn.kind() == TypeKind::Err) {
                out["$type"] = dyn.kind() == TypeKind::Ok ? "Ok" : "Err";
                out["value"] = value_to_json(v.items()[0], dyn.args()[0], u);
                return out;
            }
            if (t != dyn) out["$type"] = dyn.name();
            const auto* info = u.nominal(dyn.name());
            for (std::size_t i = 0; i < v.items().size(); ++i) {
                out[info->fields[i].name] = value_to_json(v.items()[i], info->fields[i].type, u);
            }
            return out;
        }
        case ValueKind::List: {
            auto out = nlohmann::json::array();
            for (const auto& x : v.items()) out.push_back(value_to_json(x, v.type().args()[0], u));
            return out;
        }
        case ValueKind::Map: {
            auto out = nlohmann::json::array();
            for (std::size_t i = 0; i < v.map_size(); ++i) {
                out.push_back({value_to_json(v.map_key(i), v.type().args()[0], u),
                               value_to_json(v.map_value(i), v.type().args()[1], u)});
            }
            return out;
        }
        default: return number_json(v);
    }
}

std::vector<Value> args_from_json(const std::string& text, const std::vector<Type>& params, const TypeUniverse& u) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_array() || j.size() != params.size()) {
        throw std::invalid_argument("expected a JSON array of " + std::to_string(params.size()) + " arguments");
    }
    std::vector<Value> out;
    for (std::size_t i = 0; i < params.size(); ++i) out.push_back(FromJson(u).value(j[i], params[i], "$[" + std::to_string(i) + "]"));
    return out;
}

}  // namespace lx

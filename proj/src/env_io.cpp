#include "riskplan/env_io.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace riskplan {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& path) {
    for (const auto& [key, _] : obj.items())
        if (!allowed.count(key)) throw EnvParseError(path + "/" + key, "unknown field");
}

double require_number(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.contains(key)) throw EnvParseError(path, "missing field '" + key + "'");
    const auto& v = obj.at(key);
    if (!v.is_number()) throw EnvParseError(path + "/" + key, "expected a number");
    return v.get<double>();
}

int require_exponent(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.contains(key)) throw EnvParseError(path, "missing field '" + key + "'");
    const auto& v = obj.at(key);
    if (!v.is_number_integer() || v.get<long>() < 0)
        throw EnvParseError(path + "/" + key, "expected a non-negative integer exponent");
    return v.get<int>();
}

ParamDistribution parse_dist(const json& d, const std::string& path) {
    if (!d.is_object()) throw EnvParseError(path, "expected an object");
    if (!d.contains("type")) throw EnvParseError(path, "missing field 'type'");
    const std::string type = d.at("type").get<std::string>();
    try {
        if (type == "uniform") {
            reject_unknown(d, {"type", "a", "b"}, path);
            return ParamDistribution::uniform(require_number(d, "a", path),
                                              require_number(d, "b", path));
        }
        if (type == "gaussian") {
            reject_unknown(d, {"type", "mu", "var"}, path);
            return ParamDistribution::gaussian(require_number(d, "mu", path),
                                               require_number(d, "var", path));
        }
        if (type == "beta") {
            reject_unknown(d, {"type", "alpha", "beta"}, path);
            return ParamDistribution::beta(require_number(d, "alpha", path),
                                           require_number(d, "beta", path));
        }
    } catch (const std::invalid_argument& e) {
        throw EnvParseError(path, e.what());
    }
    throw EnvParseError(path + "/type", "unknown distribution type '" + type + "'");
}

}  // namespace

Environment parse_env_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw EnvParseError("", std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw EnvParseError("", "expected a JSON object");
    reject_unknown(doc, {"bounds", "obstacles"}, "");

    Environment env;
    if (!doc.contains("bounds")) throw EnvParseError("", "missing field 'bounds'");
    const auto& b = doc.at("bounds");
    reject_unknown(b, {"x", "y"}, "/bounds");
    auto axis = [&](const char* key, double& lo, double& hi) {
        const std::string path = std::string("/bounds/") + key;
        if (!b.contains(key)) throw EnvParseError("/bounds", std::string("missing field '") + key + "'");
        const auto& arr = b.at(key);
        if (!arr.is_array() || arr.size() != 2 || !arr[0].is_number() || !arr[1].is_number())
            throw EnvParseError(path, "expected [min, max]");
        lo = arr[0].get<double>();
        hi = arr[1].get<double>();
        if (!(lo < hi)) throw EnvParseError(path, "min must be less than max");
    };
    axis("x", env.bounds.xmin, env.bounds.xmax);
    axis("y", env.bounds.ymin, env.bounds.ymax);

    if (!doc.contains("obstacles")) throw EnvParseError("", "missing field 'obstacles'");
    const auto& obstacles = doc.at("obstacles");
    if (!obstacles.is_array()) throw EnvParseError("/obstacles", "expected an array");
    for (size_t i = 0; i < obstacles.size(); ++i) {
        const std::string path = "/obstacles/" + std::to_string(i);
        const auto& ob = obstacles[i];
        if (!ob.is_object()) throw EnvParseError(path, "expected an object");
        reject_unknown(ob, {"name", "terms", "dist"}, path);
        UncertainObstacle out;
        if (!ob.contains("name") || !ob.at("name").is_string())
            throw EnvParseError(path, "missing string field 'name'");
        out.name = ob.at("name").get<std::string>();
        if (!ob.contains("terms") || !ob.at("terms").is_array() || ob.at("terms").empty())
            throw EnvParseError(path, "missing non-empty array field 'terms'");
        std::vector<TriPoly::Term> terms;
        for (size_t t = 0; t < ob.at("terms").size(); ++t) {
            const std::string tpath = path + "/terms/" + std::to_string(t);
            const auto& term = ob.at("terms")[t];
            if (!term.is_object()) throw EnvParseError(tpath, "expected an object");
            reject_unknown(term, {"x", "y", "w", "c"}, tpath);
            Monomial<3> m;
            m.e = {require_exponent(term, "x", tpath), require_exponent(term, "y", tpath),
                   require_exponent(term, "w", tpath)};
            terms.push_back({m, require_number(term, "c", tpath)});
        }
        out.poly = TriPoly(std::move(terms));
        if (!ob.contains("dist")) throw EnvParseError(path, "missing field 'dist'");
        out.dist = parse_dist(ob.at("dist"), path + "/dist");
        env.obstacles.push_back(std::move(out));
    }
    try {
        env.validate();
    } catch (const std::invalid_argument& e) {
        throw EnvParseError("", e.what());
    }
    return env;
}

Environment load_env(const std::string& file) {
    std::ifstream f(file);
    if (!f) throw EnvParseError(file, "cannot open file");
    std::ostringstream ss;
    ss << f.rdbuf();
    try {
        return parse_env_json(ss.str());
    } catch (const EnvParseError& e) {
        throw EnvParseError(file, e.what());
    }
}

std::string env_to_json(const Environment& env) {
    ordered_json doc;
    doc["bounds"]["x"] = {env.bounds.xmin, env.bounds.xmax};
    doc["bounds"]["y"] = {env.bounds.ymin, env.bounds.ymax};
    doc["obstacles"] = ordered_json::array();
    for (const auto& ob : env.obstacles) {
        ordered_json o;
        o["name"] = ob.name;
        o["terms"] = ordered_json::array();
        for (const auto& t : ob.poly.terms()) {
            ordered_json term;
            term["x"] = t.m.e[0];
            term["y"] = t.m.e[1];
            term["w"] = t.m.e[2];
            term["c"] = t.c;
            o["terms"].push_back(term);
        }
        std::visit(
            [&o](const auto& d) {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, UniformDist>) {
                    o["dist"] = {{"type", "uniform"}, {"a", d.a}, {"b", d.b}};
                } else if constexpr (std::is_same_v<T, GaussianDist>) {
                    o["dist"] = {{"type", "gaussian"}, {"mu", d.mu}, {"var", d.var}};
                } else {
                    o["dist"] = {{"type", "beta"}, {"alpha", d.alpha}, {"beta", d.beta}};
                }
            },
            ob.dist.law());
        doc["obstacles"].push_back(std::move(o));
    }
    return doc.dump(2) + "\n";
}

void save_env(const Environment& env, const std::string& file) {
    std::ofstream f(file);
    if (!f) throw std::runtime_error("cannot open for writing: " + file);
    f << env_to_json(env);
}

}  // namespace riskplan

#include "cota/model_io.hpp"

#include <fstream>
#include <cstring>
#include <map>
#include <sstream>

#include "json.hpp"

namespace cota {

namespace {

using nlohmann::json;

// Maps JSON pointers to the 1-based line where the value starts. Runs on text
// that already parsed, so it does no error checking of its own.
class LineScanner {
public:
    explicit LineScanner(const std::string& text) : s_(text) { value(""); }
    int line(const std::string& ptr) const {
        std::string p = ptr;
        while (true) {
            auto it = lines_.find(p);
            if (it != lines_.end()) return it->second;
            auto cut = p.rfind('/');
            if (cut == std::string::npos) return 1;
            p = p.substr(0, cut);
        }
    }

private:
    void ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) {
            if (s_[pos_] == '\n') ++line_;
            ++pos_;
        }
    }
    std::string string_token() {
        std::string out;
        ++pos_;
        while (pos_ < s_.size() && s_[pos_] != '"') {
            if (s_[pos_] == '\\') ++pos_;
            if (pos_ < s_.size()) out += s_[pos_++];
        }
        ++pos_;
        return out;
    }
    static std::string escape(const std::string& key) {
        std::string out;
        for (char c : key) {
            if (c == '~') out += "~0";
            else if (c == '/') out += "~1";
            else out += c;
        }
        return out;
    }
    void value(const std::string& ptr) {
        ws();
        if (pos_ >= s_.size()) return;
        lines_[ptr] = line_;
        char c = s_[pos_];
        if (c == '{') {
            ++pos_;
            ws();
            while (pos_ < s_.size() && s_[pos_] != '}') {
                std::string key = string_token();
                ws();
                ++pos_;  // ':'
                value(ptr + "/" + escape(key));
                ws();
                if (s_[pos_] == ',') ++pos_;
                ws();
            }
            ++pos_;
        } else if (c == '[') {
            ++pos_;
            ws();
            for (int k = 0; pos_ < s_.size() && s_[pos_] != ']'; ++k) {
                value(ptr + "/" + std::to_string(k));
                ws();
                if (s_[pos_] == ',') ++pos_;
                ws();
            }
            ++pos_;
        } else if (c == '"') {
            string_token();
        } else {
            while (pos_ < s_.size() && !std::strchr(",]} \t\r\n", s_[pos_])) ++pos_;
        }
    }

    const std::string& s_;
    std::size_t pos_ = 0;
    int line_ = 1;
    std::map<std::string, int> lines_;
};

struct Ctx {
    std::string source;
    LineScanner lines;

    [[noreturn]] void fail(ErrorKind kind, const std::string& ptr, const std::string& msg) const {
        throw Error(kind, source + ":" + std::to_string(lines.line(ptr)) + ": " + msg);
    }
};

std::string label_of(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

const json& member(const Ctx& ctx, const json& obj, const std::string& key, const std::string& ptr) {
    if (!obj.is_object() || !obj.contains(key))
        ctx.fail(ErrorKind::ParseError, ptr, "missing key '" + key + "'");
    return obj.at(key);
}

Intervention parse_intervention(const Ctx& ctx, const json& j, const std::vector<VariableSpec>& vars,
                                const std::string& ptr) {
    if (!j.is_object()) ctx.fail(ErrorKind::ParseError, ptr, "intervention must be an object");
    Intervention iv;
    for (const auto& [name, val] : j.items()) {
        int v = find_variable(vars, name);
        if (v < 0) ctx.fail(ErrorKind::UnknownVariable, ptr + "/" + name, "unknown variable '" + name + "'");
        int x = find_value(vars[v], label_of(val));
        if (x < 0)
            ctx.fail(ErrorKind::ValueOutOfDomain, ptr + "/" + name,
                     "value '" + label_of(val) + "' not in domain of '" + name + "'");
        iv.assignments[name] = x;
    }
    return iv;
}

}  // namespace

ModelFile parse_model(const std::string& text, const std::string& source) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        // byte offset -> line
        std::size_t upto = std::min<std::size_t>(e.byte, text.size());
        int line = 1;
        for (std::size_t i = 0; i + 1 < upto; ++i)
            if (text[i] == '\n') ++line;
        throw Error(ErrorKind::ParseError, source + ":" + std::to_string(line) + ": " + e.what());
    }
    Ctx ctx{source, LineScanner(text)};

    CausalDag dag;
    const json& jv = member(ctx, root, "variables", "");
    if (!jv.is_array() || jv.empty()) ctx.fail(ErrorKind::InvalidModel, "/variables", "variables must be a non-empty array");
    for (std::size_t k = 0; k < jv.size(); ++k) {
        std::string ptr = "/variables/" + std::to_string(k);
        const json& name = member(ctx, jv[k], "name", ptr);
        const json& dom = member(ctx, jv[k], "domain", ptr);
        if (!name.is_string()) ctx.fail(ErrorKind::ParseError, ptr + "/name", "name must be a string");
        if (!dom.is_array() || dom.empty())
            ctx.fail(ErrorKind::InvalidModel, ptr + "/domain", "domain must be a non-empty array");
        VariableSpec vs{name.get<std::string>(), {}};
        for (const auto& x : dom) vs.domain.push_back(label_of(x));
        if (find_variable(dag.variables, vs.name) >= 0)
            ctx.fail(ErrorKind::InvalidModel, ptr + "/name", "duplicate variable '" + vs.name + "'");
        dag.variables.push_back(std::move(vs));
    }
    const auto& vars = dag.variables;
    dag.parents.resize(vars.size());

    if (root.contains("edges")) {
        const json& je = root["edges"];
        for (std::size_t k = 0; k < je.size(); ++k) {
            std::string ptr = "/edges/" + std::to_string(k);
            if (!je[k].is_array() || je[k].size() != 2 || !je[k][0].is_string() || !je[k][1].is_string())
                ctx.fail(ErrorKind::ParseError, ptr, "edge must be [parent, child]");
            std::string from = je[k][0], to = je[k][1];
            int f = find_variable(vars, from), t = find_variable(vars, to);
            if (f < 0) ctx.fail(ErrorKind::UnknownParent, ptr, "unknown parent '" + from + "'");
            if (t < 0) ctx.fail(ErrorKind::UnknownVariable, ptr, "unknown child '" + to + "'");
            dag.parents[t].push_back(from);
        }
    }
    try {
        validate_dag(dag);
    } catch (const Error& e) {
        ctx.fail(e.kind(), "/edges", e.what());
    }

    std::vector<Cpt> cpts(vars.size());
    const json& jc = member(ctx, root, "cpts", "");
    for (std::size_t v = 0; v < vars.size(); ++v) {
        std::string ptr = "/cpts/" + vars[v].name;
        if (!jc.contains(vars[v].name)) ctx.fail(ErrorKind::InvalidModel, "/cpts", "no table for '" + vars[v].name + "'");
        const json& rows = jc[vars[v].name];
        std::size_t n_rows = 1;
        std::vector<int> pidx;
        for (const auto& p : dag.parents[v]) {
            pidx.push_back(find_variable(vars, p));
            n_rows *= vars[pidx.back()].domain.size();
        }
        cpts[v].rows.assign(n_rows, {});
        std::vector<bool> seen(n_rows, false);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            std::string rptr = ptr + "/" + std::to_string(r);
            std::size_t code = 0;
            const json empty = json::object();
            const json& jp = rows[r].contains("parents") ? rows[r]["parents"] : empty;
            for (int p : pidx) {
                const std::string& pname = vars[p].name;
                if (!jp.contains(pname))
                    ctx.fail(ErrorKind::InvalidModel, rptr, "row does not set parent '" + pname + "'");
                int x = find_value(vars[p], label_of(jp[pname]));
                if (x < 0)
                    ctx.fail(ErrorKind::ValueOutOfDomain, rptr + "/parents/" + pname,
                             "value '" + label_of(jp[pname]) + "' not in domain of '" + pname + "'");
                code = code * vars[p].domain.size() + static_cast<std::size_t>(x);
            }
            if (seen[code]) ctx.fail(ErrorKind::InvalidModel, rptr, "duplicate parent configuration");
            seen[code] = true;
            const json& probs = member(ctx, rows[r], "probs", rptr);
            if (!probs.is_array() || probs.size() != vars[v].domain.size())
                ctx.fail(ErrorKind::InvalidModel, rptr + "/probs", "probs must have one entry per domain value");
            double s = 0.0;
            for (const auto& p : probs) {
                if (!p.is_number() || p.get<double>() < 0.0)
                    ctx.fail(ErrorKind::InvalidModel, rptr + "/probs", "probabilities must be nonnegative numbers");
                cpts[v].rows[code].push_back(p.get<double>());
                s += p.get<double>();
            }
            if (std::abs(s - 1.0) > 1e-9) ctx.fail(ErrorKind::InvalidModel, rptr + "/probs", "probabilities must sum to 1");
        }
        for (std::size_t c = 0; c < n_rows; ++c)
            if (!seen[c]) ctx.fail(ErrorKind::InvalidModel, ptr, "missing row for a parent configuration");
    }

    ModelFile out;
    try {
        out.scm = std::make_shared<const DiscreteScm>(dag, cpts);
    } catch (const Error& e) {
        ctx.fail(e.kind(), "", e.what());
    }

    if (root.contains("interventions")) {
        const json& ji = root["interventions"];
        for (std::size_t k = 0; k < ji.size(); ++k)
            out.interventions.interventions.push_back(
                parse_intervention(ctx, ji[k], vars, "/interventions/" + std::to_string(k)));
    } else {
        out.interventions.interventions = {{}};
    }
    try {
        validate_poset(out.interventions);
    } catch (const Error& e) {
        ctx.fail(e.kind(), "/interventions", e.what());
    }

    if (root.contains("omega")) {
        const json& jo = root["omega"];
        OmegaMap om;
        om.image.assign(out.interventions.size(), OmegaMap::kNoImage);
        for (std::size_t k = 0; k < jo.size(); ++k) {
            std::string ptr = "/omega/" + std::to_string(k);
            const json& b = member(ctx, jo[k], "base", ptr);
            const json& a = member(ctx, jo[k], "abs", ptr);
            if (!b.is_number_unsigned() || !a.is_number_unsigned())
                ctx.fail(ErrorKind::ParseError, ptr, "omega entries are {\"base\": index, \"abs\": index}");
            std::size_t bi = b.get<std::size_t>();
            if (bi >= om.image.size()) ctx.fail(ErrorKind::InvalidModel, ptr + "/base", "base index out of range");
            om.image[bi] = a.get<std::size_t>();
        }
        out.omega = std::move(om);
    }
    return out;
}

ModelFile load_model(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw Error(ErrorKind::Io, "cannot open " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_model(ss.str(), path.string());
}

std::string dump_model(const DiscreteScm& scm, const InterventionPoset& interventions,
                       const std::optional<OmegaMap>& omega) {
    const auto& vars = scm.variables();
    json root;
    root["variables"] = json::array();
    for (const auto& v : vars) root["variables"].push_back({{"name", v.name}, {"domain", v.domain}});
    root["edges"] = json::array();
    for (std::size_t v = 0; v < vars.size(); ++v)
        for (const auto& p : scm.dag().parents[v]) root["edges"].push_back({p, vars[v].name});
    root["cpts"] = json::object();
    for (std::size_t v = 0; v < vars.size(); ++v) {
        const auto& pidx = scm.parent_indices()[v];
        json rows = json::array();
        const auto& cpt = scm.cpts()[v];
        for (std::size_t code = 0; code < cpt.rows.size(); ++code) {
            json parents = json::object();
            std::size_t rest = code;
            for (std::size_t i = pidx.size(); i-- > 0;) {
                const auto& pv = vars[pidx[i]];
                parents[pv.name] = pv.domain[rest % pv.domain.size()];
                rest /= pv.domain.size();
            }
            rows.push_back({{"parents", parents}, {"probs", cpt.rows[code]}});
        }
        root["cpts"][vars[v].name] = rows;
    }
    root["interventions"] = json::array();
    for (const auto& iv : interventions.interventions) {
        json j = json::object();
        for (const auto& [name, x] : iv.assignments) j[name] = vars[find_variable(vars, name)].domain[x];
        root["interventions"].push_back(j);
    }
    if (omega) {
        root["omega"] = json::array();
        for (std::size_t k = 0; k < omega->image.size(); ++k)
            if (omega->image[k] != OmegaMap::kNoImage) root["omega"].push_back({{"base", k}, {"abs", omega->image[k]}});
    }
    return root.dump(2) + "\n";
}

void save_model(const std::filesystem::path& path, const DiscreteScm& scm, const InterventionPoset& interventions,
                const std::optional<OmegaMap>& omega) {
    std::ofstream os(path);
    if (!os) throw Error(ErrorKind::Io, "cannot write " + path.string());
    os << dump_model(scm, interventions, omega);
}

}  // namespace cota

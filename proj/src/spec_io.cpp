#include "slexp/spec_io.hpp"

#include <json.hpp>

#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace slexp {

using nlohmann::json;

const PhiMap& ProblemSpec::phi_or_default() const {
    if (phi) return *phi;
    if (!default_phi_) {
        if (tree.branching() != 3)
            throw SpecError("spec: no phi map given and no default exists "
                            "for branching != 3");
        default_phi_ = PhiMap::trinomial(tree);
    }
    return *default_phi_;
}

namespace {

std::vector<std::vector<double>> parse_vertices(const json& j) {
    std::vector<std::vector<double>> out;
    for (const auto& v : j) out.push_back(v.get<std::vector<double>>());
    return out;
}

KernelSet parse_kernels(const ScenarioTree& tree, const json& j) {
    if (j.contains("trinomial")) {
        TrinomialSpec spec;
        spec.epsilon = j.at("trinomial").at("epsilon").get<double>();
        return spec.make_kernels(tree);
    }
    if (j.contains("vertices"))
        return KernelSet::shared(tree, parse_vertices(j.at("vertices")));
    if (j.contains("per_level")) {
        std::vector<std::vector<std::vector<double>>> lists;
        for (const auto& l : j.at("per_level"))
            lists.push_back(parse_vertices(l));
        return KernelSet::per_level(tree, std::move(lists));
    }
    if (j.contains("per_node")) {
        std::vector<std::vector<std::vector<double>>> lists;
        for (const auto& l : j.at("per_node"))
            lists.push_back(parse_vertices(l));
        return KernelSet::per_node(tree, std::move(lists));
    }
    throw SpecError("spec: kernels must give trinomial, vertices, per_level "
                    "or per_node");
}

std::vector<double> parse_matrix(const json& j, int n) {
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(n) * n);
    for (const auto& row : j) {
        const auto r = row.get<std::vector<double>>();
        if (static_cast<int>(r.size()) != n)
            throw SpecError("spec: phi row has wrong length");
        flat.insert(flat.end(), r.begin(), r.end());
    }
    if (static_cast<int>(flat.size()) != n * n)
        throw SpecError("spec: phi matrix has wrong shape");
    return flat;
}

PhiMap parse_phi(const ScenarioTree& tree, const json& j) {
    const int m = j.at("symmetric_rows").get<int>();
    const int n = tree.branching();
    if (j.contains("matrix"))
        return PhiMap::constant(tree, m, parse_matrix(j.at("matrix"), n));
    if (j.contains("per_level")) {
        std::vector<std::vector<double>> mats;
        for (const auto& mj : j.at("per_level"))
            mats.push_back(parse_matrix(mj, n));
        return PhiMap::per_level(tree, m, std::move(mats));
    }
    if (j.contains("per_node")) {
        std::vector<std::vector<double>> mats;
        for (const auto& mj : j.at("per_node"))
            mats.push_back(parse_matrix(mj, n));
        return PhiMap::per_node(tree, m, std::move(mats));
    }
    throw SpecError("spec: phi must give matrix, per_level or per_node");
}

// ---- expression parser -------------------------------------------------

struct Token {
    enum Kind { kName, kNumber, kOp, kEnd } kind = kEnd;
    std::string text;
    double number = 0.0;
};

class Lexer {
  public:
    explicit Lexer(const std::string& s) : s_(s) { advance(); }

    const Token& peek() const { return tok_; }
    Token take() {
        Token t = tok_;
        advance();
        return t;
    }

  private:
    void advance() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(
                                       s_[pos_])))
            ++pos_;
        if (pos_ >= s_.size()) {
            tok_ = {Token::kEnd, "", 0.0};
            return;
        }
        const char c = s_[pos_];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < s_.size() &&
                   (std::isalnum(static_cast<unsigned char>(s_[pos_])) ||
                    s_[pos_] == '_'))
                ++pos_;
            tok_ = {Token::kName, s_.substr(start, pos_ - start), 0.0};
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t start = pos_;
            while (pos_ < s_.size() &&
                   (std::isdigit(static_cast<unsigned char>(s_[pos_])) ||
                    s_[pos_] == '.' || s_[pos_] == 'e' || s_[pos_] == 'E' ||
                    ((s_[pos_] == '+' || s_[pos_] == '-') && pos_ > start &&
                     (s_[pos_ - 1] == 'e' || s_[pos_ - 1] == 'E'))))
                ++pos_;
            Token t{Token::kNumber, s_.substr(start, pos_ - start), 0.0};
            std::size_t consumed = 0;
            try {
                t.number = std::stod(t.text, &consumed);
            } catch (const std::exception&) {
                throw SpecError("expression: bad number '" + t.text + "'");
            }
            if (consumed != t.text.size())
                throw SpecError("expression: bad number '" + t.text + "'");
            tok_ = t;
            return;
        }
        if (std::string("+-*(),").find(c) != std::string::npos) {
            tok_ = {Token::kOp, std::string(1, c), 0.0};
            ++pos_;
            return;
        }
        throw SpecError(std::string("expression: unexpected character '") +
                        c + "'");
    }

    const std::string& s_;
    std::size_t pos_ = 0;
    Token tok_;
};

class Evaluator {
  public:
    Evaluator(const ProblemSpec& spec) : spec_(spec) {}

    RandomVariable evaluate(const std::string& text) {
        Lexer lex(text);
        RandomVariable v = expr(lex);
        if (lex.peek().kind != Token::kEnd)
            throw SpecError("expression: trailing input after '" +
                            lex.peek().text + "'");
        return v;
    }

  private:
    RandomVariable expr(Lexer& lex) {
        RandomVariable acc = term(lex);
        while (lex.peek().kind == Token::kOp &&
               (lex.peek().text == "+" || lex.peek().text == "-")) {
            const std::string op = lex.take().text;
            const RandomVariable rhs = term(lex);
            for (std::size_t p = 0; p < acc.size(); ++p)
                acc[static_cast<path_id>(p)] +=
                    (op == "+" ? 1.0 : -1.0) * rhs[static_cast<path_id>(p)];
        }
        return acc;
    }

    RandomVariable term(Lexer& lex) {
        RandomVariable acc = factor(lex);
        while (lex.peek().kind == Token::kOp && lex.peek().text == "*") {
            lex.take();
            const RandomVariable rhs = factor(lex);
            for (std::size_t p = 0; p < acc.size(); ++p)
                acc[static_cast<path_id>(p)] *= rhs[static_cast<path_id>(p)];
        }
        return acc;
    }

    RandomVariable factor(Lexer& lex) {
        const Token t = lex.take();
        if (t.kind == Token::kNumber)
            return RandomVariable(spec_.tree, t.number);
        if (t.kind == Token::kOp && t.text == "-") {
            RandomVariable v = factor(lex);
            for (double& x : v.values()) x = -x;
            return v;
        }
        if (t.kind == Token::kOp && t.text == "(") {
            RandomVariable v = expr(lex);
            expect(lex, ")");
            return v;
        }
        if (t.kind == Token::kName) {
            if (lex.peek().kind == Token::kOp && lex.peek().text == "(")
                return call(lex, t.text);
            return resolve(t.text);
        }
        throw SpecError("expression: unexpected token '" + t.text + "'");
    }

    RandomVariable call(Lexer& lex, const std::string& fn) {
        expect(lex, "(");
        RandomVariable a = expr(lex);
        if (fn == "min" || fn == "max") {
            expect(lex, ",");
            const RandomVariable b = expr(lex);
            expect(lex, ")");
            for (std::size_t p = 0; p < a.size(); ++p) {
                const auto id = static_cast<path_id>(p);
                a[id] = fn == "min" ? std::min(a[id], b[id])
                                    : std::max(a[id], b[id]);
            }
            return a;
        }
        expect(lex, ")");
        if (fn == "pos") {
            for (double& x : a.values()) x = std::max(x, 0.0);
        } else if (fn == "neg") {
            for (double& x : a.values()) x = std::max(-x, 0.0);
        } else if (fn == "abs") {
            for (double& x : a.values()) x = std::abs(x);
        } else {
            throw SpecError("expression: unknown function '" + fn + "'");
        }
        return a;
    }

    void expect(Lexer& lex, const std::string& op) {
        const Token t = lex.take();
        if (t.kind != Token::kOp || t.text != op)
            throw SpecError("expression: expected '" + op + "'");
    }

    RandomVariable resolve(const std::string& name) {
        if (const auto it = spec_.arrays.find(name); it != spec_.arrays.end())
            return it->second;
        if (const auto it = spec_.expressions.find(name);
            it != spec_.expressions.end()) {
            if (!resolving_.insert(name).second)
                throw SpecError("expression: cyclic definition of '" + name +
                                "'");
            RandomVariable v = evaluate_nested(it->second);
            resolving_.erase(name);
            return v;
        }
        return builtin(name);
    }

    RandomVariable evaluate_nested(const std::string& text) {
        Lexer lex(text);
        RandomVariable v = expr(lex);
        if (lex.peek().kind != Token::kEnd)
            throw SpecError("expression: trailing input");
        return v;
    }

    RandomVariable builtin(const std::string& name) {
        std::string base = name;
        int level = spec_.tree.horizon();
        const std::size_t digits = name.find_first_of("0123456789");
        if (digits != std::string::npos) {
            base = name.substr(0, digits);
            const std::string suffix = name.substr(digits);
            if (suffix.find_first_not_of("0123456789") != std::string::npos)
                throw SpecError("expression: unknown name '" + name + "'");
            try {
                level = std::stoi(suffix);
            } catch (const std::exception&) {
                throw SpecError("expression: bad time index in '" + name + "'");
            }
            if (level < 0 || level > spec_.tree.horizon())
                throw SpecError("expression: time index out of range in '" +
                                name + "'");
        }
        AdaptedProcess process(spec_.tree);
        if (base == "B")
            process = trinomial_walk(spec_.tree);
        else if (base == "QV")
            process = trinomial_quadratic_variation(spec_.tree);
        else
            throw SpecError("expression: unknown name '" + name + "'");
        return level_slice(spec_.tree, process, level);
    }

    const ProblemSpec& spec_;
    std::set<std::string> resolving_;
};

} // namespace

ProblemSpec parse_problem_spec(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const std::exception& e) {
        throw SpecError(std::string("spec: invalid JSON: ") + e.what());
    }
    try {
        const auto& jt = j.at("tree");
        ScenarioTree tree(jt.at("horizon").get<int>(),
                          jt.at("branching").get<int>());
        KernelSet kernels = parse_kernels(tree, j.at("kernels"));
        ProblemSpec spec(std::move(tree), std::move(kernels));
        if (j.contains("phi")) spec.phi = parse_phi(spec.tree, j.at("phi"));
        if (j.contains("variables")) {
            for (const auto& [name, value] : j.at("variables").items()) {
                if (value.is_string())
                    spec.expressions[name] = value.get<std::string>();
                else {
                    auto data = value.get<std::vector<double>>();
                    if (static_cast<std::int64_t>(data.size()) !=
                        spec.tree.path_count())
                        throw SpecError("spec: variable '" + name +
                                        "' has wrong length");
                    spec.arrays.emplace(name,
                                        RandomVariable(std::move(data)));
                }
            }
        }
        if (j.contains("stopping_times")) {
            for (const auto& [name, value] : j.at("stopping_times").items())
                spec.stopping_times.emplace(
                    name, StoppingTime(spec.tree,
                                       value.get<std::vector<node_id>>()));
        }
        return spec;
    } catch (const SpecError&) {
        throw;
    } catch (const std::exception& e) {
        throw SpecError(std::string("spec: ") + e.what());
    }
}

ProblemSpec load_problem_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SpecError("spec: cannot open '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_problem_spec(buffer.str());
}

RandomVariable evaluate_expression(const ProblemSpec& spec,
                                   const std::string& expression) {
    return Evaluator(spec).evaluate(expression);
}

} // namespace slexp

#include "vizgrade/expression.hpp"

#include "vizgrade/format.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace vizgrade {

std::string to_string(const Value& value)
{
    if (auto number = std::get_if<double>(&value))
        return format_number(*number);
    return std::get<std::string>(value);
}

std::optional<double> as_number(const Value& value)
{
    if (auto number = std::get_if<double>(&value))
        return *number;
    return parse_double(std::get<std::string>(value));
}

std::optional<Value> value_from_json(const nlohmann::json& value)
{
    if (value.is_number())
        return Value{value.get<double>()};
    if (value.is_string())
        return Value{value.get<std::string>()};
    if (value.is_boolean())
        return Value{value.get<bool>() ? 1.0 : 0.0};
    return std::nullopt;
}

struct Expression::Node {
    enum class Kind { Number, String, Name, Aggregate, Negate, Binary };

    Kind kind;
    double number = 0;
    std::string text; // string literal, dotted name, aggregate function
    std::string argument; // aggregate field
    char op = 0;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
};

namespace {

using Node = Expression::Node;
using NodePtr = std::shared_ptr<const Node>;

[[noreturn]] void syntax_error(std::string_view text, std::size_t pos, const std::string& why)
{
    throw Error(Errc::ExpressionSyntax, "'" + std::string(text) + "' at offset " + std::to_string(pos) + ": " + why);
}

class Parser {
public:
    explicit Parser(std::string_view text)
        : text_(text)
    {
    }

    NodePtr parse()
    {
        auto node = expr();
        skip_space();
        if (pos_ != text_.size())
            syntax_error(text_, pos_, "unexpected trailing input");
        return node;
    }

private:
    void skip_space()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }

    bool accept(char ch)
    {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == ch) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char ch)
    {
        if (!accept(ch))
            syntax_error(text_, pos_, std::string("expected '") + ch + "'");
    }

    static NodePtr binary(char op, NodePtr lhs, NodePtr rhs)
    {
        auto node = std::make_shared<Node>();
        node->kind = Node::Kind::Binary;
        node->op = op;
        node->lhs = std::move(lhs);
        node->rhs = std::move(rhs);
        return node;
    }

    NodePtr expr()
    {
        auto node = term();
        while (true) {
            if (accept('+'))
                node = binary('+', node, term());
            else if (accept('-'))
                node = binary('-', node, term());
            else
                return node;
        }
    }

    NodePtr term()
    {
        auto node = unary();
        while (true) {
            if (accept('*'))
                node = binary('*', node, unary());
            else if (accept('/'))
                node = binary('/', node, unary());
            else
                return node;
        }
    }

    NodePtr unary()
    {
        if (accept('-')) {
            auto node = std::make_shared<Node>();
            node->kind = Node::Kind::Negate;
            node->lhs = unary();
            return node;
        }
        return primary();
    }

    std::string identifier()
    {
        skip_space();
        std::size_t start = pos_;
        if (pos_ < text_.size() && (std::isalpha(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
            ++pos_;
            while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                ++pos_;
        }
        if (start == pos_)
            syntax_error(text_, pos_, "expected name");
        return std::string(text_.substr(start, pos_ - start));
    }

    std::string dotted_name()
    {
        std::string name = identifier();
        while (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            name += "." + identifier();
        }
        return name;
    }

    NodePtr primary()
    {
        skip_space();
        if (pos_ == text_.size())
            syntax_error(text_, pos_, "unexpected end of expression");
        char ch = text_[pos_];

        if (ch == '(') {
            ++pos_;
            auto node = expr();
            expect(')');
            return node;
        }
        if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '.') {
            std::size_t start = pos_;
            while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
                ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
                std::size_t mark = pos_++;
                if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-'))
                    ++pos_;
                if (pos_ == text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_])))
                    pos_ = mark;
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                    ++pos_;
            }
            auto value = parse_double(text_.substr(start, pos_ - start));
            if (!value)
                syntax_error(text_, start, "malformed number");
            auto node = std::make_shared<Node>();
            node->kind = Node::Kind::Number;
            node->number = *value;
            return node;
        }
        if (ch == '"' || ch == '\'') {
            char quote = ch;
            std::size_t start = pos_++;
            std::string out;
            while (true) {
                if (pos_ == text_.size())
                    syntax_error(text_, start, "unterminated string literal");
                char c = text_[pos_++];
                if (c == quote)
                    break;
                if (c == '\\') {
                    if (pos_ == text_.size())
                        syntax_error(text_, start, "unterminated string literal");
                    char esc = text_[pos_++];
                    out.push_back(esc == 'n' ? '\n' : esc == 't' ? '\t' : esc);
                } else {
                    out.push_back(c);
                }
            }
            auto node = std::make_shared<Node>();
            node->kind = Node::Kind::String;
            node->text = std::move(out);
            return node;
        }

        std::string name = dotted_name();
        static const char* const kAggregates[] = {"min", "max", "sum", "count"};
        if (std::find(std::begin(kAggregates), std::end(kAggregates), name) != std::end(kAggregates) && accept('(')) {
            auto node = std::make_shared<Node>();
            node->kind = Node::Kind::Aggregate;
            node->text = name;
            if (name == "count") {
                expect(')');
            } else {
                node->argument = dotted_name();
                expect(')');
            }
            return node;
        }
        auto node = std::make_shared<Node>();
        node->kind = Node::Kind::Name;
        node->text = std::move(name);
        return node;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

Value lookup(const std::string& name, const Environment& env)
{
    if (auto it = env.values.find(name); it != env.values.end())
        return it->second;

    auto dot = name.find('.');
    std::string head = name.substr(0, dot);
    if (auto it = env.objects.find(head); it != env.objects.end()) {
        const nlohmann::json* node = &it->second;
        if (dot != std::string::npos)
            node = resolve_field(it->second, std::string_view(name).substr(dot + 1));
        if (!node)
            throw Error(Errc::UnboundName, "'" + name + "' is not a field of '" + head + "'");
        if (auto value = value_from_json(*node))
            return *value;
        throw Error(Errc::TypeMismatch, "'" + name + "' is neither a number nor a string");
    }
    if (auto it = env.unresolved.find(head); it != env.unresolved.end())
        throw Error(Errc::ParameterUnresolvable, head + ": " + it->second);
    throw Error(Errc::UnboundName, "'" + name + "' is not defined");
}

double numeric_operand(const Value& value, char op)
{
    if (auto number = as_number(value))
        return *number;
    throw Error(Errc::TypeMismatch, std::string("operator '") + op + "' needs numbers, got string \""
            + std::get<std::string>(value) + "\"");
}

Value aggregate(const Node& node, const Environment& env)
{
    if (node.text == "count")
        return static_cast<double>(env.dataset.size());

    if (env.dataset.empty())
        throw Error(Errc::TypeMismatch, node.text + "(" + node.argument + ") over an empty dataset");
    double acc = node.text == "sum" ? 0.0 : std::nan("");
    for (std::size_t i = 0; i < env.dataset.size(); ++i) {
        const nlohmann::json* field = resolve_field(env.dataset[i], node.argument);
        if (!field)
            throw Error(Errc::UnboundName, "data row " + std::to_string(i) + " has no field '" + node.argument + "'");
        auto number = json_to_number(*field);
        if (!number)
            throw Error(Errc::TypeMismatch, "field '" + node.argument + "' in row " + std::to_string(i) + " is not numeric");
        if (node.text == "sum")
            acc += *number;
        else if (i == 0)
            acc = *number;
        else if (node.text == "min")
            acc = std::min(acc, *number);
        else
            acc = std::max(acc, *number);
    }
    return acc;
}

Value evaluate_node(const Node& node, const Environment& env)
{
    switch (node.kind) {
    case Node::Kind::Number:
        return node.number;
    case Node::Kind::String:
        return node.text;
    case Node::Kind::Name:
        return lookup(node.text, env);
    case Node::Kind::Aggregate:
        return aggregate(node, env);
    case Node::Kind::Negate:
        return -numeric_operand(evaluate_node(*node.lhs, env), '-');
    case Node::Kind::Binary: {
        Value lhs = evaluate_node(*node.lhs, env);
        Value rhs = evaluate_node(*node.rhs, env);
        if (node.op == '+' && (std::holds_alternative<std::string>(lhs) || std::holds_alternative<std::string>(rhs)))
            return to_string(lhs) + to_string(rhs);
        double a = numeric_operand(lhs, node.op);
        double b = numeric_operand(rhs, node.op);
        switch (node.op) {
        case '+': return a + b;
        case '-': return a - b;
        case '*': return a * b;
        default:
            if (b == 0.0)
                throw Error(Errc::DivisionByZero, "division by zero");
            return a / b;
        }
    }
    }
    return 0.0;
}

void collect_names(const Node& node, std::set<std::string>& out)
{
    if (node.kind == Node::Kind::Name)
        out.insert(node.text.substr(0, node.text.find('.')));
    if (node.lhs)
        collect_names(*node.lhs, out);
    if (node.rhs)
        collect_names(*node.rhs, out);
}

} // namespace

Expression Expression::parse(std::string_view text)
{
    Expression expression;
    expression.root_ = Parser(text).parse();
    expression.source_ = std::string(text);
    return expression;
}

Value Expression::evaluate(const Environment& env) const
{
    return evaluate_node(*root_, env);
}

std::set<std::string> Expression::names() const
{
    std::set<std::string> out;
    collect_names(*root_, out);
    return out;
}

Value eval_expression(std::string_view text, const Environment& env)
{
    return Expression::parse(text).evaluate(env);
}

} // namespace vizgrade

#include "doctest.h"

#include "oracles.hpp"
#include "vizgrade/expression.hpp"

using namespace vizgrade;
using Json = nlohmann::json;

namespace {

Errc error_of(std::string_view text, const Environment& env)
{
    try {
        eval_expression(text, env);
    } catch (const Error& e) {
        return e.code();
    }
    return Errc::FatalEnvironment;
}

double num(std::string_view text, const Environment& env = {})
{
    return std::get<double>(eval_expression(text, env));
}

} // namespace

TEST_SUITE("expression") {

TEST_CASE("parameter arithmetic")
{
    Environment env;
    env.values["height"] = 400.0;
    env.values["margin_bottom"] = 30.0;
    CHECK(num("height - margin_bottom", env) == 370);
}

TEST_CASE("aggregates fold over the dataset")
{
    Environment env;
    env.dataset = {Json{{"value", 1}}, Json{{"value", 2}}, Json{{"value", 3}}};
    CHECK(num("sum(value)", env) == 6);
    CHECK(num("min(value)", env) == 1);
    CHECK(num("max(value)", env) == 3);
    CHECK(num("count()", env) == 3);
    CHECK(num("max(value) * 0", env) == 0);
}

TEST_CASE("max(value) * 0 annihilates over random datasets")
{
    testing::Rng rng(3);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 100; ++i) {
        Environment env;
        for (int r = 0; r < 1 + i % 9; ++r)
            env.dataset.push_back(Json{{"value", u(rng)}});
        CHECK(num("max(value) * 0", env) == 0);
    }
}

TEST_CASE("precedence and associativity")
{
    CHECK(num("1 + 2 * 3") == 7);
    CHECK(num("(1 + 2) * 3") == 9);
    CHECK(num("10 - 4 - 3") == 3);
    CHECK(num("64 / 4 / 2") == 8);
    CHECK(num("-2 * 3") == -6);
    CHECK(num("- -2") == 2);
    CHECK(num("2 - -2") == 4);
    CHECK(num("1.5e2") == 150);
}

TEST_CASE("strings and field access")
{
    Environment env;
    env.objects["datum"] = Json{{"value", 12}, {"name", "A"}, {"nested", {{"x", 2}}}};
    CHECK(to_string(eval_expression("\"value: \" + datum.value", env)) == "value: 12");
    CHECK(to_string(eval_expression("'a' + 'b'", env)) == "ab");
    CHECK(to_string(eval_expression("'it\\'s'", env)) == "it's");
    CHECK(num("datum.nested.x * 2", env) == 4);
    CHECK(num("'3' * 2", env) == 6);
}

TEST_CASE("evaluation errors")
{
    Environment env;
    env.values["label"] = std::string("bar");
    env.unresolved["legend_color"] = "selector '#legend' matched nothing";
    env.objects["datum"] = Json{{"name", "A"}};
    CHECK(error_of("1 / 0", env) == Errc::DivisionByZero);
    CHECK(error_of("1 / (2 - 2)", env) == Errc::DivisionByZero);
    CHECK(error_of("nope + 1", env) == Errc::UnboundName);
    CHECK(error_of("datum.missing", env) == Errc::UnboundName);
    CHECK(error_of("label * 2", env) == Errc::TypeMismatch);
    CHECK(error_of("-label", env) == Errc::TypeMismatch);
    CHECK(error_of("legend_color", env) == Errc::ParameterUnresolvable);
    CHECK(error_of("sum(value)", env) == Errc::TypeMismatch); // empty dataset
}

TEST_CASE("syntax errors")
{
    for (const char* bad : {"", "1 +", "(1", "1)", "'open", "1 2", "sum(", "foo(x)", "a..b", "3 $ 4", "count(x y)"}) {
        CAPTURE(bad);
        try {
            Expression::parse(bad);
            FAIL("accepted");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::ExpressionSyntax);
        }
    }
}

TEST_CASE("names() lists free names only")
{
    auto e = Expression::parse("w - datum.value * sum(value) + count() - h");
    CHECK(e.names() == std::set<std::string>{"w", "datum", "h"});
}

TEST_CASE("agrees with the reference interpreter")
{
    testing::Rng rng(2024);
    const Environment env = testing::oracle_environment();
    for (int i = 0; i < 300; ++i) {
        auto tree = testing::random_expression(rng, 4);
        std::string text = testing::render_expression(*tree, rng);
        CAPTURE(text);
        auto want = testing::oracle_evaluate(*tree, env);
        std::variant<Value, Errc> got;
        try {
            got = Expression::parse(text).evaluate(env);
        } catch (const Error& e) {
            got = e.code();
        }
        CHECK(got == want);
    }
}

}

#include "rbo/functions.hpp"

#include <cmath>
#include <numbers>

#include "rbo/errors.hpp"

namespace rbo {

namespace {

using std::numbers::pi;

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Index>(v.size()));
    Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

double gramacy_lee(const Vector& x) {
    const double t = x[0];
    return std::sin(10.0 * pi * t) / (2.0 * t) + std::pow(t - 1.0, 4);
}

double rosenbrock(const Vector& x) {
    return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
}

double branin(const Vector& x) {
    constexpr double b = 5.1 / (4.0 * pi * pi);
    constexpr double c = 5.0 / pi;
    constexpr double t = 1.0 / (8.0 * pi);
    const double u = x[1] - b * x[0] * x[0] + c * x[0] - 6.0;
    return u * u + 10.0 * (1.0 - t) * std::cos(x[0]) + 10.0;
}

double goldstein_price(const Vector& x) {
    const double a = x[0];
    const double b = x[1];
    const double p = 1.0 + std::pow(a + b + 1.0, 2) *
                               (19.0 - 14.0 * a + 3.0 * a * a - 14.0 * b + 6.0 * a * b + 3.0 * b * b);
    const double q = 30.0 + std::pow(2.0 * a - 3.0 * b, 2) *
                                (18.0 - 32.0 * a + 12.0 * a * a + 48.0 * b - 36.0 * a * b + 27.0 * b * b);
    return p * q;
}

double six_hump_camel(const Vector& x) {
    const double a = x[0];
    const double b = x[1];
    return (4.0 - 2.1 * a * a + a * a * a * a / 3.0) * a * a + a * b + (-4.0 + 4.0 * b * b) * b * b;
}

double schwefel(const Vector& x) {
    double s = 418.9829 * static_cast<double>(x.size());
    for (Index i = 0; i < x.size(); ++i) s -= x[i] * std::sin(std::sqrt(std::abs(x[i])));
    return s;
}

std::vector<TestFunction> build() {
    constexpr double kSchwefelArg = 420.96874635998202731;
    std::vector<TestFunction> fs;
    fs.push_back({"gramacy_lee", 1, Box{vec({0.5}), vec({2.5})}, gramacy_lee, -0.86901113498949976988,
                  {vec({0.54856344452760518407})}});
    fs.push_back({"rosenbrock", 2, Box{vec({-2.048, -2.048}), vec({2.048, 2.048})}, rosenbrock, 0.0,
                  {vec({1.0, 1.0})}});
    fs.push_back({"branin", 2, Box{vec({-5.0, 0.0}), vec({10.0, 15.0})}, branin, 0.39788735772973833942,
                  {vec({-pi, 12.275}), vec({pi, 2.275}), vec({3.0 * pi, 2.475})}});
    fs.push_back({"goldstein_price", 2, Box{vec({-2.0, -2.0}), vec({2.0, 2.0})}, goldstein_price, 3.0,
                  {vec({0.0, -1.0})}});
    fs.push_back({"six_hump_camel", 2, Box{vec({-3.0, -2.0}), vec({3.0, 2.0})}, six_hump_camel,
                  -1.0316284534898773504,
                  {vec({0.08984201310031806, -0.7126564030207396}), vec({-0.08984201310031806, 0.7126564030207396})}});
    fs.push_back({"schwefel4d", 4, Box{Vector::Constant(4, -500.0), Vector::Constant(4, 500.0)}, schwefel,
                  0.000050910265174900854259, {Vector::Constant(4, kSchwefelArg)}});
    return fs;
}

}  // namespace

const std::vector<TestFunction>& test_functions() {
    static const std::vector<TestFunction> fs = build();
    return fs;
}

const TestFunction& find_function(const std::string& id) {
    for (const TestFunction& f : test_functions()) {
        if (f.name == id) return f;
    }
    throw ContractViolation("unknown test function '" + id + "'");
}

}  // namespace rbo

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rbo/optimizer.hpp"

namespace rbo {

struct TestFunction {
    std::string name;
    Index dim = 0;
    Box box;
    std::function<double(const Vector&)> eval;
    double f_opt = 0.0;
    std::vector<Vector> minimizers;
};

/// Gramacy-Lee, Rosenbrock, Branin-Hoo, Goldstein-Price, Six-Hump Camel, Schwefel (4-d).
const std::vector<TestFunction>& test_functions();

/// Lookup by id (gramacy_lee, rosenbrock, branin, goldstein_price, six_hump_camel,
/// schwefel4d). Throws ContractViolation for unknown ids.
const TestFunction& find_function(const std::string& id);

}  // namespace rbo

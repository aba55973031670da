#include <fstream>
#include <set>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "rbo/bench.hpp"
#include "rbo/errors.hpp"

namespace rbo {

namespace {

namespace pt = boost::property_tree;

bool parse_switch(const std::string& key, const std::string& value) {
    if (value == "on" || value == "true" || value == "1") return true;
    if (value == "off" || value == "false" || value == "0") return false;
    throw SchemaError("manifest: '" + key + "' must be on or off, got '" + value + "'");
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    std::istringstream is(value);
    T out{};
    is >> out;
    if (is.fail() || !is.eof()) throw SchemaError("manifest: '" + key + "' has invalid value '" + value + "'");
    return out;
}

void check_keys(const pt::ptree& section, const std::string& name, const std::set<std::string>& allowed) {
    for (const auto& [key, child] : section) {
        if (!allowed.count(key)) throw SchemaError("manifest: unknown key '" + key + "' in [" + name + "]");
    }
}

void apply_config(const pt::ptree& s, BenchConfig& c) {
    check_keys(s, "config",
               {"samples", "qmc", "crn", "cv", "gradient", "noise", "xi", "ucb_beta", "timing", "adam_restarts",
                "adam_iters", "inner_restarts", "analytic_restarts", "hyper_restarts", "refit_hypers"});
    for (const auto& [key, child] : s) {
        const std::string v = boost::algorithm::trim_copy(child.data());
        if (key == "samples") c.n_samples = parse_number<long>(key, v);
        else if (key == "qmc") c.variance_reduction.qmc = parse_switch(key, v);
        else if (key == "crn") c.variance_reduction.crn = parse_switch(key, v);
        else if (key == "cv") c.variance_reduction.control_variate = parse_switch(key, v);
        else if (key == "timing") c.timing = parse_switch(key, v);
        else if (key == "refit_hypers") c.refit_hypers = parse_switch(key, v);
        else if (key == "noise") c.noise = parse_number<double>(key, v);
        else if (key == "xi") c.xi = parse_number<double>(key, v);
        else if (key == "ucb_beta") c.ucb_beta = parse_number<double>(key, v);
        else if (key == "adam_restarts") c.adam.restarts = parse_number<int>(key, v);
        else if (key == "adam_iters") c.adam.max_iters = parse_number<int>(key, v);
        else if (key == "inner_restarts") c.inner.restarts = parse_number<int>(key, v);
        else if (key == "analytic_restarts") c.analytic_restarts = parse_number<int>(key, v);
        else if (key == "hyper_restarts") c.hyper_restarts = parse_number<int>(key, v);
        else if (key == "gradient") {
            if (v == "pathwise") c.gradient = GradientEstimator::pathwise;
            else if (v == "sample_path") c.gradient = GradientEstimator::sample_path;
            else throw SchemaError("manifest: gradient must be pathwise or sample_path");
        }
    }
    if (c.n_samples < 1) throw SchemaError("manifest: samples must be positive");
}

SuiteEntry parse_entry(const pt::ptree& s, const std::string& name) {
    check_keys(s, name, {"function", "policies", "seed", "trials", "budget", "n_init"});
    SuiteEntry e;
    const auto fn = s.get_optional<std::string>("function");
    const auto policies = s.get_optional<std::string>("policies");
    if (!fn || !policies) throw SchemaError("manifest: [" + name + "] needs 'function' and 'policies'");
    e.function = boost::algorithm::trim_copy(*fn);
    try {
        find_function(e.function);
    } catch (const ContractViolation& ex) {
        throw SchemaError(std::string("manifest: ") + ex.what());
    }
    std::vector<std::string> ids;
    boost::algorithm::split(ids, *policies, boost::is_any_of(", "), boost::token_compress_on);
    for (std::string id : ids) {
        boost::algorithm::trim(id);
        if (id.empty()) continue;
        try {
            e.policies.push_back(Policy::parse(id));
        } catch (const ContractViolation& ex) {
            throw SchemaError(std::string("manifest: ") + ex.what());
        }
    }
    if (e.policies.empty()) throw SchemaError("manifest: [" + name + "] lists no policies");
    for (const auto& [key, child] : s) {
        const std::string v = boost::algorithm::trim_copy(child.data());
        if (key == "seed") e.seed = parse_number<std::uint64_t>(key, v);
        else if (key == "trials") e.trials = parse_number<int>(key, v);
        else if (key == "budget") e.budget = parse_number<int>(key, v);
        else if (key == "n_init") e.n_init = parse_number<int>(key, v);
    }
    if (e.trials < 0 || e.budget < 1 || e.n_init < 1) {
        throw SchemaError("manifest: [" + name + "] needs trials >= 0, budget >= 1, n_init >= 1");
    }
    return e;
}

}  // namespace

Manifest parse_manifest(std::istream& is) {
    pt::ptree tree;
    try {
        pt::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw SchemaError(std::string("manifest: ") + e.what());
    }
    Manifest m;
    for (const auto& [name, section] : tree) {
        if (section.empty() && !section.data().empty()) {
            throw SchemaError("manifest: key '" + name + "' must live inside a section");
        }
        if (name == "config") {
            apply_config(section, m.config);
        } else if (name == "run" || name.rfind("run:", 0) == 0) {
            m.entries.push_back(parse_entry(section, name));
        } else {
            throw SchemaError("manifest: unknown section [" + name + "]");
        }
    }
    return m;
}

Manifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("manifest: cannot open '" + path + "'");
    return parse_manifest(in);
}

}  // namespace rbo

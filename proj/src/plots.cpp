#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <fmt/format.h>

#include "rbo/bench.hpp"
#include "rbo/errors.hpp"

namespace rbo {

namespace {

struct Row {
    std::string function;
    std::string policy;
    long iteration = 0;
    double gap = 0.0;
    std::string wall_ms;
};

std::vector<Row> read_rows(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("plots: cannot open '" + path + "'");
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        boost::algorithm::split(header, line, boost::is_any_of(","));
        break;
    }
    const std::vector<std::string> required = {"function", "policy", "seed", "iteration", "incumbent", "gap", "wall_ms"};
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[boost::algorithm::trim_copy(header[i])] = i;
    for (const std::string& r : required) {
        if (!col.count(r)) throw SchemaError("plots: '" + path + "' has no '" + r + "' column");
    }
    std::vector<Row> rows;
    std::vector<std::string> f;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        boost::algorithm::split(f, line, boost::is_any_of(","));
        if (f.size() != header.size()) throw SchemaError("plots: malformed row '" + line + "'");
        Row r;
        r.function = f[col["function"]];
        r.policy = f[col["policy"]];
        try {
            r.iteration = std::stol(f[col["iteration"]]);
            r.gap = std::stod(f[col["gap"]]);
        } catch (const std::exception&) {
            throw SchemaError("plots: non-numeric entry in row '" + line + "'");
        }
        r.wall_ms = f[col["wall_ms"]];
        rows.push_back(std::move(r));
    }
    return rows;
}

std::string py_list(const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt::format("{:.17g}", v[i]);
    return s + "]";
}

std::string py_string(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '\\' || c == '"') out += '\\';
        out += c;
    }
    return out + "\"";
}

constexpr const char* kPrelude =
    "import os\n"
    "\n"
    "import matplotlib\n"
    "\n"
    "matplotlib.use(\"Agg\")\n"
    "import matplotlib.pyplot as plt\n"
    "\n";

int horizon_of(const std::string& policy) {
    if (policy == "ei") return 0;
    if (policy.rfind("rollout_h", 0) == 0) return std::stoi(policy.substr(9));
    return -1;
}

}  // namespace

std::vector<std::string> emit_plots(const std::string& csv_path, const std::string& out_dir) {
    const std::vector<Row> rows = read_rows(csv_path);
    std::filesystem::create_directories(out_dir);

    // Mean gap per (function, policy, iteration), in order of first appearance.
    std::vector<std::pair<std::string, std::string>> series;
    std::map<std::pair<std::string, std::string>, std::map<long, std::pair<double, int>>> acc;
    std::map<std::string, std::pair<double, int>> cost;  // rollout/ei policy -> wall_ms sum, count
    std::map<std::string, bool> cost_seen;
    for (const Row& r : rows) {
        const auto key = std::make_pair(r.function, r.policy);
        if (!acc.count(key)) series.push_back(key);
        auto& cell = acc[key][r.iteration];
        cell.first += r.gap;
        cell.second += 1;
        if (horizon_of(r.policy) >= 0 && r.iteration > 0 && r.wall_ms != "NA") {
            auto& c = cost[r.policy];
            c.first += std::stod(r.wall_ms);
            c.second += 1;
        }
    }

    std::vector<std::string> written;
    {
        std::ostringstream py;
        py << "# Mean GAP against BO iteration, one curve per policy and one panel per function.\n";
        py << "# Source: " << csv_path << "\n";
        if (series.empty()) py << "# warning: the results file has no rows; the figure is empty.\n";
        py << kPrelude;
        py << "SOURCE = " << py_string(csv_path) << "\n";
        py << "SERIES = [\n";
        for (const auto& key : series) {
            std::vector<double> it, g;
            for (const auto& [i, cell] : acc[key]) {
                it.push_back(static_cast<double>(i));
                g.push_back(cell.first / cell.second);
            }
            py << "    (" << py_string(key.first) << ", " << py_string(key.second) << ", " << py_list(it) << ", "
               << py_list(g) << "),\n";
        }
        py << "]\n\n";
        py << "functions = sorted({s[0] for s in SERIES}) or [\"(no data)\"]\n"
              "fig, axes = plt.subplots(1, len(functions), figsize=(5 * len(functions), 4), squeeze=False)\n"
              "for ax, fn in zip(axes[0], functions):\n"
              "    for name, policy, it, gap in SERIES:\n"
              "        if name == fn:\n"
              "            ax.plot(it, gap, marker=\"o\", label=policy)\n"
              "    ax.set_title(fn)\n"
              "    ax.set_xlabel(\"iteration\")\n"
              "    ax.set_ylabel(\"mean GAP\")\n"
              "    ax.set_ylim(0.0, 1.0)\n"
              "    if ax.get_legend_handles_labels()[0]:\n"
              "        ax.legend()\n"
              "fig.tight_layout()\n"
              "fig.savefig(os.path.join(os.path.dirname(os.path.abspath(__file__)), \"gap_vs_iteration.png\"))\n";
        const std::string path = (std::filesystem::path(out_dir) / "gap_vs_iteration.py").string();
        std::ofstream(path) << py.str();
        written.push_back(path);
    }
    {
        std::vector<std::pair<int, double>> points;
        for (const auto& [policy, c] : cost) points.emplace_back(horizon_of(policy), c.first / c.second);
        std::sort(points.begin(), points.end());
        std::vector<double> hs, ms;
        for (const auto& [h, v] : points) {
            hs.push_back(h);
            ms.push_back(v);
        }
        std::ostringstream py;
        py << "# Mean wall-clock per BO iteration against rollout horizon (ei counts as horizon 0).\n";
        py << "# Source: " << csv_path << "\n";
        if (points.empty()) {
            py << "# warning: no timed ei/rollout rows (run with --timing on); the figure is empty.\n";
        }
        py << kPrelude;
        py << "SOURCE = " << py_string(csv_path) << "\n";
        py << "HORIZONS = " << py_list(hs) << "\n";
        py << "MEAN_MS = " << py_list(ms) << "\n\n";
        py << "fig, ax = plt.subplots(figsize=(5, 4))\n"
              "ax.plot(HORIZONS, MEAN_MS, marker=\"o\")\n"
              "ax.set_xlabel(\"horizon h\")\n"
              "ax.set_ylabel(\"mean ms per iteration\")\n"
              "if MEAN_MS:\n"
              "    ax.set_yscale(\"log\")\n"
              "fig.tight_layout()\n"
              "fig.savefig(os.path.join(os.path.dirname(os.path.abspath(__file__)), \"cost_vs_horizon.png\"))\n";
        const std::string path = (std::filesystem::path(out_dir) / "cost_vs_horizon.py").string();
        std::ofstream(path) << py.str();
        written.push_back(path);
    }
    return written;
}

}  // namespace rbo

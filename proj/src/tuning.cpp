#include "flowcast/tuning.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include "flowcast/error.hpp"
#include "flowcast/random.hpp"

namespace flowcast::tuning {
namespace {

bool parse_double(const std::string& s, double& out) {
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && ptr == end;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string part;
    std::istringstream in(s);
    while (std::getline(in, part, sep)) parts.push_back(part);
    if (!s.empty() && s.back() == sep) parts.emplace_back();
    return parts;
}

double number(const std::string& s, const std::string& what) {
    double v = 0;
    if (!parse_double(s, v)) throw Error(ErrorCode::bad_parameter, what + ": not a number '" + s + "'");
    return v;
}

void run_trials(std::vector<TrialRecord>& trials, const Objective& objective, std::size_t jobs) {
    auto run_one = [&](TrialRecord& t) {
        const auto start = std::chrono::steady_clock::now();
        try {
            t.objective = objective(t.params);
            t.failed = !std::isfinite(t.objective);
        } catch (const std::exception&) {
            t.failed = true;
        }
        if (t.failed) t.objective = std::numeric_limits<double>::infinity();
        t.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };
    jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(1, trials.size()));
    if (jobs == 1) {
        for (auto& t : trials) run_one(t);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < trials.size(); i = next++) run_one(trials[i]);
        });
    }
    for (auto& th : pool) th.join();
}

SearchResult finish(std::vector<TrialRecord> trials) {
    SearchResult result;
    std::size_t best = 0;
    for (std::size_t i = 1; i < trials.size(); ++i) {
        if (trials[i].objective < trials[best].objective) best = i;
    }
    result.best = trials[best];
    result.trials = std::move(trials);
    return result;
}

}  // namespace

ParamSpace& ParamSpace::add(std::string name, Domain domain) {
    if (name.empty()) throw Error(ErrorCode::bad_parameter, "dimension needs a name");
    for (const auto& d : dims_) {
        if (d.name == name) throw Error(ErrorCode::bad_parameter, "duplicate dimension " + name);
    }
    std::visit(
        [&](const auto& dom) {
            using T = std::decay_t<decltype(dom)>;
            if constexpr (std::is_same_v<T, IntRange>) {
                if (dom.lo > dom.hi) throw Error(ErrorCode::bad_parameter, name + ": empty integer range");
            } else if constexpr (std::is_same_v<T, RealRange>) {
                if (!(dom.lo <= dom.hi) || !std::isfinite(dom.lo) || !std::isfinite(dom.hi)) {
                    throw Error(ErrorCode::bad_parameter, name + ": empty real range");
                }
                if (dom.log && dom.lo <= 0) {
                    throw Error(ErrorCode::bad_parameter, name + ": log range needs positive bounds");
                }
            } else {
                if (dom.values.empty()) throw Error(ErrorCode::bad_parameter, name + ": no values");
            }
        },
        domain);
    dims_.push_back({std::move(name), std::move(domain)});
    return *this;
}

Dimension parse_dimension(const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw Error(ErrorCode::bad_parameter, "expected name=domain in '" + spec + "'");
    Dimension d;
    d.name = spec.substr(0, eq);
    const auto body = spec.substr(eq + 1);
    const auto parts = split(body, ':');
    if (parts.size() >= 3 && parts[0] == "int") {
        if (parts.size() != 3) throw Error(ErrorCode::bad_parameter, "int:LO:HI expected in '" + spec + "'");
        const double lo = number(parts[1], d.name), hi = number(parts[2], d.name);
        if (lo != std::floor(lo) || hi != std::floor(hi)) throw Error(ErrorCode::bad_parameter, d.name + ": integer bounds");
        d.domain = IntRange{static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi)};
    } else if (parts.size() >= 3 && parts[0] == "real") {
        if (parts.size() > 4 || (parts.size() == 4 && parts[3] != "log")) {
            throw Error(ErrorCode::bad_parameter, "real:LO:HI[:log] expected in '" + spec + "'");
        }
        d.domain = RealRange{number(parts[1], d.name), number(parts[2], d.name), parts.size() == 4};
    } else if (parts.size() == 2 && parts[0] == "cat") {
        d.domain = Categorical{split(parts[1], '|')};
    } else {
        const auto values = split(body, ',');
        RealGrid grid;
        bool numeric = true;
        for (const auto& v : values) {
            double x = 0;
            if (!parse_double(v, x)) {
                numeric = false;
                break;
            }
            grid.values.push_back(x);
        }
        if (numeric) {
            d.domain = grid;
        } else {
            d.domain = Categorical{values};
        }
    }
    ParamSpace check;
    check.add(d.name, d.domain);
    return d;
}

std::string format_real(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

double get_real(const Assignment& params, const std::string& name) {
    auto it = params.find(name);
    if (it == params.end()) throw Error(ErrorCode::bad_parameter, "missing parameter " + name);
    return number(it->second, name);
}

std::int64_t get_int(const Assignment& params, const std::string& name) {
    const double v = get_real(params, name);
    if (v != std::floor(v)) throw Error(ErrorCode::bad_parameter, name + " is not an integer");
    return static_cast<std::int64_t>(v);
}

SearchResult grid_search(const ParamSpace& space, const Objective& objective, std::size_t jobs) {
    std::vector<std::vector<std::string>> axes;
    for (const auto& d : space.dimensions()) {
        std::vector<std::string> axis;
        std::visit(
            [&](const auto& dom) {
                using T = std::decay_t<decltype(dom)>;
                if constexpr (std::is_same_v<T, IntRange>) {
                    for (auto v = dom.lo; v <= dom.hi; ++v) axis.push_back(std::to_string(v));
                } else if constexpr (std::is_same_v<T, RealRange>) {
                    throw Error(ErrorCode::non_finite_grid, d.name + " is a continuous range; give an explicit grid");
                } else if constexpr (std::is_same_v<T, Categorical>) {
                    axis = dom.values;
                } else {
                    for (double v : dom.values) axis.push_back(format_real(v));
                }
            },
            d.domain);
        axes.push_back(std::move(axis));
    }

    std::size_t total = 1;
    for (const auto& axis : axes) total *= axis.size();
    std::vector<TrialRecord> trials(total);
    for (std::size_t k = 0; k < total; ++k) {
        trials[k].trial_id = k;
        std::size_t rest = k;
        for (std::size_t i = axes.size(); i-- > 0;) {
            trials[k].params[space.dimensions()[i].name] = axes[i][rest % axes[i].size()];
            rest /= axes[i].size();
        }
    }
    run_trials(trials, objective, jobs);
    return finish(std::move(trials));
}

SearchResult random_search(const ParamSpace& space, std::size_t budget, std::uint64_t seed,
                           const Objective& objective, std::size_t jobs) {
    if (budget < 1) throw Error(ErrorCode::bad_parameter, "budget must be at least 1");
    Rng rng(seed);
    std::vector<TrialRecord> trials(budget);
    for (std::size_t k = 0; k < budget; ++k) {
        trials[k].trial_id = k;
        for (const auto& d : space.dimensions()) {
            std::string value = std::visit(
                [&](const auto& dom) -> std::string {
                    using T = std::decay_t<decltype(dom)>;
                    if constexpr (std::is_same_v<T, IntRange>) {
                        const auto span = static_cast<std::uint64_t>(dom.hi - dom.lo) + 1;
                        return std::to_string(dom.lo + static_cast<std::int64_t>(rng.index(span)));
                    } else if constexpr (std::is_same_v<T, RealRange>) {
                        if (dom.log) return format_real(std::exp(rng.uniform(std::log(dom.lo), std::log(dom.hi))));
                        return format_real(rng.uniform(dom.lo, dom.hi));
                    } else if constexpr (std::is_same_v<T, Categorical>) {
                        return dom.values[rng.index(dom.values.size())];
                    } else {
                        return format_real(dom.values[rng.index(dom.values.size())]);
                    }
                },
                d.domain);
            trials[k].params[d.name] = std::move(value);
        }
    }
    run_trials(trials, objective, jobs);
    return finish(std::move(trials));
}

void write_trials_csv(std::ostream& out, const ParamSpace& space, const std::vector<TrialRecord>& trials) {
    out << "trial_id";
    for (const auto& d : space.dimensions()) out << ',' << d.name;
    out << ",objective,wall_time\n";
    for (const auto& t : trials) {
        out << t.trial_id;
        for (const auto& d : space.dimensions()) {
            auto it = t.params.find(d.name);
            out << ',' << (it == t.params.end() ? "" : it->second);
        }
        out << ',' << (t.failed ? "inf" : format_real(t.objective)) << ',' << format_real(t.wall_time) << '\n';
    }
}

}  // namespace flowcast::tuning

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace flowcast::tuning {

struct IntRange {
    std::int64_t lo = 0;
    std::int64_t hi = 0;  ///< inclusive
};

struct RealRange {
    double lo = 0.0;
    double hi = 1.0;
    bool log = false;  ///< draw log-uniformly
};

struct Categorical {
    std::vector<std::string> values;
};

/// Explicit list of real values; the only real dimension a grid accepts.
struct RealGrid {
    std::vector<double> values;
};

using Domain = std::variant<IntRange, RealRange, Categorical, RealGrid>;

struct Dimension {
    std::string name;
    Domain domain;
};

class ParamSpace {
public:
    /// Throws bad_parameter on empty ranges, duplicate names or log bounds <= 0.
    ParamSpace& add(std::string name, Domain domain);

    const std::vector<Dimension>& dimensions() const noexcept { return dims_; }
    bool empty() const noexcept { return dims_.empty(); }

private:
    std::vector<Dimension> dims_;
};

/**
 * Parses one dimension spec of the form
 *   name=int:LO:HI | name=real:LO:HI[:log] | name=cat:a|b|c | name=v1,v2,...
 * A bare comma list is a real grid when every entry parses as a number,
 * otherwise a categorical set.
 */
Dimension parse_dimension(const std::string& spec);

using Assignment = std::map<std::string, std::string>;

struct TrialRecord {
    std::size_t trial_id = 0;
    Assignment params;
    double objective = 0.0;  ///< +inf when failed
    double wall_time = 0.0;  ///< seconds
    bool failed = false;
};

struct SearchResult {
    TrialRecord best;
    std::vector<TrialRecord> trials;  ///< ordered by trial_id
};

/// Lower is better. Throwing or returning a non-finite value marks the trial failed.
using Objective = std::function<double(const Assignment&)>;

/// Shortest round-trip text for a real parameter value.
std::string format_real(double v);

double get_real(const Assignment& params, const std::string& name);
std::int64_t get_int(const Assignment& params, const std::string& name);

/// Full Cartesian product, last dimension varying fastest.
SearchResult grid_search(const ParamSpace& space, const Objective& objective, std::size_t jobs = 1);

/// All `budget` assignments are drawn from `seed` before any trial runs.
SearchResult random_search(const ParamSpace& space, std::size_t budget, std::uint64_t seed,
                           const Objective& objective, std::size_t jobs = 1);

/// Columns: trial_id, one per dimension, objective, wall_time.
void write_trials_csv(std::ostream& out, const ParamSpace& space, const std::vector<TrialRecord>& trials);

}  // namespace flowcast::tuning

// mortality.hpp -- yearly mortality table with the death density M(t),
// survival function R(t) and a multiplicative stress transform.
#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace glwb {

// Yearly death probabilities q[k] for ages entry_age .. terminal_age-1.
// The last probability is forced to 1 at construction so that nobody
// survives past the terminal age: R(T) = 0 with T = terminal_age - entry_age.
class MortalityTable {
  public:
    MortalityTable(int entry_age, std::vector<double> q)
        : entry_age_(entry_age), q_(std::move(q)) {
        if (q_.empty()) throw std::invalid_argument("mortality: empty table");
        for (double p : q_)
            if (!(p >= 0.0 && p <= 1.0))
                throw std::invalid_argument("mortality: q out of [0,1]");
        q_.back() = 1.0;
        survival_.resize(q_.size() + 1);
        survival_[0] = 1.0;
        for (std::size_t k = 0; k < q_.size(); ++k)
            survival_[k + 1] = survival_[k] * (1.0 - q_[k]);
    }

    int entry_age() const { return entry_age_; }
    int terminal_age() const { return entry_age_ + int(q_.size()); }
    // Number of contract years until extinction.
    int years() const { return int(q_.size()); }
    const std::vector<double>& q() const { return q_; }

    // Survival function R(t); piecewise linear between anniversaries,
    // consistent with a death density that is constant within each year.
    double survival(double t) const {
        if (t < 0.0 || t > double(years()) + 1e-12)
            throw std::domain_error("mortality: t outside [0,T]");
        if (t >= double(years())) return 0.0;
        int k = int(std::floor(t));
        double w = t - double(k);
        return survival_[k] + w * (survival_[k + 1] - survival_[k]);
    }

    // Survival at integer anniversary k (exact, no interpolation).
    double survival_at(int k) const {
        if (k < 0) throw std::domain_error("mortality: negative anniversary");
        if (k >= int(survival_.size())) return 0.0;
        return survival_[std::size_t(k)];
    }

    // Mass of deaths in year [k, k+1): R(k) - R(k+1).
    double death_mass(int k) const {
        if (k < 0 || k >= years()) return 0.0;
        return survival_[std::size_t(k)] - survival_[std::size_t(k) + 1];
    }

    // Death density per year at time t (constant within each year).
    double density(double t) const {
        if (t < 0.0 || t >= double(years()))
            throw std::domain_error("mortality: t outside [0,T)");
        return death_mass(int(std::floor(t)));
    }

    // Multiplies every q by `factor` (clamped at 1); the final entry stays 1.
    MortalityTable shock(double factor) const {
        if (!(factor > 0.0)) throw std::invalid_argument("mortality: factor <= 0");
        std::vector<double> qs(q_);
        for (std::size_t k = 0; k + 1 < qs.size(); ++k)
            qs[k] = std::min(1.0, qs[k] * factor);
        return MortalityTable(entry_age_, std::move(qs));
    }

    // Loads a CSV with one `age,qx` row per age (header row optional).
    static MortalityTable from_csv(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("mortality: cannot open " + path);
        std::vector<double> q;
        int first_age = -1, prev_age = -1;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            std::istringstream ss(line);
            std::string age_s, q_s;
            if (!std::getline(ss, age_s, ',') || !std::getline(ss, q_s)) continue;
            char* end = nullptr;
            long age = std::strtol(age_s.c_str(), &end, 10);
            if (end == age_s.c_str()) continue; // header or junk row
            double qx = std::strtod(q_s.c_str(), &end);
            if (prev_age >= 0 && age != prev_age + 1)
                throw std::runtime_error("mortality: non-contiguous ages in " + path);
            if (!(qx >= 0.0 && qx <= 1.0))
                throw std::runtime_error("mortality: qx out of range in " + path);
            if (first_age < 0) first_age = int(age);
            prev_age = int(age);
            q.push_back(qx);
        }
        if (q.empty()) throw std::runtime_error("mortality: no rows in " + path);
        return MortalityTable(first_age, std::move(q));
    }

  private:
    int entry_age_;
    std::vector<double> q_;
    std::vector<double> survival_;
};

// DAV 2004R yearly death probabilities for a 65-year-old male, ages 65..121.
// This is the base-case annuitant table used by the reproduction runs.
inline MortalityTable dav2004r_65() {
    return MortalityTable(65, {
        0.008886, 0.009938, 0.011253, 0.012687, 0.014231,
        0.015887, 0.017663, 0.019598, 0.021698, 0.023990,
        0.026610, 0.029533, 0.032873, 0.036696, 0.041106,
        0.046239, 0.052094, 0.058742, 0.066209, 0.074583,
        0.083899, 0.094103, 0.105171, 0.116929, 0.129206,
        0.141850, 0.154860, 0.168157, 0.181737, 0.195567,
        0.209614, 0.223854, 0.238280, 0.252858, 0.267526,
        0.278816, 0.293701, 0.308850, 0.324261, 0.339936,
        0.355873, 0.372069, 0.388523, 0.405229, 0.422180,
        0.439368, 0.456782, 0.474411, 0.492237, 0.510241,
        0.528401, 0.546689, 0.565074, 0.583517, 0.601976,
        0.620400, 1.000000});
}

// Synthetic Gompertz-style table for unit tests that should not depend on
// any published data set.
inline MortalityTable gompertz_table(int entry_age, int terminal_age,
                                     double b = 0.09, double q0 = 0.01) {
    std::vector<double> q;
    for (int age = entry_age; age < terminal_age; ++age)
        q.push_back(std::min(1.0, q0 * std::exp(b * (age - entry_age))));
    q.back() = 1.0;
    return MortalityTable(entry_age, std::move(q));
}

} // namespace glwb

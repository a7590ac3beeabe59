#pragma once

#include "mmjdm/error.hpp"
#include "mmjdm/mixture_em.hpp"
#include "mmjdm/model.hpp"
#include "mmjdm/segmentation.hpp"
#include "mmjdm/simulate.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace mmjdm
{

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Parameter files
//
// {"m": 3, "Q": [9 numbers, row-major], "mu": [...], "sigma": [...],
//  "eta": 7.57, "s0": 100, "x0": 1, "delta": 1, "M": 1260}
// States are 1-based in files.

struct ParameterFile
{
    MmjdmParams params;
    ObservationGrid grid;
};

namespace detail
{
template <class T>
T required(const json &j, const char *key)
{
    if (!j.contains(key))
        throw ValidationError(std::string("parameter file: missing key '") + key + "'");
    try
    {
        return j.at(key).get<T>();
    }
    catch (const json::exception &)
    {
        throw ValidationError(std::string("parameter file: key '") + key + "' has the wrong type");
    }
}

inline Eigen::MatrixXd matrix_from_row_major(const std::vector<double> &flat, int m, const char *what)
{
    if (flat.size() != static_cast<std::size_t>(m) * static_cast<std::size_t>(m))
        throw ValidationError(std::string(what) + ": expected " + std::to_string(m * m) + " entries");
    Eigen::MatrixXd q(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            q(i, j) = flat[static_cast<std::size_t>(i * m + j)];
    return q;
}

inline json matrix_to_row_major(const Eigen::MatrixXd &q)
{
    json flat = json::array();
    for (Eigen::Index i = 0; i < q.rows(); ++i)
        for (Eigen::Index j = 0; j < q.cols(); ++j)
            flat.push_back(q(i, j));
    return flat;
}

inline json read_json_file(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open '" + path + "'");
    try
    {
        return json::parse(in);
    }
    catch (const json::parse_error &e)
    {
        throw ValidationError("'" + path + "' is not valid JSON: " + e.what());
    }
}
} // namespace detail

inline ParameterFile parse_parameters(const json &j, VolatilityRule rule = VolatilityRule::strictly_positive)
{
    ParameterFile out;
    const int m = detail::required<int>(j, "m");
    if (m < 1)
        throw ValidationError("parameter file: m must be at least 1");
    out.params.q = IntensityMatrix(detail::matrix_from_row_major(detail::required<std::vector<double>>(j, "Q"), m, "Q"));
    out.params.mu = detail::required<std::vector<double>>(j, "mu");
    out.params.sigma = detail::required<std::vector<double>>(j, "sigma");
    out.params.eta = detail::required<double>(j, "eta");
    out.params.s0 = detail::required<double>(j, "s0");
    out.params.x0 = detail::required<int>(j, "x0") - 1;
    out.grid.delta = detail::required<double>(j, "delta");
    out.grid.intervals = detail::required<int>(j, "M");
    validate(out.params, rule);
    validate(out.grid);
    return out;
}

inline ParameterFile load_parameters(const std::string &path, VolatilityRule rule = VolatilityRule::strictly_positive)
{
    return parse_parameters(detail::read_json_file(path), rule);
}

inline json parameters_to_json(const MmjdmParams &p, const ObservationGrid &g)
{
    return json{{"m", p.states()},
                {"Q", detail::matrix_to_row_major(p.q.rates())},
                {"mu", p.mu},
                {"sigma", p.sigma},
                {"eta", p.eta},
                {"s0", p.s0},
                {"x0", p.x0 + 1},
                {"delta", g.delta},
                {"M", g.intervals}};
}

/// Generator file for --q-init: {"m": 3, "Q": [...]}.
inline IntensityMatrix load_generator(const std::string &path)
{
    const json j = detail::read_json_file(path);
    const int m = detail::required<int>(j, "m");
    return IntensityMatrix(detail::matrix_from_row_major(detail::required<std::vector<double>>(j, "Q"), m, "Q"));
}

/// Mixture start for --em-init: {"mu": [...], "sigma": [...], "pi": [...] (optional, default uniform)}.
inline MixtureState load_mixture_init(const std::string &path)
{
    const json j = detail::read_json_file(path);
    const auto mu = detail::required<std::vector<double>>(j, "mu");
    const auto sigma = detail::required<std::vector<double>>(j, "sigma");
    if (mu.size() != sigma.size() || mu.empty())
        throw ValidationError("mixture init: mu and sigma must be nonempty and of equal length");
    std::vector<double> pi(mu.size(), 1.0 / static_cast<double>(mu.size()));
    if (j.contains("pi"))
        pi = detail::required<std::vector<double>>(j, "pi");
    if (pi.size() != mu.size())
        throw ValidationError("mixture init: pi length differs from mu");
    return mixture_from_moments(std::move(pi), mu, sigma);
}

// ---------------------------------------------------------------------------
// Price CSV ingestion

struct PriceRecord
{
    std::string date; ///< calendar date (ISO) or integer index, as written
    double price = 0.0;
};

struct CsvColumns
{
    std::string date = "date";
    std::string price = "price";
};

namespace detail
{
inline std::string trim(std::string s)
{
    const auto first = s.find_first_not_of(" \t\r\"");
    if (first == std::string::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r\"");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split_csv_line(const std::string &line)
{
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (char c : line)
    {
        if (c == '"')
            quoted = !quoted;
        else if (c == ',' && !quoted)
        {
            out.push_back(trim(field));
            field.clear();
        }
        else
            field += c;
    }
    out.push_back(trim(field));
    return out;
}

inline bool parse_double(const std::string &s, double &out)
{
    if (s.empty())
        return false;
    const char *end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && ptr == end && std::isfinite(out);
}

inline bool parse_integer(const std::string &s, long long &out)
{
    if (s.empty())
        return false;
    const char *end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && ptr == end;
}

/// Integer indices compare numerically, anything else (ISO dates) lexicographically.
inline bool date_less(const std::string &a, const std::string &b)
{
    long long ia = 0, ib = 0;
    if (parse_integer(a, ia) && parse_integer(b, ib))
        return ia < ib;
    return a < b;
}
} // namespace detail

inline std::vector<PriceRecord> parse_price_csv(std::istream &in, const CsvColumns &columns = {},
                                                const std::string &name = "input")
{
    std::string line;
    if (!std::getline(in, line))
        throw ValidationError(name + ": empty file");
    const auto header = detail::split_csv_line(line);
    auto column = [&](const std::string &key) {
        auto it = std::find(header.begin(), header.end(), key);
        if (it == header.end())
            throw ValidationError(name + ": missing column '" + key + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t date_col = column(columns.date);
    const std::size_t price_col = column(columns.price);

    std::vector<PriceRecord> records;
    std::size_t line_no = 1;
    while (std::getline(in, line))
    {
        ++line_no;
        if (detail::trim(line).empty())
            continue;
        const auto fields = detail::split_csv_line(line);
        const auto where = name + ":" + std::to_string(line_no) + ": ";
        if (fields.size() <= std::max(date_col, price_col))
            throw ValidationError(where + "too few fields");
        PriceRecord r;
        r.date = fields[date_col];
        if (r.date.empty())
            throw ValidationError(where + "empty date");
        if (!detail::parse_double(fields[price_col], r.price))
            throw ValidationError(where + "unparseable price '" + fields[price_col] + "'");
        if (!(r.price > 0.0))
            throw ValidationError(where + "nonpositive price " + fields[price_col]);
        records.push_back(std::move(r));
    }
    std::stable_sort(records.begin(), records.end(),
                     [](const PriceRecord &a, const PriceRecord &b) { return detail::date_less(a.date, b.date); });
    for (std::size_t i = 1; i < records.size(); ++i)
        if (!detail::date_less(records[i - 1].date, records[i].date))
            throw ValidationError(name + ": duplicate date '" + records[i].date + "'");
    return records;
}

inline std::vector<PriceRecord> ingest_csv(const std::string &path, const CsvColumns &columns = {})
{
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open '" + path + "'");
    return parse_price_csv(in, columns, path);
}

// ---------------------------------------------------------------------------
// CSV writers

inline void write_price_csv(std::ostream &out, const std::vector<double> &prices, const ObservationGrid &grid)
{
    out << std::setprecision(std::numeric_limits<double>::max_digits10) << "t,price\n";
    for (std::size_t i = 0; i < prices.size(); ++i)
        out << grid.time(static_cast<int>(i)) << ',' << prices[i] << '\n';
}

/// Latent trajectory; the first row (tau = 0, jump_log_size = 0) carries the initial state.
inline void write_latent_csv(std::ostream &out, const SimulatedPath &path)
{
    out << std::setprecision(std::numeric_limits<double>::max_digits10) << "tau,state,jump_log_size\n";
    out << 0.0 << ',' << path.latent.initial_state + 1 << ',' << 0.0 << '\n';
    for (std::size_t k = 0; k < path.latent.jumps(); ++k)
        out << path.latent.jump_times[k] << ',' << path.latent.post_jump_states[k] + 1 << ','
            << path.jump_log_sizes[k] << '\n';
}

inline void write_segments_csv(std::ostream &out, const PartialMjpPath &partial)
{
    out << std::setprecision(std::numeric_limits<double>::max_digits10) << "segment_start,segment_end,state\n";
    for (const auto &s : partial.segments)
        out << s.start << ',' << s.end << ',' << s.state + 1 << '\n';
}

inline void write_em_trace_csv(std::ostream &out, const std::vector<double> &loglik)
{
    out << std::setprecision(std::numeric_limits<double>::max_digits10) << "iter,loglik\n";
    for (std::size_t i = 0; i < loglik.size(); ++i)
        out << i << ',' << loglik[i] << '\n';
}

inline void write_sem_trace_csv(std::ostream &out, const std::vector<Eigen::MatrixXd> &trace)
{
    out << std::setprecision(std::numeric_limits<double>::max_digits10) << "iter,i,j,q_ij\n";
    for (std::size_t it = 0; it < trace.size(); ++it)
        for (Eigen::Index i = 0; i < trace[it].rows(); ++i)
            for (Eigen::Index j = 0; j < trace[it].cols(); ++j)
                if (i != j)
                    out << it + 1 << ',' << i + 1 << ',' << j + 1 << ',' << trace[it](i, j) << '\n';
}

} // namespace mmjdm

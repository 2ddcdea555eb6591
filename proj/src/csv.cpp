#include "csc/error.hpp"
#include "csc/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

namespace csc::io {

Layout parse_layout(const std::string& s) {
    if (s == "wide") return Layout::wide;
    if (s == "long") return Layout::long_format;
    throw std::invalid_argument("unknown layout '" + s + "' (expected wide or long)");
}

std::string to_string(Layout l) { return l == Layout::wide ? "wide" : "long"; }

namespace {

// RFC 4180 fields: commas separate, double quotes enclose, "" escapes a quote.
std::vector<std::string> split_record(const std::string& line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    bool was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"' && cur.empty() && !was_quoted) {
            quoted = true;
            was_quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
            was_quoted = false;
        } else {
            cur += c;
        }
    }
    if (quoted) throw ParseError("unterminated quoted field", line_no);
    fields.push_back(std::move(cur));
    for (auto& f : fields) {
        const auto b = f.find_first_not_of(" \t");
        const auto e = f.find_last_not_of(" \t");
        f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
    }
    return fields;
}

std::optional<double> to_number(const std::string& s) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || first == last) return std::nullopt;
    return v;
}

double parse_cell(const std::string& s, std::size_t line_no, const std::string& column) {
    const auto v = to_number(s);
    if (!v) throw ParseError("non-numeric value '" + s + "' in column '" + column + "'", line_no);
    if (!std::isfinite(*v)) throw ParseError("non-finite value '" + s + "' in column '" + column + "'", line_no);
    return *v;
}

struct Records {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> lines;
};

Records read_records(std::istream& in) {
    Records r;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        r.rows.push_back(split_record(line, line_no));
        r.lines.push_back(line_no);
    }
    if (r.rows.empty()) throw ParseError("file is empty", 0);
    return r;
}

// lines[i] is the line label i came from.
void check_unique(const std::vector<std::string>& labels, const std::vector<std::size_t>& lines, const char* what) {
    std::map<std::string, std::size_t> first;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto& l = labels[i];
        if (l.empty()) throw ParseError(std::string("empty ") + what + " label", lines[i]);
        const auto [it, inserted] = first.emplace(l, lines[i]);
        if (!inserted) {
            std::string msg = std::string("duplicate ") + what + " '" + l + "'";
            if (it->second != lines[i]) msg += ", first seen on line " + std::to_string(it->second);
            throw ParseError(msg, lines[i]);
        }
    }
}

// Treated units first (in the requested order), then the rest in `order`.
std::vector<int> unit_order(const std::vector<std::string>& labels, const std::vector<std::string>& treated) {
    std::vector<int> out;
    std::vector<bool> used(labels.size(), false);
    const std::vector<std::string> wanted = treated.empty() ? std::vector<std::string>{labels.front()} : treated;
    for (const auto& t : wanted) {
        const auto it = std::find(labels.begin(), labels.end(), t);
        if (it == labels.end()) throw ParseError("treated unit '" + t + "' not found in the file", 0);
        const auto idx = static_cast<std::size_t>(it - labels.begin());
        if (used[idx]) throw ParseError("treated unit '" + t + "' listed twice", 0);
        used[idx] = true;
        out.push_back(static_cast<int>(idx));
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!used[i]) out.push_back(static_cast<int>(i));
    }
    return out;
}

void check_t0(int t0) {
    if (t0 < 1) throw ParseError("missing t0: the number of pre-treatment periods must be given (>= 1)", 0);
}

PanelData read_wide(const Records& rec, const ReadOptions& options) {
    const auto& header = rec.rows.front();
    if (header.size() < 2) throw ParseError("wide header needs a time column and at least one unit", rec.lines.front());
    const std::vector<std::string> units(header.begin() + 1, header.end());
    check_unique(units, std::vector<std::size_t>(units.size(), rec.lines.front()), "unit");

    const std::size_t periods = rec.rows.size() - 1;
    if (periods == 0) throw ParseError("file has a header but no data rows", rec.lines.front());
    Matrix raw(static_cast<Eigen::Index>(periods), static_cast<Eigen::Index>(units.size()));
    std::vector<std::string> times;
    for (std::size_t r = 1; r < rec.rows.size(); ++r) {
        const auto& row = rec.rows[r];
        if (row.size() != header.size()) {
            throw ParseError("ragged row: expected " + std::to_string(header.size()) + " fields, found " +
                                 std::to_string(row.size()),
                             rec.lines[r]);
        }
        times.push_back(row[0]);
        for (std::size_t c = 0; c < units.size(); ++c) {
            raw(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(c)) =
                parse_cell(row[c + 1], rec.lines[r], units[c]);
        }
    }
    check_unique(times, std::vector<std::size_t>(rec.lines.begin() + 1, rec.lines.end()), "time");
    check_t0(options.t0);

    const std::vector<int> order = unit_order(units, options.treated);
    Matrix y(raw.rows(), raw.cols());
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < order.size(); ++i) {
        y.col(static_cast<Eigen::Index>(i)) = raw.col(order[i]);
        labels.push_back(units[static_cast<std::size_t>(order[i])]);
    }
    const int n_treated = options.treated.empty() ? 1 : static_cast<int>(options.treated.size());
    return PanelData(std::move(y), options.t0, n_treated, {}, std::move(labels), std::move(times));
}

// Numeric order when every label parses as a number, otherwise lexicographic.
void sort_labels(std::vector<std::string>& labels) {
    const bool numeric = std::all_of(labels.begin(), labels.end(), [](const std::string& s) { return to_number(s).has_value(); });
    if (numeric) {
        std::stable_sort(labels.begin(), labels.end(),
                         [](const std::string& a, const std::string& b) { return *to_number(a) < *to_number(b); });
    } else {
        std::stable_sort(labels.begin(), labels.end());
    }
}

PanelData read_long(const Records& rec, const ReadOptions& options) {
    const auto& header = rec.rows.front();
    if (header.size() < 3) throw ParseError("long header needs unit, time and outcome columns", rec.lines.front());
    const std::vector<std::string> cov_names(header.begin() + 3, header.end());
    const std::size_t width = header.size();

    std::map<std::pair<std::string, std::string>, std::pair<std::size_t, std::vector<double>>> cells;
    std::vector<std::string> units;
    std::vector<std::string> times;
    std::map<std::string, bool> unit_seen;
    std::map<std::string, bool> time_seen;
    for (std::size_t r = 1; r < rec.rows.size(); ++r) {
        const auto& row = rec.rows[r];
        if (row.size() != width) {
            throw ParseError("ragged row: expected " + std::to_string(width) + " fields, found " +
                                 std::to_string(row.size()),
                             rec.lines[r]);
        }
        if (row[0].empty()) throw ParseError("empty unit label", rec.lines[r]);
        if (row[1].empty()) throw ParseError("empty time label", rec.lines[r]);
        std::vector<double> values;
        for (std::size_t c = 2; c < width; ++c) values.push_back(parse_cell(row[c], rec.lines[r], header[c]));
        const auto key = std::make_pair(row[0], row[1]);
        const auto [it, inserted] = cells.emplace(key, std::make_pair(rec.lines[r], std::move(values)));
        if (!inserted) {
            throw ParseError("duplicate (unit, time) pair (" + row[0] + ", " + row[1] + "), first seen on line " +
                                 std::to_string(it->second.first),
                             rec.lines[r]);
        }
        if (!unit_seen[row[0]]) {
            unit_seen[row[0]] = true;
            units.push_back(row[0]);
        }
        if (!time_seen[row[1]]) {
            time_seen[row[1]] = true;
            times.push_back(row[1]);
        }
    }
    if (cells.empty()) throw ParseError("file has a header but no data rows", rec.lines.front());
    sort_labels(units);
    sort_labels(times);
    check_t0(options.t0);

    const std::vector<int> order = unit_order(units, options.treated);
    const auto n_t = static_cast<Eigen::Index>(times.size());
    const auto n_u = static_cast<Eigen::Index>(units.size());
    Matrix y(n_t, n_u);
    std::vector<Matrix> cov(cov_names.size(), Matrix(n_t, n_u));
    std::vector<std::string> labels;
    for (Eigen::Index c = 0; c < n_u; ++c) {
        const std::string& unit = units[static_cast<std::size_t>(order[static_cast<std::size_t>(c)])];
        labels.push_back(unit);
        for (Eigen::Index t = 0; t < n_t; ++t) {
            const auto it = cells.find({unit, times[static_cast<std::size_t>(t)]});
            if (it == cells.end()) {
                throw ParseError("unbalanced panel: no row for unit '" + unit + "' at time '" +
                                     times[static_cast<std::size_t>(t)] + "'",
                                 0);
            }
            const auto& v = it->second.second;
            y(t, c) = v[0];
            for (std::size_t k = 0; k < cov.size(); ++k) cov[k](t, c) = v[k + 1];
        }
    }
    const int n_treated = options.treated.empty() ? 1 : static_cast<int>(options.treated.size());
    return PanelData(std::move(y), options.t0, n_treated, std::move(cov), std::move(labels), std::move(times));
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

std::vector<std::string> labels_or_default(const std::vector<std::string>& labels, int n, const char* prefix) {
    if (!labels.empty()) return labels;
    std::vector<std::string> out;
    for (int i = 1; i <= n; ++i) out.push_back(prefix + std::to_string(i));
    return out;
}

}  // namespace

PanelData read_panel_csv(std::istream& in, const ReadOptions& options) {
    const Records rec = read_records(in);
    return options.layout == Layout::wide ? read_wide(rec, options) : read_long(rec, options);
}

PanelData read_panel_csv(const std::filesystem::path& path, const ReadOptions& options) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path.string() + "'", 0);
    return read_panel_csv(in, options);
}

void write_panel_csv(std::ostream& out, const PanelData& panel, Layout layout) {
    const auto units = labels_or_default(panel.unit_labels(), panel.n_units(), "unit");
    const auto times = labels_or_default(panel.time_labels(), panel.periods(), "");
    const Matrix& y = panel.outcomes();
    if (layout == Layout::wide) {
        out << "time";
        for (const auto& u : units) out << ',' << quote(u);
        out << '\n';
        for (int t = 0; t < panel.periods(); ++t) {
            out << quote(times[static_cast<std::size_t>(t)]);
            for (int j = 0; j < panel.n_units(); ++j) out << ',' << fmt17(y(t, j));
            out << '\n';
        }
        return;
    }
    out << "unit,time,outcome";
    for (int k = 0; k < panel.n_covariates(); ++k) out << ",x" << (k + 1);
    out << '\n';
    for (int j = 0; j < panel.n_units(); ++j) {
        for (int t = 0; t < panel.periods(); ++t) {
            out << quote(units[static_cast<std::size_t>(j)]) << ',' << quote(times[static_cast<std::size_t>(t)]) << ','
                << fmt17(y(t, j));
            for (const auto& c : panel.covariates()) out << ',' << fmt17(c(t, j));
            out << '\n';
        }
    }
}

void write_panel_csv(const std::filesystem::path& path, const PanelData& panel, Layout layout) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    write_panel_csv(out, panel, layout);
}

}  // namespace csc::io

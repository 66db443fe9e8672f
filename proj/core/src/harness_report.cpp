#include "wou/harness.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <tuple>

namespace wou::harness {

namespace {

std::string fmt(double v)
{
    if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

nlohmann::json num(double v)
{
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

} // namespace

bool ReportRow::operator<(const ReportRow& o) const
{
    return std::tie(weight, n, lambda, function, quantity) < std::tie(o.weight, o.n, o.lambda, o.function, o.quantity);
}

ReportRow make_row(std::string weight, int n, double lambda, std::string function, std::string quantity,
                   double estimate, double std_error, double bound, double allowance, std::string note)
{
    ReportRow r;
    r.weight = std::move(weight);
    r.n = n;
    r.lambda = lambda;
    r.function = std::move(function);
    r.quantity = std::move(quantity);
    r.estimate = estimate;
    r.std_error = std_error;
    r.bound = bound;
    r.allowance = allowance;
    r.margin = bound - estimate;
    r.pass = std::isfinite(estimate) && std::isfinite(std_error) && estimate <= bound + 3.0 * std_error + allowance;
    r.note = std::move(note);
    return r;
}

ReportRow failed_row(std::string weight, int n, double lambda, std::string function, std::string quantity,
                     double bound, const std::string& error)
{
    ReportRow r = make_row(std::move(weight), n, lambda, std::move(function), std::move(quantity), NAN, NAN, bound,
                           0.0, "error: " + error);
    r.pass = false;
    return r;
}

void EstimateReport::sort()
{
    std::stable_sort(rows.begin(), rows.end());
    std::stable_sort(slopes.begin(), slopes.end(), [](const SlopeRow& a, const SlopeRow& b) {
        return std::tie(a.weight, a.quantity) < std::tie(b.weight, b.quantity);
    });
    std::stable_sort(ladder.begin(), ladder.end(), [](const LadderRow& a, const LadderRow& b) {
        return std::tie(a.weight, a.n) < std::tie(b.weight, b.n);
    });
}

bool EstimateReport::all_pass() const
{
    return std::all_of(rows.begin(), rows.end(), [](const ReportRow& r) { return r.pass; }) &&
           std::all_of(slopes.begin(), slopes.end(), [](const SlopeRow& s) { return s.pass; });
}

std::vector<const ReportRow*> EstimateReport::failures() const
{
    std::vector<const ReportRow*> out;
    for (const auto& r : rows)
        if (!r.pass) out.push_back(&r);
    return out;
}

void EstimateReport::write_json(std::ostream& os) const
{
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        nlohmann::ordered_json j;
        j["weight"] = r.weight;
        j["n"] = r.n;
        j["lambda"] = num(r.lambda);
        j["function"] = r.function;
        j["quantity"] = r.quantity;
        j["estimate"] = num(r.estimate);
        j["std_error"] = num(r.std_error);
        j["bound"] = num(r.bound);
        j["allowance"] = num(r.allowance);
        j["margin"] = num(r.margin);
        j["pass"] = r.pass;
        j["note"] = r.note;
        arr.push_back(std::move(j));
    }
    os << arr.dump(2) << '\n';
}

void EstimateReport::write_csv(std::ostream& os) const
{
    os << "weight,n,lambda,function,quantity,estimate,std_error,bound,allowance,margin,pass,note\n";
    for (const auto& r : rows) {
        os << csv_field(r.weight) << ',' << r.n << ',' << fmt(r.lambda) << ',' << csv_field(r.function) << ','
           << r.quantity << ',' << fmt(r.estimate) << ',' << fmt(r.std_error) << ',' << fmt(r.bound) << ','
           << fmt(r.allowance) << ',' << fmt(r.margin) << ',' << (r.pass ? "true" : "false") << ','
           << csv_field(r.note) << '\n';
    }
}

void EstimateReport::write_slopes_csv(std::ostream& os) const
{
    os << "weight,quantity,slope,std_error,pass\n";
    for (const auto& s : slopes)
        os << csv_field(s.weight) << ',' << s.quantity << ',' << fmt(s.slope) << ',' << fmt(s.std_error) << ','
           << (s.pass ? "true" : "false") << '\n';
}

void EstimateReport::write_slopes_json(std::ostream& os) const
{
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& s : slopes) {
        nlohmann::ordered_json j;
        j["weight"] = s.weight;
        j["quantity"] = s.quantity;
        j["slope"] = num(s.slope);
        j["std_error"] = num(s.std_error);
        j["pass"] = s.pass;
        arr.push_back(std::move(j));
    }
    os << arr.dump(2) << '\n';
}

void EstimateReport::write_ladder_csv(std::ostream& os) const
{
    os << "weight,n,correction,correction_se,residual,residual_se\n";
    for (const auto& l : ladder)
        os << csv_field(l.weight) << ',' << l.n << ',' << fmt(l.correction) << ',' << fmt(l.correction_se) << ','
           << (l.residual ? fmt(*l.residual) : "") << ',' << (l.residual_se ? fmt(*l.residual_se) : "") << '\n';
}

void EstimateReport::write_summary(std::ostream& os) const
{
    const auto failed = failures();
    os << "rows: " << rows.size() << ", failed: " << failed.size() << '\n';
    for (const ReportRow* r : failed)
        os << "  FAIL " << r->weight << " n=" << r->n << " lambda=" << fmt(r->lambda) << " " << r->function << " "
           << r->quantity << ": estimate " << fmt(r->estimate) << " > bound " << fmt(r->bound) << " + 3*"
           << fmt(r->std_error) << " + " << fmt(r->allowance) << (r->note.empty() ? "" : " (" + r->note + ")")
           << '\n';
    if (!slopes.empty()) {
        os << "n-slope probe:\n";
        for (const auto& s : slopes)
            os << "  " << (s.pass ? "ok  " : "FAIL") << ' ' << s.weight << ' ' << s.quantity << ": slope "
               << fmt(s.slope) << " +- " << fmt(s.std_error) << '\n';
    }
    if (!ladder.empty()) {
        os << "truncation ladder:\n";
        for (const auto& l : ladder) {
            os << "  " << l.weight << " n=" << l.n << ": correction " << fmt(l.correction);
            if (l.residual) os << ", residual " << fmt(*l.residual);
            os << '\n';
        }
    }
    os << (all_pass() ? "all checks passed" : "some checks failed") << '\n';
}

void write_artifacts(const EstimateReport& report, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir / "tables");
    auto open = [](const std::filesystem::path& p) {
        std::ofstream f(p);
        if (!f) throw std::runtime_error("cannot write " + p.string());
        return f;
    };
    {
        auto f = open(dir / "report.json");
        report.write_json(f);
    }
    {
        auto f = open(dir / "tables" / "estimates.csv");
        report.write_csv(f);
    }
    if (!report.slopes.empty()) {
        auto f = open(dir / "tables" / "slopes.csv");
        report.write_slopes_csv(f);
        auto j = open(dir / "slopes.json");
        report.write_slopes_json(j);
    }
    if (!report.ladder.empty()) {
        auto f = open(dir / "tables" / "ladder.csv");
        report.write_ladder_csv(f);
    }
    {
        auto f = open(dir / "summary.txt");
        report.write_summary(f);
    }
}

} // namespace wou::harness

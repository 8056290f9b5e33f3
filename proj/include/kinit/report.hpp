#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "kinit/experiment.hpp"

namespace kinit {

enum class ReportFormat { csv, markdown };

inline ReportFormat parse_report_format(std::string_view s) {
    if (s == "csv") return ReportFormat::csv;
    if (s == "markdown" || s == "md") return ReportFormat::markdown;
    throw Error("unknown report format '" + std::string(s) + "' (expected csv or markdown)");
}

/// Digits after the decimal point used when rendering a criterion.
constexpr int criterion_decimals(Criterion c) {
    switch (c) {
        case Criterion::rand:
        case Criterion::vd:
        case Criterion::vi: return 3;
        case Criterion::iterations: return 1;
        default: return 0;
    }
}

/// Fixed-point rendering without a sign on values that round to zero.
inline std::string format_value(double v, int decimals) {
    auto s = fmt::format("{:.{}f}", v, decimals);
    if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
    return s;
}

/// "mean±stdev", e.g. "44±4".
inline std::string format_mean_stdev(const RunStats& s, int decimals) {
    return format_value(s.mean, decimals) + "±" + format_value(s.stdev, decimals);
}

namespace detail {

inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::string md_field(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (c == '|') out += '\\';
        out += c;
    }
    return out;
}

class TableWriter {
public:
    explicit TableWriter(ReportFormat format) : format_(format) {}

    void row(const std::vector<std::string>& cells) {
        if (format_ == ReportFormat::csv) {
            for (std::size_t i = 0; i < cells.size(); ++i) out_ += (i ? "," : "") + csv_field(cells[i]);
            out_ += '\n';
            return;
        }
        out_ += '|';
        for (const auto& c : cells) out_ += ' ' + md_field(c) + " |";
        out_ += '\n';
        if (!header_done_) {
            out_ += '|';
            for (std::size_t i = 0; i < cells.size(); ++i) out_ += i < 2 ? " --- |" : " ---: |";
            out_ += '\n';
            header_done_ = true;
        }
    }

    const std::string& str() const noexcept { return out_; }

private:
    ReportFormat format_;
    std::string out_;
    bool header_done_ = false;
};

inline std::string file_safe(std::string_view s) {
    std::string out;
    for (char c : s) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' ||
                        c == '-' || c == '_';
        out += ok ? c : '_';
    }
    return out;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << content) || !out.flush()) throw Error("cannot write '" + path.string() + "'");
}

inline std::string exact(double v) { return fmt::format("{:.17g}", v); }

inline std::string exact(const std::optional<double>& v) { return v ? exact(*v) : "NA"; }

}  // namespace detail

/// Criterion table in the layout rows = data sets, columns = methods, with a
/// "min" row and a "mean±stdev" row per data set.
inline std::string criterion_table(const ReportBundle& bundle, Criterion c, ReportFormat format) {
    detail::TableWriter t(format);
    std::vector<std::string> header{"dataset", "statistic"};
    for (Method m : bundle.config.methods) header.emplace_back(1, method_letter(m));
    t.row(header);
    const int dec = criterion_decimals(c);
    for (const auto& d : bundle.datasets) {
        std::vector<std::string> min_row{d.name, "min"}, mean_row{d.name, "mean±stdev"};
        for (Method m : bundle.config.methods) {
            const auto* mr = d.find(m);
            const auto& s = mr ? mr->stat(c) : std::nullopt;
            min_row.push_back(s ? format_value(s->min, dec) : "NA");
            mean_row.push_back(s ? format_mean_stdev(*s, dec) : "NA");
        }
        t.row(min_row);
        t.row(mean_row);
    }
    return t.str();
}

/// One line per criterion with the test outcomes and the grouped ordering.
inline std::string rankings_table(const ReportBundle& bundle, Statistic s, ReportFormat format, double alpha) {
    detail::TableWriter t(format);
    t.row({"criterion", "statistic", "friedman_chi2", "friedman_p", "iman_davenport_f", "iman_davenport_p", "posthoc",
           "ordering"});
    for (Criterion c : all_criteria) {
        std::vector<std::string> row{std::string(criterion_name(c)), std::string(statistic_name(s))};
        try {
            const auto rep = rank_and_test(bundle, c, s, alpha);
            row.push_back(fmt::format("{:.4f}", rep.friedman.statistic));
            row.push_back(fmt::format("{:.4g}", rep.friedman.p_value));
            row.push_back(rep.iman_davenport.degenerate ? "inf" : fmt::format("{:.4f}", rep.iman_davenport.statistic));
            row.push_back(fmt::format("{:.4g}", rep.iman_davenport.p_value));
            if (!rep.posthoc) {
                row.push_back("none");
                row.push_back(rep.note);
            } else {
                row.push_back(rep.posthoc->method == stats::PosthocMethod::bergmann_hommel ? "bergmann-hommel" : "holm");
                row.push_back(rep.ordering);
            }
        } catch (const Error&) {
            for (int i = 0; i < 5; ++i) row.push_back("NA");
            row.push_back("needs at least two data sets and two methods");
        }
        t.row(row);
    }
    return t.str();
}

/// Per-run records of one (data set, method) pair at full precision.
inline std::string runs_csv(const MethodResult& mr) {
    std::string out = "run,seed,initial_sse,final_sse,rand,vd,vi,iterations,cpu_ms\n";
    for (const auto& r : mr.runs) {
        out += fmt::format("{},{},{},{},{},{},{},{},{}\n", r.run, r.seed, detail::exact(r.initial_sse),
                           detail::exact(r.final_sse), detail::exact(r.rand), detail::exact(r.vd),
                           detail::exact(r.vi), r.iterations, detail::exact(r.cpu_ms));
    }
    return out;
}

/// Writes `<criterion>.{csv,md}`, `rankings_<statistic>.{csv,md}` and
/// `runs/<dataset>__<method>.csv` into `dir`. Returns the files written.
inline std::vector<std::filesystem::path> emit_report(const ReportBundle& bundle, ReportFormat format,
                                                      const std::filesystem::path& dir, double alpha = 0.05) {
    if (bundle.config.methods.empty()) throw Error("report: no methods");
    if (bundle.datasets.empty()) throw Error("report: no data sets");
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir / "runs", ec);
    if (ec) throw Error("cannot create output directory '" + dir.string() + "': " + ec.message());
    const std::string ext = format == ReportFormat::csv ? ".csv" : ".md";
    std::vector<fs::path> written;
    auto put = [&](const fs::path& p, const std::string& content) {
        detail::write_file(p, content);
        written.push_back(p);
    };
    for (Criterion c : all_criteria) put(dir / (std::string(criterion_name(c)) + ext), criterion_table(bundle, c, format));
    for (Statistic s : all_statistics) {
        put(dir / ("rankings_" + std::string(statistic_name(s)) + ext), rankings_table(bundle, s, format, alpha));
    }
    for (const auto& d : bundle.datasets) {
        for (const auto& mr : d.methods) {
            put(dir / "runs" / (detail::file_safe(d.name) + "__" + std::string(method_name(mr.method)) + ".csv"),
                runs_csv(mr));
        }
    }
    if (!bundle.warnings.empty()) {
        std::string w;
        for (const auto& line : bundle.warnings) w += line + '\n';
        put(dir / "warnings.txt", w);
    }
    return written;
}

}  // namespace kinit

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "oa/scenario.hpp"

namespace oa {

namespace {

void append_header_block(std::ostringstream& out, const char* prefix, Eigen::Index count) {
    for (Eigen::Index i = 0; i < count; ++i) out << ',' << prefix << '_' << i;
}

std::string format(double v) {
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

}  // namespace

void emit_trace(const Trace& trace, const std::vector<double>& agreement,
                const std::vector<double>& gamma, const std::string& path) {
    const size_t steps = trace.t.size();
    if (!agreement.empty() && agreement.size() != steps)
        throw std::invalid_argument("emit_trace: agreement series length mismatch");
    if (!gamma.empty() && gamma.size() != steps)
        throw std::invalid_argument("emit_trace: gamma series length mismatch");

    std::ostringstream out;
    out << 't';
    append_header_block(out, "w", trace.w.rows());
    append_header_block(out, "x", trace.x.rows());
    append_header_block(out, "eta", trace.eta.rows());
    append_header_block(out, "y", trace.y.rows());
    append_header_block(out, "lambda", trace.lambda.rows());
    out << ",agreement_error,gamma_distance\n";

    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (size_t k = 0; k < steps; ++k) {
        const auto col = static_cast<Eigen::Index>(k);
        out << format(trace.t[k]);
        for (const Matrix* m : {&trace.w, &trace.x, &trace.eta, &trace.y, &trace.lambda})
            for (Eigen::Index i = 0; i < m->rows(); ++i) out << ',' << format((*m)(i, col));
        out << ',' << format(agreement.empty() ? nan : agreement[k]);
        out << ',' << format(gamma.empty() ? nan : gamma[k]);
        out << '\n';
    }

    std::ofstream file(path);
    if (!file) throw std::runtime_error("emit_trace: cannot open " + path + " for writing");
    file << out.str();
    if (!file) throw std::runtime_error("emit_trace: write to " + path + " failed");
}

StoredTrace read_trace(const std::string& path) {
    std::ifstream file(path);
    if (!file) throw std::runtime_error("read_trace: cannot open " + path);

    std::string header;
    if (!std::getline(file, header)) throw std::runtime_error("read_trace: empty file " + path);

    std::vector<std::string> names;
    {
        std::istringstream hs(header);
        std::string tok;
        while (std::getline(hs, tok, ',')) names.push_back(tok);
    }
    auto count_prefix = [&](const std::string& prefix) {
        Eigen::Index n = 0;
        for (const auto& name : names)
            if (name.rfind(prefix + "_", 0) == 0) ++n;
        return n;
    };
    const Eigen::Index qn = count_prefix("w"), rn = count_prefix("x"), en = count_prefix("eta"),
                       yn = count_prefix("y"), ln = count_prefix("lambda");
    if (names.empty() || names.front() != "t" || names.back() != "gamma_distance")
        throw std::runtime_error("read_trace: unrecognized header in " + path);
    if (static_cast<size_t>(1 + qn + rn + en + yn + ln + 2) != names.size())
        throw std::runtime_error("read_trace: header column mismatch in " + path);

    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(file, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        if (row.size() != names.size())
            throw std::runtime_error("read_trace: short row in " + path);
        rows.push_back(std::move(row));
    }

    StoredTrace out;
    const auto steps = static_cast<Eigen::Index>(rows.size());
    out.w.resize(qn, steps);
    out.x.resize(rn, steps);
    out.eta.resize(en, steps);
    out.y.resize(yn, steps);
    out.lambda.resize(ln, steps);
    for (Eigen::Index k = 0; k < steps; ++k) {
        const auto& row = rows[static_cast<size_t>(k)];
        size_t c = 0;
        out.t.push_back(row[c++]);
        for (Eigen::Index i = 0; i < qn; ++i) out.w(i, k) = row[c++];
        for (Eigen::Index i = 0; i < rn; ++i) out.x(i, k) = row[c++];
        for (Eigen::Index i = 0; i < en; ++i) out.eta(i, k) = row[c++];
        for (Eigen::Index i = 0; i < yn; ++i) out.y(i, k) = row[c++];
        for (Eigen::Index i = 0; i < ln; ++i) out.lambda(i, k) = row[c++];
        out.agreement.push_back(row[c++]);
        out.gamma.push_back(row[c++]);
    }
    return out;
}

void emit_report(const std::vector<std::pair<std::string, std::string>>& entries,
                 const std::string& path) {
    std::ofstream file(path);
    if (!file) throw std::runtime_error("emit_report: cannot open " + path + " for writing");
    for (const auto& [key, value] : entries) file << key << ": " << value << '\n';
    if (!file) throw std::runtime_error("emit_report: write to " + path + " failed");
}

}  // namespace oa

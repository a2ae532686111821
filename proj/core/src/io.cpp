#include "binica/io.hpp"

#include "binica/error.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace binica::io {

namespace {

Json matrix_rows(const Matrix& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            row.push_back(m(i, j));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

Json vector_json(const Vector& v) {
    Json arr = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        arr.push_back(v[i]);
    }
    return arr;
}

Json vectors_json(const std::vector<Vector>& vs) {
    Json arr = Json::array();
    for (const auto& v : vs) {
        arr.push_back(vector_json(v));
    }
    return arr;
}

const Json& field(const Json& doc, const char* name) {
    if (!doc.is_object() || !doc.contains(name)) {
        throw DataError(std::string("missing field '") + name + "'");
    }
    return doc.at(name);
}

double number(const Json& j, const std::string& what) {
    if (j.is_null()) {
        return -std::numeric_limits<double>::infinity();
    }
    if (!j.is_number()) {
        throw DataError(what + " must be a number");
    }
    return j.get<double>();
}

int integer(const Json& doc, const char* name) {
    const Json& j = field(doc, name);
    if (!j.is_number_integer()) {
        throw DataError(std::string("field '") + name + "' must be an integer");
    }
    return j.get<int>();
}

Vector read_vector(const Json& j, Eigen::Index expected, const std::string& what) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != expected) {
        throw DataError(what + " must be an array of length " + std::to_string(expected));
    }
    Vector v(expected);
    for (Eigen::Index i = 0; i < expected; ++i) {
        v[i] = number(j[static_cast<std::size_t>(i)], what);
    }
    return v;
}

std::vector<Vector> read_vectors(const Json& j, int count, Eigen::Index length, const std::string& what) {
    if (!j.is_array() || static_cast<int>(j.size()) != count) {
        throw DataError(what + " must hold " + std::to_string(count) + " vectors");
    }
    std::vector<Vector> out;
    for (int u = 0; u < count; ++u) {
        out.push_back(read_vector(j[static_cast<std::size_t>(u)], length, what));
    }
    return out;
}

Matrix read_matrix(const Json& j, Eigen::Index rows, Eigen::Index cols, const std::string& what) {
    Matrix m(rows, cols);
    if (j.is_array() && static_cast<Eigen::Index>(j.size()) == rows * cols && (j.empty() || j[0].is_number())) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            for (Eigen::Index k = 0; k < cols; ++k) {
                m(i, k) = number(j[static_cast<std::size_t>(i * cols + k)], what);
            }
        }
        return m;
    }
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
        throw DataError(what + " must be " + std::to_string(rows) + " x " + std::to_string(cols));
    }
    for (Eigen::Index i = 0; i < rows; ++i) {
        m.row(i) = read_vector(j[static_cast<std::size_t>(i)], cols, what).transpose();
    }
    return m;
}

void check_version(const Json& doc) {
    if (integer(doc, "format_version") != kFormatVersion) {
        throw DataError("unsupported format_version");
    }
}

optim::Status status_from_string(const std::string& s) {
    for (const auto st : {optim::Status::converged, optim::Status::max_iterations, optim::Status::budget_exhausted,
                          optim::Status::line_search_failed}) {
        if (optim::to_string(st) == s) {
            return st;
        }
    }
    throw DataError("unknown status '" + s + "'");
}

std::string trim(std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) {
        s.pop_back();
    }
    std::size_t start = 0;
    while (start < s.size() && (s[start] == ' ' || s[start] == '\t')) {
        ++start;
    }
    return s.substr(start);
}

std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> parts;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) {
        parts.push_back(trim(item));
    }
    if (!line.empty() && line.back() == ',') {
        parts.emplace_back();
    }
    return parts;
}

}  // namespace

Json model_to_json(const BicaModel& model) {
    model.validate();
    std::vector<Vector> sds;
    for (const auto& v : model.segment_variances) {
        sds.emplace_back(v.cwiseSqrt());
    }
    Json doc;
    doc["format_version"] = kFormatVersion;
    doc["n"] = model.n();
    doc["n_z"] = model.n_z();
    doc["n_u"] = model.n_u();
    doc["mixing"] = matrix_rows(model.mixing);
    doc["segment_means"] = vectors_json(model.segment_means);
    doc["segment_sds"] = vectors_json(sds);
    return doc;
}

BicaModel model_from_json(const Json& doc) {
    check_version(doc);
    const int n = integer(doc, "n");
    const int n_z = integer(doc, "n_z");
    const int n_u = integer(doc, "n_u");
    if (n < 1 || n_z < 1 || n_z > n || n_u < 1) {
        throw DataError("model: need n >= n_z >= 1 and n_u >= 1");
    }
    BicaModel model;
    model.mixing = read_matrix(field(doc, "mixing"), n, n_z, "mixing");
    model.segment_means = read_vectors(field(doc, "segment_means"), n_u, n_z, "segment_means");
    for (const auto& sd : read_vectors(field(doc, "segment_sds"), n_u, n_z, "segment_sds")) {
        if (!(sd.minCoeff() > 0.0)) {
            throw DataError("segment_sds must be positive");
        }
        model.segment_variances.emplace_back(sd.cwiseProduct(sd));
    }
    try {
        model.validate();
    } catch (const std::invalid_argument& ex) {
        throw DataError(std::string("model: ") + ex.what());
    }
    return model;
}

void write_dataset_csv(std::ostream& out, const SegmentedBinaryDataset& data) {
    out << "segment";
    for (int i = 1; i <= data.n(); ++i) {
        out << ",x" << i;
    }
    out << '\n';
    for (std::size_t r = 0; r < data.size(); ++r) {
        out << data.segment(r) + 1;
        for (const std::uint8_t v : data.row(r)) {
            out << ',' << static_cast<int>(v);
        }
        out << '\n';
    }
}

SegmentedBinaryDataset read_dataset_csv(std::istream& in, std::optional<int> n_u) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) {
            header = split_commas(trim(line));
            break;
        }
    }
    if (header.empty()) {
        throw DataError("data: empty input, expected header 'segment,x1,...,xn'");
    }
    const int n = static_cast<int>(header.size()) - 1;
    if (header[0] != "segment" || n < 1) {
        throw DataError("data line " + std::to_string(line_no) + ": expected header 'segment,x1,...,xn'");
    }
    for (int i = 1; i <= n; ++i) {
        if (header[static_cast<std::size_t>(i)] != "x" + std::to_string(i)) {
            throw DataError("data line " + std::to_string(line_no) + ": column " + std::to_string(i + 1) +
                            " should be 'x" + std::to_string(i) + "'");
        }
    }

    std::vector<int> segments;
    std::vector<std::uint8_t> values;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty()) {
            continue;
        }
        const auto parts = split_commas(t);
        const auto where = "data line " + std::to_string(line_no) + ": ";
        if (static_cast<int>(parts.size()) != n + 1) {
            throw DataError(where + "expected " + std::to_string(n + 1) + " fields, got " +
                            std::to_string(parts.size()));
        }
        int segment = 0;
        try {
            std::size_t used = 0;
            segment = std::stoi(parts[0], &used);
            if (used != parts[0].size()) {
                throw std::invalid_argument("trailing characters");
            }
        } catch (const std::exception&) {
            throw DataError(where + "segment '" + parts[0] + "' is not an integer");
        }
        if (segment < 1 || (n_u && segment > *n_u)) {
            throw DataError(where + "segment " + std::to_string(segment) + " out of range");
        }
        segments.push_back(segment - 1);
        for (int i = 1; i <= n; ++i) {
            const std::string& v = parts[static_cast<std::size_t>(i)];
            if (v != "0" && v != "1") {
                throw DataError(where + "x" + std::to_string(i) + " must be 0 or 1, got '" + v + "'");
            }
            values.push_back(v == "1" ? 1 : 0);
        }
    }
    int max_segment = 0;
    for (const int s : segments) {
        max_segment = std::max(max_segment, s + 1);
    }
    if (segments.empty()) {
        throw DataError("data: no observations");
    }
    SegmentedBinaryDataset data(n, n_u.value_or(max_segment));
    for (std::size_t r = 0; r < segments.size(); ++r) {
        data.add(segments[r], std::span<const std::uint8_t>(values.data() + r * static_cast<std::size_t>(n),
                                                           static_cast<std::size_t>(n)));
    }
    return data;
}

Json fit_result_to_json(const FitResult& fit) {
    Json doc;
    doc["format_version"] = kFormatVersion;
    doc["method"] = fit.method;
    doc["n"] = fit.mixing.rows();
    doc["n_z"] = fit.mixing.cols();
    doc["n_u"] = fit.source_variances.size();
    doc["mixing"] = matrix_rows(fit.mixing);
    doc["source_variances"] = vectors_json(fit.source_variances);
    if (!fit.scales.empty()) {
        doc["scales"] = vectors_json(fit.scales);
    }
    if (!fit.source_means.empty()) {
        doc["source_means"] = vectors_json(fit.source_means);
    }
    doc["objective"] = fit.objective;
    doc["status"] = std::string(optim::to_string(fit.status));
    doc["best_restart"] = fit.best_restart;
    doc["likely_non_identifiable"] = fit.likely_non_identifiable;
    doc["degenerate_pairs"] = fit.degenerate_pairs;
    Json restarts = Json::array();
    for (const auto& r : fit.restarts) {
        Json rec;
        rec["seed"] = r.seed;
        rec["objective"] = r.objective;
        rec["status"] = std::string(optim::to_string(r.status));
        rec["iterations"] = r.iterations;
        rec["seconds"] = r.seconds;
        rec["failed"] = r.failed;
        if (r.failed) {
            rec["error"] = r.error;
        }
        restarts.push_back(std::move(rec));
    }
    doc["restarts"] = std::move(restarts);
    doc["timings"] = {{"pairwise_seconds", fit.timings.pairwise_seconds},
                      {"optimize_seconds", fit.timings.optimize_seconds},
                      {"total_seconds", fit.timings.total_seconds}};
    return doc;
}

void validate_fit_result_json(const Json& doc) {
    check_version(doc);
    const Json& method = field(doc, "method");
    if (!method.is_string() || (method != "blica" && method != "fullmle")) {
        throw DataError("field 'method' must be \"blica\" or \"fullmle\"");
    }
    const int n = integer(doc, "n");
    const int n_z = integer(doc, "n_z");
    const int n_u = integer(doc, "n_u");
    if (n < 1 || n_z < 1 || n_z > n || n_u < 1) {
        throw DataError("result: need n >= n_z >= 1 and n_u >= 1");
    }
    read_matrix(field(doc, "mixing"), n, n_z, "mixing");
    for (const auto& v : read_vectors(field(doc, "source_variances"), n_u, n_z, "source_variances")) {
        if (!(v.array() > 0.0).all()) {
            throw DataError("source_variances must be positive");
        }
    }
    if (method == "blica") {
        read_vectors(field(doc, "scales"), n_u, n, "scales");
    } else {
        read_vectors(field(doc, "source_means"), n_u, n_z, "source_means");
    }
    number(field(doc, "objective"), "objective");
    status_from_string(field(doc, "status").get<std::string>());
    const Json& restarts = field(doc, "restarts");
    if (!restarts.is_array() || restarts.empty()) {
        throw DataError("field 'restarts' must be a nonempty array");
    }
    const int best = integer(doc, "best_restart");
    if (best < 0 || best >= static_cast<int>(restarts.size())) {
        throw DataError("best_restart out of range");
    }
    const Json& timings = field(doc, "timings");
    for (const char* key : {"pairwise_seconds", "optimize_seconds", "total_seconds"}) {
        if (!(number(field(timings, key), key) >= 0.0)) {
            throw DataError(std::string(key) + " must be nonnegative");
        }
    }
}

FitResult fit_result_from_json(const Json& doc) {
    validate_fit_result_json(doc);
    const int n = integer(doc, "n");
    const int n_z = integer(doc, "n_z");
    const int n_u = integer(doc, "n_u");
    FitResult fit;
    fit.method = doc.at("method").get<std::string>();
    fit.mixing = read_matrix(doc.at("mixing"), n, n_z, "mixing");
    fit.source_variances = read_vectors(doc.at("source_variances"), n_u, n_z, "source_variances");
    if (doc.contains("scales")) {
        fit.scales = read_vectors(doc.at("scales"), n_u, n, "scales");
    }
    if (doc.contains("source_means")) {
        fit.source_means = read_vectors(doc.at("source_means"), n_u, n_z, "source_means");
    }
    fit.objective = number(doc.at("objective"), "objective");
    fit.status = status_from_string(doc.at("status").get<std::string>());
    fit.best_restart = doc.at("best_restart").get<int>();
    fit.likely_non_identifiable = doc.value("likely_non_identifiable", false);
    fit.degenerate_pairs = doc.value("degenerate_pairs", 0);
    for (const auto& rec : doc.at("restarts")) {
        RestartRecord r;
        r.seed = rec.value("seed", Seed{0});
        r.objective = number(rec.value("objective", Json()), "restart objective");
        r.status = status_from_string(rec.value("status", std::string("converged")));
        r.iterations = rec.value("iterations", 0);
        r.seconds = rec.value("seconds", 0.0);
        r.failed = rec.value("failed", false);
        r.error = rec.value("error", std::string());
        fit.restarts.push_back(std::move(r));
    }
    const Json& t = doc.at("timings");
    fit.timings.pairwise_seconds = t.at("pairwise_seconds").get<double>();
    fit.timings.optimize_seconds = t.at("optimize_seconds").get<double>();
    fit.timings.total_seconds = t.at("total_seconds").get<double>();
    return fit;
}

Json pairwise_stats_to_json(const PairwiseStats& stats) {
    Json doc;
    doc["format_version"] = kFormatVersion;
    doc["n"] = stats.n();
    doc["n_u"] = stats.n_u();
    doc["means"] = vectors_json(stats.means);
    Json corr = Json::array();
    for (const auto& c : stats.correlations) {
        corr.push_back(matrix_rows(c));
    }
    doc["correlations"] = std::move(corr);
    doc["counts"] = stats.counts;
    doc["degenerate_pairs"] = stats.degenerate_pairs;
    return doc;
}

PairwiseStats pairwise_stats_from_json(const Json& doc) {
    check_version(doc);
    const int n = integer(doc, "n");
    const int n_u = integer(doc, "n_u");
    if (n < 1 || n_u < 1) {
        throw DataError("pairwise stats: need n >= 1 and n_u >= 1");
    }
    PairwiseStats stats;
    stats.means = read_vectors(field(doc, "means"), n_u, n, "means");
    const Json& corr = field(doc, "correlations");
    if (!corr.is_array() || static_cast<int>(corr.size()) != n_u) {
        throw DataError("correlations must hold n_u matrices");
    }
    for (const auto& c : corr) {
        stats.correlations.push_back(read_matrix(c, n, n, "correlations"));
    }
    const Vector counts = read_vector(field(doc, "counts"), n_u, "counts");
    stats.counts.assign(counts.data(), counts.data() + counts.size());
    stats.degenerate_pairs = doc.value("degenerate_pairs", 0);
    return stats;
}

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& ex) {
        throw DataError(path.string() + ": " + ex.what());
    }
}

void write_json_file(const std::filesystem::path& path, const Json& doc) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << doc.dump(2) << '\n';
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

void write_model(const std::filesystem::path& path, const BicaModel& model) {
    write_json_file(path, model_to_json(model));
}

BicaModel read_model(const std::filesystem::path& path) {
    try {
        return model_from_json(read_json_file(path));
    } catch (const DataError& ex) {
        throw DataError(path.string() + ": " + ex.what());
    }
}

void write_dataset(const std::filesystem::path& path, const SegmentedBinaryDataset& data) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    write_dataset_csv(out, data);
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

SegmentedBinaryDataset read_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    try {
        return read_dataset_csv(in);
    } catch (const DataError& ex) {
        throw DataError(path.string() + ": " + ex.what());
    }
}

}  // namespace binica::io

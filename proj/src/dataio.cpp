#include "dagi/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <system_error>

#include <json.hpp>

#include "dagi/errors.hpp"

namespace dagi {

namespace {

constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void fnv_bytes(std::uint64_t& h, const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
}

void fnv_string(std::uint64_t& h, const std::string& s) {
    fnv_bytes(h, s.data(), s.size());
    const unsigned char sep = 0;
    fnv_bytes(h, &sep, 1);
}

std::vector<std::string> split_csv_line(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

double parse_double_cell(const std::string& cell, std::size_t row, const std::string& column) {
    double value = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end)
        throw FormatError("row " + std::to_string(row) + ", column " + column +
                          ": cannot parse '" + cell + "' as a number");
    if (!std::isfinite(value))
        throw FormatError("row " + std::to_string(row) + ", column " + column +
                          ": non-finite value '" + cell + "'");
    return value;
}

int parse_label_cell(const std::string& cell, std::size_t row, const std::string& column) {
    int value = 0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end || (value != 0 && value != 1))
        throw FormatError("row " + std::to_string(row) + ", column " + column +
                          ": label must be 0 or 1, got '" + cell + "'");
    return value;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

void check_name(const std::string& name, const char* what) {
    if (name.empty()) throw SchemaError(std::string(what) + " name is empty");
    if (name.find('.') != std::string::npos || name.find(',') != std::string::npos)
        throw SchemaError(std::string(what) + " name '" + name +
                          "' contains a reserved character ('.' or ',')");
}

void check_unique(std::vector<std::string> names, const char* what) {
    std::sort(names.begin(), names.end());
    const auto dup = std::adjacent_find(names.begin(), names.end());
    if (dup != names.end())
        throw SchemaError(std::string(what) + " name '" + *dup + "' appears twice");
}

} // namespace

std::string name_list_diff(const std::string& what, const std::vector<std::string>& a,
                           const std::vector<std::string>& b) {
    if (a == b) return {};
    std::ostringstream os;
    os << what << ": model has " << a.size() << ", data has " << b.size();
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (a[i] != b[i]) {
            os << "; first difference at position " << i << " ('" << a[i] << "' vs '" << b[i]
               << "')";
            break;
        }
    }
    return os.str();
}

std::string format_double(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc{}) throw ContractError("format_double: value does not fit");
    return std::string(buf, ptr);
}

void atomic_write(const std::string& path, const std::string& contents) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp);
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw IoError("short write to " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw IoError("cannot rename " + tmp + " to " + path);
}

void DatasetSchema::validate() const {
    if (roi_names.empty()) throw SchemaError("schema has no ROI names");
    if (shared_measurements.empty()) throw SchemaError("schema has no shared measurements");
    for (const auto& n : roi_names) check_name(n, "ROI");
    for (const auto& n : shared_measurements) check_name(n, "measurement");
    for (const auto& n : target_measurements) check_name(n, "measurement");
    for (const auto& n : confound_columns) check_name(n, "confound");
    if (!label_column.empty()) check_name(label_column, "label column");
    check_unique(roi_names, "ROI");
    std::vector<std::string> measurements = shared_measurements;
    measurements.insert(measurements.end(), target_measurements.begin(),
                        target_measurements.end());
    check_unique(measurements, "measurement");
    std::vector<std::string> front = confound_columns;
    front.push_back("subject_id");
    if (!label_column.empty()) front.push_back(label_column);
    check_unique(front, "leading column");
}

std::vector<std::string> DatasetSchema::header(bool include_targets) const {
    std::vector<std::string> cols;
    cols.push_back("subject_id");
    if (!label_column.empty()) cols.push_back(label_column);
    for (const auto& c : confound_columns) cols.push_back(c);
    auto add_block = [&](const std::vector<std::string>& measurements) {
        for (const auto& m : measurements)
            for (const auto& r : roi_names) cols.push_back(r + "." + m);
    };
    add_block(shared_measurements);
    if (include_targets) add_block(target_measurements);
    return cols;
}

std::uint64_t DatasetSchema::fingerprint() const {
    std::uint64_t h = kFnvOffset;
    const std::uint64_t n = roi_names.size();
    fnv_bytes(h, &n, sizeof n);
    for (const auto& r : roi_names) fnv_string(h, r);
    const unsigned char section = 0xff;
    fnv_bytes(h, &section, 1);
    for (const auto& m : shared_measurements) fnv_string(h, m);
    return h;
}

std::string DatasetSchema::to_json() const {
    nlohmann::ordered_json j;
    j["roi_names"] = roi_names;
    j["shared_measurements"] = shared_measurements;
    j["target_measurements"] = target_measurements;
    j["label_column"] = label_column;
    j["confound_columns"] = confound_columns;
    return j.dump(2) + "\n";
}

DatasetSchema DatasetSchema::from_json(const std::string& text) {
    DatasetSchema schema;
    try {
        const auto j = nlohmann::json::parse(text);
        schema.roi_names = j.at("roi_names").get<std::vector<std::string>>();
        schema.shared_measurements =
            j.at("shared_measurements").get<std::vector<std::string>>();
        schema.target_measurements =
            j.value("target_measurements", std::vector<std::string>{});
        schema.label_column = j.value("label_column", std::string("label"));
        schema.confound_columns = j.value("confound_columns", std::vector<std::string>{});
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("invalid schema JSON: ") + e.what());
    }
    schema.validate();
    return schema;
}

DatasetSchema load_schema(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return DatasetSchema::from_json(buffer.str());
}

void save_schema(const DatasetSchema& schema, const std::string& path) {
    schema.validate();
    atomic_write(path, schema.to_json());
}

void PredictionBlock::validate() const {
    check_name(method_tag, "method tag");
    for (const auto& n : roi_names) check_name(n, "ROI");
    for (const auto& n : measurement_names) check_name(n, "measurement");
    check_unique(roi_names, "ROI");
    check_unique(measurement_names, "measurement");
    check_unique(subject_ids, "subject id");
    if (subject_ids.size() != values.size())
        throw DimensionError("prediction block: " + std::to_string(subject_ids.size()) +
                             " ids vs " + std::to_string(values.size()) + " blocks");
    for (const auto& m : values) {
        if (m.rows() != roi_names.size() || m.cols() != measurement_names.size())
            throw DimensionError("prediction block: subject block " + m.shape() +
                                 " does not match " + std::to_string(roi_names.size()) + "x" +
                                 std::to_string(measurement_names.size()));
        if (!m.all_finite()) throw ContractError("prediction block: non-finite value");
    }
}

std::size_t Cohort::index_of(const std::string& subject_id) const {
    for (std::size_t i = 0; i < subjects.size(); ++i)
        if (subjects[i].subject_id == subject_id) return i;
    throw SchemaError("unknown subject id '" + subject_id + "'");
}

std::vector<int> Cohort::labels() const {
    std::vector<int> out;
    out.reserve(subjects.size());
    for (const auto& s : subjects) {
        if (!s.label)
            throw ContractError("subject '" + s.subject_id + "' has no label");
        out.push_back(*s.label);
    }
    return out;
}

Cohort load_csv(const std::string& path, const DatasetSchema& schema) {
    schema.validate();
    const auto lines = read_lines(path);
    if (lines.empty()) throw FormatError(path + ": empty file, header expected");

    const auto actual = split_csv_line(lines[0]);
    const auto bare = schema.header(false);
    const auto full = schema.header(true);
    bool with_targets;
    if (actual == full && schema.q() > 0) {
        with_targets = true;
    } else if (actual == bare) {
        with_targets = false;
    } else {
        // Describe the first disagreement against the closer candidate.
        const auto& expect =
            (schema.q() > 0 && actual.size() > bare.size()) ? full : bare;
        std::size_t i = 0;
        while (i < actual.size() && i < expect.size() && actual[i] == expect[i]) ++i;
        if (i < expect.size() && (i >= actual.size() || actual[i] != expect[i])) {
            if (i >= actual.size())
                throw FormatError(path + ": missing column " + expect[i]);
            throw FormatError(path + ": header column " + std::to_string(i + 1) +
                              " is '" + actual[i] + "', expected " + expect[i]);
        }
        throw FormatError(path + ": unexpected extra column '" + actual[i] + "'");
    }

    const std::size_t v = schema.v(), p = schema.p(), q = schema.q();
    const bool labeled = !schema.label_column.empty();
    const std::size_t n_fields = actual.size();
    Cohort cohort;
    cohort.schema = schema;
    cohort.has_targets = with_targets;
    std::set<std::string> seen;

    for (std::size_t li = 1; li < lines.size(); ++li) {
        if (lines[li].empty() || lines[li] == "\r") continue;
        const std::size_t row = li + 1; // 1-based physical line
        const auto cells = split_csv_line(lines[li]);
        if (cells.size() != n_fields)
            throw FormatError(path + ": row " + std::to_string(row) + " has " +
                              std::to_string(cells.size()) + " fields, expected " +
                              std::to_string(n_fields));
        SubjectTable s;
        std::size_t c = 0;
        s.subject_id = cells[c++];
        if (s.subject_id.empty())
            throw FormatError(path + ": row " + std::to_string(row) + ": empty subject id");
        if (!seen.insert(s.subject_id).second)
            throw FormatError(path + ": row " + std::to_string(row) +
                              ": duplicate subject id '" + s.subject_id + "'");
        if (labeled) {
            s.label = parse_label_cell(cells[c], row, schema.label_column);
            ++c;
        }
        for (const auto& name : schema.confound_columns) {
            s.confounds.push_back(parse_double_cell(cells[c], row, name));
            ++c;
        }
        auto read_block = [&](std::size_t n_cols) {
            Matrix m(v, n_cols);
            for (std::size_t j = 0; j < n_cols; ++j)
                for (std::size_t r = 0; r < v; ++r) {
                    m(r, j) = parse_double_cell(cells[c], row, actual[c]);
                    ++c;
                }
            return m;
        };
        s.x_shared = read_block(p);
        if (with_targets) s.x_target = read_block(q);
        cohort.subjects.push_back(std::move(s));
    }
    return cohort;
}

void save_csv(const Cohort& cohort, const std::string& path) {
    cohort.schema.validate();
    const auto& schema = cohort.schema;
    const bool labeled = !schema.label_column.empty();
    if (!cohort.has_targets)
        for (const auto& s : cohort.subjects)
            if (s.x_target)
                throw ContractError("subject '" + s.subject_id +
                                    "' carries a target block in a cohort saved without "
                                    "target columns");
    for (const auto& block : cohort.extra)
        if (block.values.size() != cohort.subjects.size())
            throw DimensionError("prediction family '" + block.method_tag + "' has " +
                                 std::to_string(block.values.size()) + " blocks for " +
                                 std::to_string(cohort.subjects.size()) + " subjects");
    std::string out;

    auto header = schema.header(cohort.has_targets);
    for (const auto& block : cohort.extra)
        for (const auto& m : block.measurement_names)
            for (const auto& r : block.roi_names)
                header.push_back(r + "." + m + "." + block.method_tag);
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out += ',';
        out += header[i];
    }
    out += '\n';

    for (std::size_t si = 0; si < cohort.subjects.size(); ++si) {
        const auto& s = cohort.subjects[si];
        out += s.subject_id;
        if (labeled) {
            if (!s.label)
                throw ContractError("subject '" + s.subject_id + "' has no label to write");
            out += ',';
            out += std::to_string(*s.label);
        }
        if (s.confounds.size() != schema.confound_columns.size())
            throw DimensionError("subject '" + s.subject_id + "': " +
                                 std::to_string(s.confounds.size()) + " confounds vs " +
                                 std::to_string(schema.confound_columns.size()) + " columns");
        for (const double cv : s.confounds) {
            out += ',';
            out += format_double(cv);
        }
        auto write_block = [&](const Matrix& m) {
            for (std::size_t j = 0; j < m.cols(); ++j)
                for (std::size_t r = 0; r < m.rows(); ++r) {
                    out += ',';
                    out += format_double(m(r, j));
                }
        };
        if (s.x_shared.rows() != schema.v() || s.x_shared.cols() != schema.p())
            throw DimensionError("subject '" + s.subject_id + "': shared block " +
                                 s.x_shared.shape());
        write_block(s.x_shared);
        if (cohort.has_targets) {
            if (!s.x_target)
                throw ContractError("subject '" + s.subject_id + "' lacks the target block");
            if (s.x_target->rows() != schema.v() || s.x_target->cols() != schema.q())
                throw DimensionError("subject '" + s.subject_id + "': target block " +
                                     s.x_target->shape());
            write_block(*s.x_target);
        }
        for (const auto& block : cohort.extra) write_block(block.values[si]);
        out += '\n';
    }
    atomic_write(path, out);
}

Cohort normalize_confound(Cohort cohort, const std::vector<std::string>& measurements,
                          const std::string& confound_name) {
    const auto& schema = cohort.schema;
    const auto cit = std::find(schema.confound_columns.begin(), schema.confound_columns.end(),
                               confound_name);
    if (cit == schema.confound_columns.end())
        throw ConfigError("unknown confound column '" + confound_name + "'");
    const std::size_t ci = static_cast<std::size_t>(cit - schema.confound_columns.begin());

    std::vector<std::size_t> cols;
    for (const auto& m : measurements) {
        const auto mit = std::find(schema.shared_measurements.begin(),
                                   schema.shared_measurements.end(), m);
        if (mit == schema.shared_measurements.end())
            throw ConfigError("'" + m + "' is not a shared measurement; only shared columns "
                              "can be confound-normalized");
        cols.push_back(static_cast<std::size_t>(mit - schema.shared_measurements.begin()));
    }

    for (auto& s : cohort.subjects) {
        const double cv = s.confounds[ci];
        if (!(cv > 0.0))
            throw ContractError("subject '" + s.subject_id + "': confound " + confound_name +
                                " = " + format_double(cv) + " is not positive");
        for (const std::size_t m : cols)
            for (std::size_t r = 0; r < s.x_shared.rows(); ++r) s.x_shared(r, m) /= cv;
    }
    return cohort;
}

Cohort merge_predictions(Cohort cohort, const PredictionBlock& block) {
    block.validate();
    if (block.roi_names != cohort.schema.roi_names)
        throw SchemaError("prediction block ROI names do not match the cohort schema");
    for (const auto& existing : cohort.extra)
        if (existing.method_tag == block.method_tag)
            throw ContractError("prediction family '" + block.method_tag +
                                "' is already merged");

    std::map<std::string, std::size_t> where;
    for (std::size_t i = 0; i < block.subject_ids.size(); ++i)
        where[block.subject_ids[i]] = i;
    std::vector<std::string> missing, unknown;
    for (const auto& s : cohort.subjects)
        if (!where.count(s.subject_id)) missing.push_back(s.subject_id);
    {
        std::set<std::string> cohort_ids;
        for (const auto& s : cohort.subjects) cohort_ids.insert(s.subject_id);
        for (const auto& id : block.subject_ids)
            if (!cohort_ids.count(id)) unknown.push_back(id);
    }
    if (!missing.empty() || !unknown.empty()) {
        std::string msg = "prediction subject ids do not align;";
        auto list = [&](const char* what, const std::vector<std::string>& ids) {
            if (ids.empty()) return;
            msg += std::string(" ") + what + ":";
            for (std::size_t i = 0; i < ids.size() && i < 8; ++i) msg += " " + ids[i];
            if (ids.size() > 8) msg += " (+" + std::to_string(ids.size() - 8) + " more)";
            msg += ";";
        };
        list("missing from predictions", missing);
        list("not in cohort", unknown);
        throw ContractError(msg);
    }

    PredictionBlock ordered = block;
    ordered.subject_ids.clear();
    ordered.values.clear();
    for (const auto& s : cohort.subjects) {
        ordered.subject_ids.push_back(s.subject_id);
        ordered.values.push_back(block.values[where.at(s.subject_id)]);
    }
    cohort.extra.push_back(std::move(ordered));
    return cohort;
}

Cohort subset(const Cohort& cohort, const std::vector<std::size_t>& indices) {
    Cohort out;
    out.schema = cohort.schema;
    out.has_targets = cohort.has_targets;
    for (const auto& block : cohort.extra) {
        PredictionBlock sliced = block;
        sliced.subject_ids.clear();
        sliced.values.clear();
        out.extra.push_back(std::move(sliced));
    }
    for (const std::size_t i : indices) {
        if (i >= cohort.subjects.size())
            throw DimensionError("subset: index " + std::to_string(i) + " out of range for " +
                                 std::to_string(cohort.subjects.size()) + " subjects");
        out.subjects.push_back(cohort.subjects[i]);
        for (std::size_t b = 0; b < cohort.extra.size(); ++b) {
            out.extra[b].subject_ids.push_back(cohort.extra[b].subject_ids[i]);
            out.extra[b].values.push_back(cohort.extra[b].values[i]);
        }
    }
    return out;
}

void save_predictions(const PredictionBlock& block, const std::string& path) {
    block.validate();
    std::string out = "subject_id";
    for (const auto& m : block.measurement_names)
        for (const auto& r : block.roi_names)
            out += "," + r + "." + m + "." + block.method_tag;
    out += '\n';
    for (std::size_t i = 0; i < block.subject_ids.size(); ++i) {
        out += block.subject_ids[i];
        const Matrix& m = block.values[i];
        for (std::size_t j = 0; j < m.cols(); ++j)
            for (std::size_t r = 0; r < m.rows(); ++r) {
                out += ',';
                out += format_double(m(r, j));
            }
        out += '\n';
    }
    atomic_write(path, out);
}

PredictionBlock load_predictions(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.empty()) throw FormatError(path + ": empty file, header expected");
    const auto header = split_csv_line(lines[0]);
    if (header.empty() || header[0] != "subject_id")
        throw FormatError(path + ": first column must be subject_id");
    if (header.size() < 2)
        throw FormatError(path + ": no prediction columns");

    PredictionBlock block;
    std::vector<std::string> first_rois;
    std::string current_measurement;
    std::vector<std::string> current_rois;
    auto close_measurement = [&]() {
        if (current_measurement.empty()) return;
        if (block.measurement_names.empty()) {
            first_rois = current_rois;
            block.roi_names = current_rois;
        } else if (current_rois != first_rois) {
            throw FormatError(path + ": measurement '" + current_measurement +
                              "' lists different ROIs than the first measurement");
        }
        if (std::find(block.measurement_names.begin(), block.measurement_names.end(),
                      current_measurement) != block.measurement_names.end())
            throw FormatError(path + ": measurement '" + current_measurement +
                              "' columns are not contiguous");
        block.measurement_names.push_back(current_measurement);
        current_rois.clear();
    };
    for (std::size_t i = 1; i < header.size(); ++i) {
        const auto& col = header[i];
        const std::size_t d1 = col.find('.');
        const std::size_t d2 = (d1 == std::string::npos) ? std::string::npos
                                                         : col.find('.', d1 + 1);
        if (d1 == std::string::npos || d2 == std::string::npos ||
            col.find('.', d2 + 1) != std::string::npos)
            throw FormatError(path + ": column '" + col +
                              "' is not of the form roi.measurement.tag");
        const std::string roi = col.substr(0, d1);
        const std::string meas = col.substr(d1 + 1, d2 - d1 - 1);
        const std::string tag = col.substr(d2 + 1);
        if (block.method_tag.empty())
            block.method_tag = tag;
        else if (tag != block.method_tag)
            throw FormatError(path + ": mixed method tags '" + block.method_tag + "' and '" +
                              tag + "'");
        if (meas != current_measurement) {
            close_measurement();
            current_measurement = meas;
        }
        current_rois.push_back(roi);
    }
    close_measurement();

    const std::size_t v = block.roi_names.size();
    const std::size_t q = block.measurement_names.size();
    std::set<std::string> seen;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        if (lines[li].empty() || lines[li] == "\r") continue;
        const std::size_t row = li + 1;
        const auto cells = split_csv_line(lines[li]);
        if (cells.size() != header.size())
            throw FormatError(path + ": row " + std::to_string(row) + " has " +
                              std::to_string(cells.size()) + " fields, expected " +
                              std::to_string(header.size()));
        if (cells[0].empty())
            throw FormatError(path + ": row " + std::to_string(row) + ": empty subject id");
        if (!seen.insert(cells[0]).second)
            throw FormatError(path + ": row " + std::to_string(row) +
                              ": duplicate subject id '" + cells[0] + "'");
        block.subject_ids.push_back(cells[0]);
        Matrix m(v, q);
        std::size_t c = 1;
        for (std::size_t j = 0; j < q; ++j)
            for (std::size_t r = 0; r < v; ++r) {
                m(r, j) = parse_double_cell(cells[c], row, header[c]);
                ++c;
            }
        block.values.push_back(std::move(m));
    }
    block.validate();
    return block;
}

} // namespace dagi

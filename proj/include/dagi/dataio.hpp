#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dagi/matrix.hpp"

namespace dagi {

/// Column layout of a cohort file. Value columns are named `{roi}.{m}` and
/// ordered measurement-major: for each measurement, all ROIs in order —
/// shared measurements first, then (when present) target measurements.
struct DatasetSchema {
    std::vector<std::string> roi_names;
    std::vector<std::string> shared_measurements;
    std::vector<std::string> target_measurements; // may be empty
    std::string label_column = "label";           // empty means unlabeled data
    std::vector<std::string> confound_columns;

    std::size_t v() const { return roi_names.size(); }
    std::size_t p() const { return shared_measurements.size(); }
    std::size_t q() const { return target_measurements.size(); }

    /// Throws SchemaError on duplicate/empty names or names containing the
    /// reserved characters '.' and ',' (the column-name separator and the
    /// CSV delimiter).
    void validate() const;

    /// Header cells in file order: subject_id, label?, confounds..., values.
    std::vector<std::string> header(bool include_targets) const;

    /// FNV-1a over the graph/measurement identity (v, ROI names, shared
    /// measurement names): whatever a trained model's weights depend on.
    std::uint64_t fingerprint() const;

    std::string to_json() const;
    static DatasetSchema from_json(const std::string& text);
};

DatasetSchema load_schema(const std::string& path);
void save_schema(const DatasetSchema& schema, const std::string& path);

/// One subject's data. Absence of the target block is typed (no sentinel
/// fill): a cohort either carries X^M for every subject or for none.
struct SubjectTable {
    std::string subject_id;
    Matrix x_shared;                 // v x p
    std::optional<Matrix> x_target;  // v x q when present
    std::optional<int> label;        // 0/1
    std::vector<double> confounds;   // aligned with schema.confound_columns
};

/// Imputed (or ground-truth) target columns for a set of subjects, keyed by
/// a method tag. File columns are named `{roi}.{measurement}.{tag}`.
struct PredictionBlock {
    std::string method_tag;
    std::vector<std::string> roi_names;
    std::vector<std::string> measurement_names;
    std::vector<std::string> subject_ids;
    std::vector<Matrix> values; // one v x q' block per subject id

    void validate() const;
};

/// An ordered set of subjects under one schema. Iteration order is file
/// order; loading never reorders. `extra` holds prediction families merged
/// in-memory (saved as appended `{roi}.{m}.{tag}` columns).
struct Cohort {
    DatasetSchema schema;
    std::vector<SubjectTable> subjects;
    bool has_targets = false;
    std::vector<PredictionBlock> extra;

    std::size_t size() const { return subjects.size(); }
    std::size_t index_of(const std::string& subject_id) const; // SchemaError if absent
    std::vector<int> labels() const; // ContractError if any subject lacks one
};

/// Strict loader: the header must equal schema.header(...) exactly, with
/// target columns present for all subjects or none. Errors carry row and
/// column coordinates. Values must be finite; labels must be 0 or 1.
Cohort load_csv(const std::string& path, const DatasetSchema& schema);

/// Writes the cohort (and any merged prediction families) in canonical
/// column order with shortest round-trip decimals. Atomic: temp + rename.
void save_csv(const Cohort& cohort, const std::string& path);

/// Divides each listed shared measurement's columns by the subject's
/// confound value. Target columns are never rescaled.
Cohort normalize_confound(Cohort cohort, const std::vector<std::string>& measurements,
                          const std::string& confound_name);

/// Appends a prediction family. Subject id sets must match exactly (the
/// error lists ids missing from either side); block rows are re-ordered to
/// cohort order. Original columns are untouched.
Cohort merge_predictions(Cohort cohort, const PredictionBlock& block);

/// Cohort restricted to the given subject indices, in the given order
/// (merged prediction families are sliced alongside).
Cohort subset(const Cohort& cohort, const std::vector<std::size_t>& indices);

/// Standalone prediction file: subject_id + `{roi}.{m}.{tag}` columns. The
/// loader infers roi/measurement/tag structure from the header.
PredictionBlock load_predictions(const std::string& path);
void save_predictions(const PredictionBlock& block, const std::string& path);

/// Shortest decimal that parses back to exactly the same double.
std::string format_double(double value);

/// Human-readable mismatch between two name lists ("" when equal): sizes and
/// the first differing entry, labeled by `what`.
std::string name_list_diff(const std::string& what, const std::vector<std::string>& a,
                           const std::vector<std::string>& b);

/// Writes contents to a sibling temp file then renames over the target, so
/// readers never observe a truncated file.
void atomic_write(const std::string& path, const std::string& contents);

} // namespace dagi

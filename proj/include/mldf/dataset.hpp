#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "mldf/matrix.hpp"

namespace mldf {

// A parsed multi-label dataset: real-valued feature matrix plus binary label
// matrix over the same instances. Label column order follows label_names.
struct DatasetBundle {
    Matrix features;  // m x d
    std::vector<std::string> feature_names;
    BinaryMatrix labels;  // m x l
    std::vector<std::string> label_names;
    std::string name;

    std::size_t rows() const { return features.rows(); }
    std::size_t n_features() const { return features.cols(); }
    std::size_t n_labels() const { return labels.cols(); }
};

// Extracts label names from a Mulan-style XML header. Every <label name="..."/>
// element is collected in document order; other elements are ignored.
std::vector<std::string> parse_mulan_labels(std::istream& xml);

// Parses ARFF (dense or sparse rows). Attributes named in label_names become
// label columns, in label_names order; the rest become features in declaration
// order, with nominal features one-hot encoded. Missing values are rejected.
DatasetBundle parse_arff(std::istream& text, const std::vector<std::string>& label_names,
                         std::string name = "");

// CSV with a header row; columns whose names end in ":label" are labels
// (suffix stripped), everything else is a numeric feature.
DatasetBundle parse_csv(std::istream& text, std::string name = "");

void to_csv(const DatasetBundle& data, std::ostream& out);

// Dispatches on file extension: ".csv" loads standalone, ".arff" requires a
// companion labels_path pointing at the Mulan XML header.
DatasetBundle load_dataset(const std::string& features_path, const std::string& labels_path = "");

DatasetBundle subset_rows(const DatasetBundle& data, const std::vector<std::size_t>& rows);

// Seeded disjoint partition; train side gets round(fraction * m) rows,
// rounding half up. Row order within each side follows the original dataset.
std::pair<DatasetBundle, DatasetBundle> split_train_test(const DatasetBundle& data,
                                                         double fraction, std::uint64_t seed);

}  // namespace mldf

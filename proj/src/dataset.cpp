#include "mldf/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "mldf/error.hpp"
#include "mldf/rng.hpp"

namespace mldf {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && ((s.front() == '\'' && s.back() == '\'') ||
                          (s.front() == '"' && s.back() == '"')))
        return s.substr(1, s.size() - 2);
    return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = s.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(s.substr(start));
            break;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

[[noreturn]] void parse_fail(std::size_t line_no, const std::string& what) {
    throw ParseError("line " + std::to_string(line_no) + ": " + what);
}

double parse_number(const std::string& token, std::size_t line_no) {
    if (token == "?") parse_fail(line_no, "missing value '?' is not supported");
    const char* begin = token.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0')
        parse_fail(line_no, "not a number: '" + token + "'");
    if (!std::isfinite(v)) parse_fail(line_no, "non-finite value: '" + token + "'");
    return v;
}

std::string xml_unescape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size();) {
        if (s[i] != '&') {
            out += s[i++];
            continue;
        }
        std::size_t semi = s.find(';', i);
        std::string ent = semi == std::string::npos ? "" : s.substr(i + 1, semi - i - 1);
        if (ent == "amp") out += '&';
        else if (ent == "lt") out += '<';
        else if (ent == "gt") out += '>';
        else if (ent == "quot") out += '"';
        else if (ent == "apos") out += '\'';
        else {
            out += s[i++];
            continue;
        }
        i = semi + 1;
    }
    return out;
}

struct Attribute {
    std::string name;
    bool numeric = true;
    std::vector<std::string> categories;  // nominal only
    int label_slot = -1;                  // index into label_names, -1 for features
    std::size_t feature_offset = 0;       // first expanded feature column
};

std::size_t category_index(const Attribute& attr, const std::string& value,
                           std::size_t line_no) {
    for (std::size_t c = 0; c < attr.categories.size(); ++c)
        if (attr.categories[c] == value) return c;
    parse_fail(line_no, "value '" + value + "' not in nominal domain of '" + attr.name + "'");
}

std::uint8_t parse_label_value(const Attribute& attr, const std::string& value,
                               std::size_t line_no) {
    if (value == "?") parse_fail(line_no, "missing value '?' is not supported");
    if (attr.numeric) {
        const double v = parse_number(value, line_no);
        if (v == 0.0) return 0;
        if (v == 1.0) return 1;
    } else {
        const std::string& cat = attr.categories[category_index(attr, value, line_no)];
        if (cat == "0") return 0;
        if (cat == "1") return 1;
    }
    throw SchemaError("line " + std::to_string(line_no) + ": label '" + attr.name +
                      "' has value '" + value + "' outside {0,1}");
}

std::string path_stem(const std::string& path) {
    std::size_t slash = path.find_last_of("/\\");
    std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
    std::size_t dot = base.find_last_of('.');
    return dot == std::string::npos ? base : base.substr(0, dot);
}

}  // namespace

std::vector<std::string> parse_mulan_labels(std::istream& xml) {
    std::ostringstream buf;
    buf << xml.rdbuf();
    const std::string doc = buf.str();
    std::vector<std::string> names;
    std::unordered_set<std::string> seen;
    std::size_t pos = 0;
    while ((pos = doc.find("<label", pos)) != std::string::npos) {
        std::size_t after = pos + 6;
        // Skip <labels> and any other element that merely shares the prefix.
        if (after < doc.size() && (std::isalnum(static_cast<unsigned char>(doc[after])) ||
                                   doc[after] == '_' || doc[after] == '-')) {
            pos = after;
            continue;
        }
        std::size_t close = doc.find('>', pos);
        if (close == std::string::npos) throw ParseError("unterminated <label> tag");
        const std::string tag = doc.substr(pos, close - pos);
        std::size_t name_at = tag.find("name");
        if (name_at == std::string::npos) throw ParseError("<label> without name attribute");
        std::size_t eq = tag.find('=', name_at);
        if (eq == std::string::npos) throw ParseError("<label> without name attribute");
        std::size_t q = eq + 1;
        while (q < tag.size() && std::isspace(static_cast<unsigned char>(tag[q]))) ++q;
        if (q >= tag.size() || (tag[q] != '"' && tag[q] != '\''))
            throw ParseError("<label> name attribute is not quoted");
        char quote = tag[q];
        std::size_t end = tag.find(quote, q + 1);
        if (end == std::string::npos) throw ParseError("unterminated name attribute");
        std::string name = xml_unescape(tag.substr(q + 1, end - q - 1));
        if (!seen.insert(name).second)
            throw SchemaError("duplicate label name '" + name + "'");
        names.push_back(std::move(name));
        pos = close + 1;
    }
    if (names.empty()) throw SchemaError("label header declares no labels");
    return names;
}

DatasetBundle parse_arff(std::istream& text, const std::vector<std::string>& label_names,
                         std::string name) {
    std::vector<Attribute> attrs;
    std::unordered_map<std::string, int> label_slot;
    for (std::size_t i = 0; i < label_names.size(); ++i) {
        if (!label_slot.emplace(label_names[i], static_cast<int>(i)).second)
            throw SchemaError("duplicate label name '" + label_names[i] + "'");
    }

    DatasetBundle out;
    out.name = std::move(name);
    std::size_t n_feature_cols = 0;
    std::vector<std::vector<double>> feature_rows;
    std::vector<std::vector<std::uint8_t>> label_rows;
    bool in_data = false;
    std::string line;
    std::size_t line_no = 0;

    auto finish_header = [&] {
        for (Attribute& a : attrs) {
            if (a.label_slot >= 0) continue;
            a.feature_offset = n_feature_cols;
            if (a.numeric) {
                out.feature_names.push_back(a.name);
                n_feature_cols += 1;
            } else {
                for (const std::string& cat : a.categories)
                    out.feature_names.push_back(a.name + "=" + cat);
                n_feature_cols += a.categories.size();
            }
        }
        std::vector<bool> found(label_names.size(), false);
        for (const Attribute& a : attrs)
            if (a.label_slot >= 0) found[static_cast<std::size_t>(a.label_slot)] = true;
        for (std::size_t i = 0; i < found.size(); ++i)
            if (!found[i])
                throw SchemaError("label '" + label_names[i] + "' not declared as an attribute");
    };

    auto parse_dense = [&](const std::string& body) {
        std::vector<std::string> tokens = split(body, ',');
        if (tokens.size() != attrs.size())
            parse_fail(line_no, "row has " + std::to_string(tokens.size()) + " values, expected " +
                                    std::to_string(attrs.size()));
        std::vector<double> fr(n_feature_cols, 0.0);
        std::vector<std::uint8_t> lr(label_names.size(), 0);
        for (std::size_t a = 0; a < attrs.size(); ++a) {
            const Attribute& attr = attrs[a];
            const std::string value = unquote(trim(tokens[a]));
            if (attr.label_slot >= 0) {
                lr[static_cast<std::size_t>(attr.label_slot)] =
                    parse_label_value(attr, value, line_no);
            } else if (attr.numeric) {
                fr[attr.feature_offset] = parse_number(value, line_no);
            } else {
                fr[attr.feature_offset + category_index(attr, value, line_no)] = 1.0;
            }
        }
        feature_rows.push_back(std::move(fr));
        label_rows.push_back(std::move(lr));
    };

    auto parse_sparse = [&](const std::string& body) {
        const std::string inner = trim(body.substr(1, body.size() - 2));
        std::vector<double> fr(n_feature_cols, 0.0);
        std::vector<std::uint8_t> lr(label_names.size(), 0);
        // Sparse rows default every attribute: 0 for numeric, the first
        // declared category for nominal.
        for (const Attribute& attr : attrs) {
            if (attr.label_slot >= 0) {
                if (!attr.numeric)
                    lr[static_cast<std::size_t>(attr.label_slot)] =
                        parse_label_value(attr, attr.categories.front(), line_no);
            } else if (!attr.numeric) {
                fr[attr.feature_offset] = 1.0;
            }
        }
        if (!inner.empty()) {
            for (const std::string& entry : split(inner, ',')) {
                const std::string e = trim(entry);
                std::size_t space = e.find_first_of(" \t");
                if (space == std::string::npos)
                    parse_fail(line_no, "sparse entry '" + e + "' lacks a value");
                const std::string idx_tok = e.substr(0, space);
                const std::string value = unquote(trim(e.substr(space + 1)));
                char* end = nullptr;
                long idx = std::strtol(idx_tok.c_str(), &end, 10);
                if (end == idx_tok.c_str() || *end != '\0' || idx < 0)
                    parse_fail(line_no, "bad sparse index '" + idx_tok + "'");
                if (static_cast<std::size_t>(idx) >= attrs.size())
                    parse_fail(line_no, "unknown attribute index " + idx_tok);
                const Attribute& attr = attrs[static_cast<std::size_t>(idx)];
                if (attr.label_slot >= 0) {
                    lr[static_cast<std::size_t>(attr.label_slot)] =
                        parse_label_value(attr, value, line_no);
                } else if (attr.numeric) {
                    fr[attr.feature_offset] = parse_number(value, line_no);
                } else {
                    std::fill(fr.begin() + static_cast<std::ptrdiff_t>(attr.feature_offset),
                              fr.begin() + static_cast<std::ptrdiff_t>(attr.feature_offset +
                                                                       attr.categories.size()),
                              0.0);
                    fr[attr.feature_offset + category_index(attr, value, line_no)] = 1.0;
                }
            }
        }
        feature_rows.push_back(std::move(fr));
        label_rows.push_back(std::move(lr));
    };

    while (std::getline(text, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string body = trim(line);
        if (body.empty() || body[0] == '%') continue;
        if (!in_data) {
            const std::string low = lower(body);
            if (low.rfind("@relation", 0) == 0) {
                if (out.name.empty()) out.name = unquote(trim(body.substr(9)));
            } else if (low.rfind("@attribute", 0) == 0) {
                std::string rest = trim(body.substr(10));
                if (rest.empty()) parse_fail(line_no, "attribute without a name");
                Attribute attr;
                std::size_t name_end;
                if (rest[0] == '\'' || rest[0] == '"') {
                    name_end = rest.find(rest[0], 1);
                    if (name_end == std::string::npos)
                        parse_fail(line_no, "unterminated attribute name");
                    attr.name = rest.substr(1, name_end - 1);
                    ++name_end;
                } else {
                    name_end = rest.find_first_of(" \t");
                    if (name_end == std::string::npos)
                        parse_fail(line_no, "attribute '" + rest + "' without a type");
                    attr.name = rest.substr(0, name_end);
                }
                std::string type = trim(rest.substr(name_end));
                if (type.empty()) parse_fail(line_no, "attribute '" + attr.name + "' without a type");
                if (type[0] == '{') {
                    if (type.back() != '}')
                        parse_fail(line_no, "unterminated nominal domain");
                    attr.numeric = false;
                    for (const std::string& cat : split(type.substr(1, type.size() - 2), ','))
                        attr.categories.push_back(unquote(trim(cat)));
                    if (attr.categories.empty())
                        parse_fail(line_no, "empty nominal domain");
                } else {
                    const std::string t = lower(type);
                    if (t != "numeric" && t != "real" && t != "integer")
                        parse_fail(line_no, "unsupported attribute type '" + type + "'");
                }
                auto it = label_slot.find(attr.name);
                if (it != label_slot.end()) attr.label_slot = it->second;
                attrs.push_back(std::move(attr));
            } else if (low.rfind("@data", 0) == 0) {
                finish_header();
                in_data = true;
            } else {
                parse_fail(line_no, "unexpected directive '" + body + "'");
            }
            continue;
        }
        if (body.front() == '{') {
            if (body.back() != '}') parse_fail(line_no, "unterminated sparse row");
            parse_sparse(body);
        } else {
            parse_dense(body);
        }
    }
    if (!in_data) throw ParseError("no @data section");
    if (feature_rows.empty()) throw SchemaError("empty data section");
    if (n_feature_cols == 0) throw SchemaError("dataset has no feature attributes");

    const std::size_t m = feature_rows.size();
    out.features = Matrix(m, n_feature_cols);
    out.labels = BinaryMatrix(m, label_names.size());
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n_feature_cols; ++j) out.features(i, j) = feature_rows[i][j];
        for (std::size_t j = 0; j < label_names.size(); ++j) out.labels(i, j) = label_rows[i][j];
    }
    out.label_names = label_names;
    return out;
}

DatasetBundle parse_csv(std::istream& text, std::string name) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(text, line)) throw ParseError("empty input");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();

    DatasetBundle out;
    out.name = std::move(name);
    static const std::string kSuffix = ":label";
    std::vector<int> col_kind;  // feature column index, or -(label index)-1
    std::size_t n_features = 0, n_labels = 0;
    for (const std::string& raw : split(line, ',')) {
        const std::string col = trim(raw);
        if (col.size() > kSuffix.size() &&
            col.compare(col.size() - kSuffix.size(), kSuffix.size(), kSuffix) == 0) {
            out.label_names.push_back(col.substr(0, col.size() - kSuffix.size()));
            col_kind.push_back(-static_cast<int>(n_labels++) - 1);
        } else {
            out.feature_names.push_back(col);
            col_kind.push_back(static_cast<int>(n_features++));
        }
    }
    if (n_features == 0) throw SchemaError("no feature columns");
    if (n_labels == 0) throw SchemaError("no ':label' columns");

    std::vector<std::vector<double>> feature_rows;
    std::vector<std::vector<std::uint8_t>> label_rows;
    while (std::getline(text, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        std::vector<std::string> tokens = split(line, ',');
        if (tokens.size() != col_kind.size())
            parse_fail(line_no, "row has " + std::to_string(tokens.size()) + " values, expected " +
                                    std::to_string(col_kind.size()));
        std::vector<double> fr(n_features);
        std::vector<std::uint8_t> lr(n_labels);
        for (std::size_t c = 0; c < tokens.size(); ++c) {
            const double v = parse_number(trim(tokens[c]), line_no);
            if (col_kind[c] >= 0) {
                fr[static_cast<std::size_t>(col_kind[c])] = v;
            } else {
                if (v != 0.0 && v != 1.0)
                    throw SchemaError("line " + std::to_string(line_no) + ": label value " +
                                      std::to_string(v) + " outside {0,1}");
                lr[static_cast<std::size_t>(-col_kind[c] - 1)] = v == 1.0 ? 1 : 0;
            }
        }
        feature_rows.push_back(std::move(fr));
        label_rows.push_back(std::move(lr));
    }
    if (feature_rows.empty()) throw SchemaError("empty data section");

    const std::size_t m = feature_rows.size();
    out.features = Matrix(m, n_features);
    out.labels = BinaryMatrix(m, n_labels);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n_features; ++j) out.features(i, j) = feature_rows[i][j];
        for (std::size_t j = 0; j < n_labels; ++j) out.labels(i, j) = label_rows[i][j];
    }
    return out;
}

void to_csv(const DatasetBundle& data, std::ostream& out) {
    char buf[64];
    for (std::size_t j = 0; j < data.n_features(); ++j) {
        if (j) out << ',';
        out << data.feature_names[j];
    }
    for (std::size_t j = 0; j < data.n_labels(); ++j) {
        out << ',' << data.label_names[j] << ":label";
    }
    out << '\n';
    for (std::size_t i = 0; i < data.rows(); ++i) {
        for (std::size_t j = 0; j < data.n_features(); ++j) {
            if (j) out << ',';
            std::snprintf(buf, sizeof buf, "%.17g", data.features(i, j));
            out << buf;
        }
        for (std::size_t j = 0; j < data.n_labels(); ++j)
            out << ',' << static_cast<int>(data.labels(i, j));
        out << '\n';
    }
}

DatasetBundle load_dataset(const std::string& features_path, const std::string& labels_path) {
    const std::string low = lower(features_path);
    auto ends_with = [&](const std::string& suffix) {
        return low.size() >= suffix.size() &&
               low.compare(low.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    std::ifstream in(features_path);
    if (!in) throw DataError("cannot open '" + features_path + "'");
    if (ends_with(".csv")) {
        if (!labels_path.empty())
            throw ArgumentError("CSV datasets carry their own labels; no label file expected");
        return parse_csv(in, path_stem(features_path));
    }
    if (ends_with(".arff")) {
        if (labels_path.empty())
            throw ArgumentError("ARFF datasets need a label XML file");
        std::ifstream xml(labels_path);
        if (!xml) throw DataError("cannot open '" + labels_path + "'");
        return parse_arff(in, parse_mulan_labels(xml), path_stem(features_path));
    }
    throw ArgumentError("unsupported dataset extension: '" + features_path + "'");
}

DatasetBundle subset_rows(const DatasetBundle& data, const std::vector<std::size_t>& rows) {
    DatasetBundle out;
    out.feature_names = data.feature_names;
    out.label_names = data.label_names;
    out.name = data.name;
    out.features = Matrix(rows.size(), data.n_features());
    out.labels = BinaryMatrix(rows.size(), data.n_labels());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= data.rows()) throw ArgumentError("row index out of range");
        for (std::size_t j = 0; j < data.n_features(); ++j)
            out.features(i, j) = data.features(rows[i], j);
        for (std::size_t j = 0; j < data.n_labels(); ++j)
            out.labels(i, j) = data.labels(rows[i], j);
    }
    return out;
}

std::pair<DatasetBundle, DatasetBundle> split_train_test(const DatasetBundle& data,
                                                         double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0))
        throw ArgumentError("split fraction must lie in (0,1)");
    const std::size_t m = data.rows();
    const std::size_t train_m =
        static_cast<std::size_t>(std::floor(fraction * static_cast<double>(m) + 0.5));
    if (train_m == 0 || train_m == m)
        throw ArgumentError("split leaves one side empty");

    std::vector<std::size_t> idx(m);
    for (std::size_t i = 0; i < m; ++i) idx[i] = i;
    std::mt19937_64 rng(mix_seed(seed, 0x53504c49));  // split stream
    shuffle_indices(idx, rng);

    std::vector<std::size_t> train_idx(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(train_m));
    std::vector<std::size_t> test_idx(idx.begin() + static_cast<std::ptrdiff_t>(train_m), idx.end());
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());

    DatasetBundle train = subset_rows(data, train_idx);
    DatasetBundle test = subset_rows(data, test_idx);
    if (!data.name.empty()) {
        train.name = data.name + "-train";
        test.name = data.name + "-test";
    }
    return {std::move(train), std::move(test)};
}

}  // namespace mldf

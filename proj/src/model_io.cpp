#include "mldf/model_io.hpp"

#include <json.hpp>

#include "mldf/error.hpp"
#include "mldf/io.hpp"

namespace mldf {

namespace {

using nlohmann::json;

json tree_to_json(const Tree& tree) {
    json nodes = json::array();
    for (const TreeNode& node : tree.nodes) {
        if (node.is_leaf()) {
            nodes.push_back(json::array({-1, node.count, node.leaf}));
        } else {
            nodes.push_back(json::array({node.feature, node.threshold, node.left, node.right}));
        }
    }
    return nodes;
}

Tree tree_from_json(const json& nodes, std::size_t n_features, std::size_t n_labels) {
    Tree tree;
    tree.n_features = n_features;
    tree.n_labels = n_labels;
    for (const json& entry : nodes) {
        if (!entry.is_array() || entry.size() < 3) throw SchemaError("malformed tree node");
        TreeNode node;
        const int feature = entry[0].get<int>();
        if (feature < 0) {
            node.count = entry[1].get<std::uint32_t>();
            node.leaf = entry[2].get<std::vector<double>>();
            if (node.leaf.size() != n_labels) throw SchemaError("leaf width mismatch");
        } else {
            if (entry.size() != 4) throw SchemaError("malformed tree node");
            node.feature = feature;
            node.threshold = entry[1].get<double>();
            node.left = entry[2].get<std::int32_t>();
            node.right = entry[3].get<std::int32_t>();
            if (static_cast<std::size_t>(feature) >= n_features)
                throw SchemaError("tree split feature out of range");
        }
        tree.nodes.push_back(std::move(node));
    }
    if (tree.nodes.empty()) throw SchemaError("empty tree");
    for (const TreeNode& node : tree.nodes) {
        if (node.is_leaf()) continue;
        const auto size = static_cast<std::int32_t>(tree.nodes.size());
        if (node.left < 0 || node.left >= size || node.right < 0 || node.right >= size)
            throw SchemaError("tree child index out of range");
    }
    return tree;
}

json folded_to_json(const FoldedForest& ff) {
    json folds = json::array();
    std::size_t n_features = 0, n_labels = 0;
    for (const Forest& forest : ff.forests) {
        n_features = forest.n_features;
        n_labels = forest.n_labels;
        json trees = json::array();
        for (const Tree& tree : forest.trees) trees.push_back(tree_to_json(tree));
        folds.push_back(std::move(trees));
    }
    return json{{"k", ff.k},
                {"fold_of_row", ff.fold_of_row},
                {"n_features", n_features},
                {"n_labels", n_labels},
                {"fold_forests", std::move(folds)}};
}

FoldedForest folded_from_json(const json& j) {
    FoldedForest ff;
    ff.k = j.at("k").get<std::size_t>();
    ff.fold_of_row = j.at("fold_of_row").get<std::vector<std::size_t>>();
    const auto n_features = j.at("n_features").get<std::size_t>();
    const auto n_labels = j.at("n_labels").get<std::size_t>();
    const json& folds = j.at("fold_forests");
    if (folds.size() != ff.k) throw SchemaError("fold forest count disagrees with k");
    for (const json& trees : folds) {
        Forest forest;
        forest.n_features = n_features;
        forest.n_labels = n_labels;
        for (const json& tree : trees)
            forest.trees.push_back(tree_from_json(tree, n_features, n_labels));
        if (forest.trees.empty()) throw SchemaError("empty forest");
        ff.forests.push_back(std::move(forest));
    }
    return ff;
}

}  // namespace

std::string serialize_model(const CascadeModel& model) {
    const CascadeConfig& c = model.config;
    json forests = json::array();
    for (const ForestSpec& spec : c.forests) forests.push_back(forest_spec_name(spec));

    json layers = json::array();
    for (const Layer& layer : model.layers) {
        json layer_forests = json::array();
        for (const FoldedForest& ff : layer.forests) layer_forests.push_back(folded_to_json(ff));
        layers.push_back(json{{"forests", std::move(layer_forests)}});
    }

    const json doc{
        {"format", "mldf-model"},
        {"version", kModelFormatVersion},
        {"measure", measure_name(c.measure)},
        {"forests", std::move(forests)},
        {"schedule",
         {{"trees_first", c.schedule.trees_first},
          {"trees_step", c.schedule.trees_step},
          {"trees_max", c.schedule.trees_max},
          {"depth_first", c.schedule.depth_first},
          {"depth_step", c.schedule.depth_step}}},
        {"max_layers", c.max_layers},
        {"folds", c.folds},
        {"min_samples_leaf", c.min_samples_leaf},
        {"feature_candidates", c.feature_candidates},
        {"binarization_threshold", c.binarization_threshold},
        {"seed", c.seed},
        {"reuse_enabled", c.reuse_enabled},
        {"threshold_from_layer2", c.threshold_from_layer2},
        {"n_features", model.n_features},
        {"n_labels", model.n_labels},
        {"label_names", model.label_names},
        {"thetas", model.thetas},
        {"layers", std::move(layers)},
    };
    return doc.dump();
}

CascadeModel deserialize_model(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("model file is not valid JSON: ") + e.what());
    }
    try {
        if (!doc.is_object() || doc.value("format", "") != "mldf-model")
            throw SchemaError("not a model file");
        const int version = doc.value("version", -1);
        if (version != kModelFormatVersion)
            throw VersionError("unsupported model version " + std::to_string(version));

        CascadeModel model;
        CascadeConfig& c = model.config;
        c.measure = measure_from_name(doc.at("measure").get<std::string>());
        c.forests.clear();
        for (const json& name : doc.at("forests"))
            c.forests.push_back(forest_spec_from_name(name.get<std::string>()));
        const json& sched = doc.at("schedule");
        c.schedule.trees_first = sched.at("trees_first").get<std::size_t>();
        c.schedule.trees_step = sched.at("trees_step").get<std::size_t>();
        c.schedule.trees_max = sched.at("trees_max").get<std::size_t>();
        c.schedule.depth_first = sched.at("depth_first").get<std::size_t>();
        c.schedule.depth_step = sched.at("depth_step").get<std::size_t>();
        c.max_layers = doc.at("max_layers").get<std::size_t>();
        c.folds = doc.at("folds").get<std::size_t>();
        c.min_samples_leaf = doc.at("min_samples_leaf").get<std::size_t>();
        c.feature_candidates = doc.at("feature_candidates").get<std::size_t>();
        c.binarization_threshold = doc.at("binarization_threshold").get<double>();
        c.seed = doc.at("seed").get<std::uint64_t>();
        c.reuse_enabled = doc.at("reuse_enabled").get<bool>();
        c.threshold_from_layer2 = doc.at("threshold_from_layer2").get<bool>();
        model.n_features = doc.at("n_features").get<std::size_t>();
        model.n_labels = doc.at("n_labels").get<std::size_t>();
        model.label_names = doc.at("label_names").get<std::vector<std::string>>();
        model.thetas = doc.at("thetas").get<std::vector<double>>();
        for (const json& layer : doc.at("layers")) {
            Layer out;
            for (const json& ff : layer.at("forests"))
                out.forests.push_back(folded_from_json(ff));
            if (out.forests.size() != c.forests.size())
                throw SchemaError("layer forest count disagrees with config");
            model.layers.push_back(std::move(out));
        }
        if (model.thetas.size() != model.layers.size())
            throw SchemaError("threshold count disagrees with layer count");
        if (model.layers.empty()) throw SchemaError("model has no layers");
        return model;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("malformed model file: ") + e.what());
    }
}

void save_model(const CascadeModel& model, const std::string& path) {
    write_file_atomic(path, serialize_model(model));
}

CascadeModel load_model(const std::string& path) { return deserialize_model(read_file(path)); }

}  // namespace mldf

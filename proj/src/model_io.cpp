#include "bwsq/model_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bwsq/error.hpp"
#include "json.hpp"

namespace bwsq {

using nlohmann::json;

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp);
        out << content;
        if (!out.flush()) throw Error("cannot write " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

namespace {

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vec_from(const json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json dense_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec_json(m.row(i).transpose()));
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", rows}};
}

Eigen::MatrixXd dense_from(const json& j) {
    Eigen::MatrixXd m(j.at("rows").get<Eigen::Index>(), j.at("cols").get<Eigen::Index>());
    const auto& data = j.at("data");
    if (static_cast<Eigen::Index>(data.size()) != m.rows()) throw SchemaError("model: matrix row count mismatch");
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const auto row = vec_from(data[static_cast<std::size_t>(i)]);
        if (row.size() != m.cols()) throw SchemaError("model: matrix column count mismatch");
        m.row(i) = row.transpose();
    }
    return m;
}

// Sparse rows as [[col, value], ...] lists.
json sparse_json(const SparseRows& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.outerSize(); ++i) {
        json row = json::array();
        for (SparseRows::InnerIterator it(m, i); it; ++it) row.push_back({it.col(), it.value()});
        rows.push_back(row);
    }
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", rows}};
}

SparseRows sparse_from(const json& j) {
    SparseRows m(j.at("rows").get<Eigen::Index>(), j.at("cols").get<Eigen::Index>());
    std::vector<Eigen::Triplet<double>> triplets;
    const auto& data = j.at("data");
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (const auto& e : data[i]) {
            triplets.emplace_back(static_cast<Eigen::Index>(i), e.at(0).get<Eigen::Index>(), e.at(1).get<double>());
        }
    }
    m.setFromTriplets(triplets.begin(), triplets.end());
    return m;
}

json vocab_json(const Vocabulary& v) {
    return {{"tokens", v.tokens()}, {"doc_freq", v.doc_freqs()}, {"min_doc_freq", v.min_doc_freq()}};
}

Vocabulary vocab_from(const json& j) {
    return Vocabulary(j.at("tokens").get<std::vector<std::string>>(), j.at("doc_freq").get<std::vector<int>>(),
                      j.at("min_doc_freq").get<int>());
}

json optimizer_json(const LbfgsOptions& o) {
    return {{"max_iterations", o.max_iterations},
            {"gradient_tolerance", o.gradient_tolerance},
            {"history", o.history},
            {"max_line_search", o.max_line_search}};
}

LbfgsOptions optimizer_from(const json& j) {
    LbfgsOptions o;
    o.max_iterations = j.at("max_iterations").get<int>();
    o.gradient_tolerance = j.at("gradient_tolerance").get<double>();
    o.history = j.at("history").get<int>();
    o.max_line_search = j.at("max_line_search").get<int>();
    return o;
}

json logistic_config_json(const LogisticConfig& c) {
    json j{{"l2", c.l2},
           {"optimizer", optimizer_json(c.optimizer)},
           {"inverse_frequency_weights", c.inverse_frequency_weights},
           {"tune", c.tune},
           {"l2_grid", c.l2_grid},
           {"validation_fraction", c.validation_fraction},
           {"seed", c.seed},
           {"min_doc_freq", c.min_doc_freq},
           {"excluded_tokens", c.excluded_tokens}};
    if (c.lexicon) {
        json phrases = json::array();
        for (const auto& [tokens, score] : c.lexicon->phrases) phrases.push_back({{"tokens", tokens}, {"score", score}});
        j["lexicon"] = phrases;
    } else {
        j["lexicon"] = nullptr;
    }
    return j;
}

LogisticConfig logistic_config_from(const json& j) {
    LogisticConfig c;
    c.l2 = j.at("l2").get<double>();
    c.optimizer = optimizer_from(j.at("optimizer"));
    c.inverse_frequency_weights = j.at("inverse_frequency_weights").get<bool>();
    c.tune = j.at("tune").get<bool>();
    c.l2_grid = j.at("l2_grid").get<std::vector<double>>();
    c.validation_fraction = j.at("validation_fraction").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.min_doc_freq = j.at("min_doc_freq").get<int>();
    c.excluded_tokens = j.at("excluded_tokens").get<std::set<std::string>>();
    if (!j.at("lexicon").is_null()) {
        auto lex = std::make_shared<QuantifierLexicon>();
        for (const auto& p : j.at("lexicon")) {
            lex->phrases.emplace_back(p.at("tokens").get<std::vector<std::string>>(), p.at("score").get<double>());
        }
        c.lexicon = std::move(lex);
    }
    return c;
}

json kernel_json(const Kernel& k) { return {{"kind", k.name()}, {"gamma", k.gamma}}; }

Kernel kernel_from(const json& j) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "linear") return Kernel::linear();
    if (kind == "rbf") return Kernel::rbf(j.at("gamma").get<double>());
    throw SchemaError("model: unknown kernel '" + kind + "'");
}

json krr_config_json(const KrrConfig& c) {
    return {{"kernel", kernel_json(c.kernel)},
            {"alpha", c.alpha},
            {"center_targets", c.center_targets},
            {"tune", c.tune},
            {"alpha_grid", c.alpha_grid},
            {"gamma_grid", c.gamma_grid},
            {"try_linear", c.try_linear},
            {"validation_fraction", c.validation_fraction},
            {"seed", c.seed}};
}

KrrConfig krr_config_from(const json& j) {
    KrrConfig c;
    c.kernel = kernel_from(j.at("kernel"));
    c.alpha = j.at("alpha").get<double>();
    c.center_targets = j.at("center_targets").get<bool>();
    c.tune = j.at("tune").get<bool>();
    c.alpha_grid = j.at("alpha_grid").get<std::vector<double>>();
    c.gamma_grid = j.at("gamma_grid").get<std::vector<double>>();
    c.try_linear = j.at("try_linear").get<bool>();
    c.validation_fraction = j.at("validation_fraction").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

template <typename Features>
json krr_fitted_json(const KrrModel<Features>& m) {
    return {{"kernel", kernel_json(m.kernel)}, {"alpha", m.alpha}, {"offset", m.offset}, {"dual", vec_json(m.dual)}};
}

template <typename Features>
void krr_fitted_from(const json& j, KrrModel<Features>& m) {
    m.kernel = kernel_from(j.at("kernel"));
    m.alpha = j.at("alpha").get<double>();
    m.offset = j.at("offset").get<double>();
    m.dual = vec_from(j.at("dual"));
    if (m.dual.size() != m.train_features.rows()) {
        throw SchemaError("model: dual coefficient count differs from the training-set size");
    }
}

json header(const char* type) { return {{"format", "bwsq-model"}, {"version", kModelFormatVersion}, {"type", type}}; }

json parse_document(const std::string& text, const std::string& expected_type) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("model: not JSON: ") + e.what());
    }
    const auto type = model_type(text);
    if (type != expected_type) throw SchemaError("model: expected type '" + expected_type + "', found '" + type + "'");
    return j;
}

template <typename F>
auto guarded(F&& f) {
    try {
        return f();
    } catch (const json::exception& e) {
        throw SchemaError(std::string("model: malformed document: ") + e.what());
    }
}

}  // namespace

std::string model_type(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error&) {
        throw SchemaError("model: not JSON");
    }
    if (!j.is_object() || j.value("format", "") != "bwsq-model") throw SchemaError("model: not a bwsq model document");
    if (j.value("version", 0) != kModelFormatVersion) {
        throw SchemaError("model: unsupported version " + j.value("version", json(nullptr)).dump());
    }
    return j.value("type", "");
}

std::string classifier_to_json(const TextClassifier& clf) {
    const auto& m = clf.model;
    json j = header("logistic");
    j["config"] = logistic_config_json(clf.config);
    j["vocabulary"] = vocab_json(clf.vocab);
    j["task"] = std::string(to_string(m.task));
    j["classes"] = m.classes;
    j["weights"] = dense_json(m.weights);
    j["bias"] = vec_json(m.bias);
    j["trained"] = std::vector<bool>(m.trained.begin(), m.trained.end());
    j["l2"] = m.l2;
    j["converged"] = m.converged;
    return j.dump();
}

TextClassifier classifier_from_json(const std::string& text) {
    const auto j = parse_document(text, "logistic");
    return guarded([&] {
        TextClassifier clf;
        clf.config = logistic_config_from(j.at("config"));
        clf.vocab = vocab_from(j.at("vocabulary"));
        auto& m = clf.model;
        const auto task = j.at("task").get<std::string>();
        if (task != "binary" && task != "multiclass") throw SchemaError("model: unknown task '" + task + "'");
        m.task = task == "binary" ? Task::Binary : Task::Multiclass;
        m.classes = j.at("classes").get<std::vector<int>>();
        m.weights = dense_from(j.at("weights"));
        m.bias = vec_from(j.at("bias"));
        m.trained = j.at("trained").get<std::vector<bool>>();
        m.l2 = j.at("l2").get<double>();
        m.converged = j.at("converged").get<bool>();
        const auto lexicon_cols = clf.config.lexicon && !clf.config.lexicon->empty() ? kLexiconFeatureCount : 0;
        if (m.weights.cols() != static_cast<Eigen::Index>(clf.vocab.size()) + lexicon_cols ||
            m.bias.size() != m.weights.rows() || static_cast<Eigen::Index>(m.trained.size()) != m.weights.rows()) {
            throw SchemaError("model: weight dimensions do not match the vocabulary");
        }
        return clf;
    });
}

std::string text_regressor_to_json(const TextRegressor& r) {
    json j = header("krr-text");
    j["config"] = krr_config_json(r.config);
    j["min_doc_freq"] = r.min_doc_freq;
    j["vocabulary"] = vocab_json(r.vocab);
    j["fitted"] = krr_fitted_json(r.model);
    j["train_features"] = sparse_json(r.model.train_features);
    return j.dump();
}

TextRegressor text_regressor_from_json(const std::string& text) {
    const auto j = parse_document(text, "krr-text");
    return guarded([&] {
        TextRegressor r;
        r.config = krr_config_from(j.at("config"));
        r.min_doc_freq = j.at("min_doc_freq").get<int>();
        r.vocab = vocab_from(j.at("vocabulary"));
        r.model.train_features = sparse_from(j.at("train_features"));
        krr_fitted_from(j.at("fitted"), r.model);
        return r;
    });
}

std::string embedding_regressor_to_json(const EmbeddingRegressor& r) {
    json j = header("krr-embedding");
    j["config"] = krr_config_json(r.config);
    j["embedding_source"] = r.embedding_source;
    j["fitted"] = krr_fitted_json(r.model);
    j["train_features"] = dense_json(r.model.train_features);
    return j.dump();
}

EmbeddingRegressor embedding_regressor_from_json(const std::string& text) {
    const auto j = parse_document(text, "krr-embedding");
    return guarded([&] {
        EmbeddingRegressor r;
        r.config = krr_config_from(j.at("config"));
        r.embedding_source = j.at("embedding_source").get<std::string>();
        r.model.train_features = dense_from(j.at("train_features"));
        krr_fitted_from(j.at("fitted"), r.model);
        return r;
    });
}

}  // namespace bwsq

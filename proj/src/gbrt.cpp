#include "featstore/gbrt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "featstore/errors.hpp"
#include "featstore/store.hpp"

namespace featstore {

double Tree::eval(const double* row, const uint8_t* missing) const {
    int i = 0;
    while (true) {
        const TreeNode& n = nodes[static_cast<size_t>(i)];
        if (n.feature < 0) return n.value;
        const bool go_left = missing[n.feature] ? n.default_left : row[n.feature] < n.threshold;
        i = go_left ? n.left : n.right;
    }
}

int Tree::n_splits() const {
    int count = 0;
    for (const auto& n : nodes) count += n.feature >= 0;
    return count;
}

std::map<int, int64_t> GbrtModel::split_counts() const {
    std::map<int, int64_t> out;
    for (const auto& t : trees)
        for (const auto& n : t.nodes)
            if (n.feature >= 0) ++out[n.feature];
    return out;
}

std::map<int, double> GbrtModel::split_gains() const {
    std::map<int, double> out;
    for (const auto& t : trees)
        for (const auto& n : t.nodes)
            if (n.feature >= 0) out[n.feature] += n.gain;
    return out;
}

namespace {

struct FitData {
    size_t n_rows = 0;
    size_t n_feats = 0;
    const TrainingMatrix* m = nullptr;
    std::vector<int> feat_cols;  // matrix column index per feature

    double value(size_t row, size_t feat) const {
        return m->data[row * m->n_cols() + static_cast<size_t>(feat_cols[feat])];
    }
    bool present(size_t row, size_t feat) const {
        return m->missing[row * m->n_cols() + static_cast<size_t>(feat_cols[feat])] == 0;
    }
};

// Rows sorted by value within one feature, missing rows separate; computed
// once per fit and reused by every tree level.
struct FeatureOrder {
    std::vector<uint32_t> sorted;   // present rows, ascending by value
    std::vector<uint32_t> missing;  // rows with a masked cell
};

struct BestSplit {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
};

constexpr int kNoNode = -1;

}  // namespace

GbrtModel fit(const TrainingMatrix& matrix, const std::string& target, const GbrtParams& params) {
    if (params.n_rounds <= 0 || params.max_depth <= 0 || params.learning_rate <= 0.0 ||
        params.learning_rate > 1.0 || params.min_samples_leaf <= 0 || params.subsample <= 0.0 ||
        params.subsample > 1.0)
        throw Error("InvalidArgument", "bad training parameters");

    const int target_col = matrix.column_index(target);
    if (target_col < 0) throw Error("UnknownFeature", "target column '" + target + "' not found");

    const size_t n = matrix.n_rows();
    if (n < 2) throw Error("TooFewRows", "need at least 2 training rows");
    for (size_t r = 0; r < n; ++r)
        if (matrix.is_missing(r, static_cast<size_t>(target_col)))
            throw Error("MissingTarget", "target must be fully observed");

    FitData data;
    data.n_rows = n;
    data.m = &matrix;
    for (size_t c = 0; c < matrix.n_cols(); ++c)
        if (static_cast<int>(c) != target_col) data.feat_cols.push_back(static_cast<int>(c));
    data.n_feats = data.feat_cols.size();

    GbrtModel model;
    model.learning_rate = params.learning_rate;
    model.n_features = static_cast<int>(data.n_feats);
    for (int c : data.feat_cols) model.feature_names.push_back(matrix.columns[static_cast<size_t>(c)]);

    std::vector<double> y(n);
    for (size_t r = 0; r < n; ++r) y[r] = matrix.at(r, static_cast<size_t>(target_col));
    model.base_score = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

    // Constant target: the base score is the whole model.
    const bool degenerate =
        std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; });
    if (degenerate) return model;

    // Global presort, shared by all rounds.
    std::vector<FeatureOrder> order(data.n_feats);
    for (size_t f = 0; f < data.n_feats; ++f) {
        auto& o = order[f];
        for (uint32_t r = 0; r < n; ++r)
            (data.present(r, f) ? o.sorted : o.missing).push_back(r);
        std::stable_sort(o.sorted.begin(), o.sorted.end(), [&](uint32_t a, uint32_t b) {
            return data.value(a, f) < data.value(b, f);
        });
    }

    std::vector<double> pred(n, model.base_score);
    std::vector<double> residual(n);
    std::vector<int> node_of(n);           // kNoNode = out of this round's sample
    std::vector<uint32_t> sample_index(n);
    std::iota(sample_index.begin(), sample_index.end(), 0u);

    const auto round_sample_size = static_cast<size_t>(
        std::max<double>(1.0, std::floor(params.subsample * static_cast<double>(n))));

    for (int round = 0; round < params.n_rounds; ++round) {
        for (size_t r = 0; r < n; ++r) residual[r] = y[r] - pred[r];

        std::fill(node_of.begin(), node_of.end(), kNoNode);
        if (round_sample_size == n) {
            std::fill(node_of.begin(), node_of.end(), 0);
        } else {
            std::mt19937_64 rng(params.seed + static_cast<uint64_t>(round) * 0x9E3779B97F4A7C15ULL);
            std::shuffle(sample_index.begin(), sample_index.end(), rng);
            for (size_t i = 0; i < round_sample_size; ++i) node_of[sample_index[i]] = 0;
        }

        Tree tree;
        tree.nodes.push_back({});
        std::vector<int> level_nodes = {0};

        for (int depth = 0; depth < params.max_depth && !level_nodes.empty(); ++depth) {
            const int n_nodes = static_cast<int>(tree.nodes.size());
            std::vector<BestSplit> best(static_cast<size_t>(n_nodes));
            std::vector<std::vector<uint32_t>> bucket(static_cast<size_t>(n_nodes));

            for (size_t f = 0; f < data.n_feats; ++f) {
                // Scatter this feature's global order into per-node streams.
                for (auto& b : bucket) b.clear();
                for (uint32_t r : order[f].sorted)
                    if (node_of[r] >= 0) bucket[static_cast<size_t>(node_of[r])].push_back(r);

                // Present-row totals per node for this feature.
                for (int nd : level_nodes) {
                    const auto& rows = bucket[static_cast<size_t>(nd)];
                    const int64_t n_present = static_cast<int64_t>(rows.size());
                    if (n_present < 2 * params.min_samples_leaf) continue;
                    double total = 0.0;
                    for (uint32_t r : rows) total += residual[r];

                    double left_sum = 0.0;
                    int64_t left_cnt = 0;
                    for (size_t i = 0; i + 1 < rows.size(); ++i) {
                        left_sum += residual[rows[i]];
                        ++left_cnt;
                        const double v = data.value(rows[i], f);
                        const double next = data.value(rows[i + 1], f);
                        if (!(v < next)) continue;  // no boundary between equal values
                        if (left_cnt < params.min_samples_leaf) continue;
                        const int64_t right_cnt = n_present - left_cnt;
                        if (right_cnt < params.min_samples_leaf) break;
                        const double right_sum = total - left_sum;
                        const double gain =
                            left_sum * left_sum / static_cast<double>(left_cnt) +
                            right_sum * right_sum / static_cast<double>(right_cnt) -
                            total * total / static_cast<double>(n_present);
                        auto& b = best[static_cast<size_t>(nd)];
                        // Ties keep the lowest feature index, then the lowest
                        // threshold (scan order guarantees both).
                        if (gain > b.gain) {
                            b.gain = gain;
                            b.feature = static_cast<int>(f);
                            b.threshold = v + (next - v) / 2.0;
                        }
                    }
                }
            }

            // Apply the winning splits and reassign rows.
            std::vector<int> next_level;
            std::vector<int> left_child(static_cast<size_t>(n_nodes), kNoNode);
            std::vector<int> right_child(static_cast<size_t>(n_nodes), kNoNode);
            bool any_split = false;

            for (int nd : level_nodes) {
                const BestSplit& b = best[static_cast<size_t>(nd)];
                if (b.feature < 0 || !(b.gain > 0.0)) continue;
                any_split = true;

                // Count present rows per side to learn the default direction.
                int64_t to_left = 0, to_right = 0;
                for (size_t r = 0; r < n; ++r)
                    if (node_of[r] == nd && data.present(r, static_cast<size_t>(b.feature)))
                        (data.value(r, static_cast<size_t>(b.feature)) < b.threshold ? to_left
                                                                                     : to_right)++;

                // Children are appended before taking the parent reference:
                // push_back may reallocate the node vector.
                const int li = static_cast<int>(tree.nodes.size());
                tree.nodes.push_back({});
                const int ri = static_cast<int>(tree.nodes.size());
                tree.nodes.push_back({});
                TreeNode& parent = tree.nodes[static_cast<size_t>(nd)];
                parent.feature = b.feature;
                parent.threshold = b.threshold;
                parent.gain = b.gain;
                parent.default_left = to_left >= to_right;
                parent.left = li;
                parent.right = ri;
                left_child[static_cast<size_t>(nd)] = li;
                right_child[static_cast<size_t>(nd)] = ri;
                next_level.push_back(li);
                next_level.push_back(ri);
            }
            if (!any_split) break;

            for (size_t r = 0; r < n; ++r) {
                const int nd = node_of[r];
                if (nd < 0 || left_child[static_cast<size_t>(nd)] == kNoNode) continue;
                const TreeNode& parent = tree.nodes[static_cast<size_t>(nd)];
                const bool go_left = data.present(r, static_cast<size_t>(parent.feature))
                                         ? data.value(r, static_cast<size_t>(parent.feature)) <
                                               parent.threshold
                                         : parent.default_left;
                node_of[r] = go_left ? parent.left : parent.right;
            }
            level_nodes = std::move(next_level);
        }

        // Leaf values: mean residual of the in-sample rows that reached them.
        {
            std::vector<double> sum(tree.nodes.size(), 0.0);
            std::vector<int64_t> cnt(tree.nodes.size(), 0);
            for (size_t r = 0; r < n; ++r)
                if (node_of[r] >= 0) {
                    sum[static_cast<size_t>(node_of[r])] += residual[r];
                    ++cnt[static_cast<size_t>(node_of[r])];
                }
            for (size_t i = 0; i < tree.nodes.size(); ++i)
                if (tree.nodes[i].feature < 0 && cnt[i] > 0)
                    tree.nodes[i].value = sum[i] / static_cast<double>(cnt[i]);
        }

        // Update predictions for every row (not only the sampled ones).
        std::vector<double> row_buf(data.n_feats);
        std::vector<uint8_t> miss_buf(data.n_feats);
        for (size_t r = 0; r < n; ++r) {
            for (size_t f = 0; f < data.n_feats; ++f) {
                row_buf[f] = data.value(r, f);
                miss_buf[f] = data.present(r, f) ? 0 : 1;
            }
            pred[r] += params.learning_rate * tree.eval(row_buf.data(), miss_buf.data());
        }
        model.trees.push_back(std::move(tree));
    }
    return model;
}

std::vector<double> predict(const GbrtModel& model, const TrainingMatrix& rows) {
    if (static_cast<int>(rows.n_cols()) != model.n_features)
        throw Error("WidthMismatch",
                    "matrix has " + std::to_string(rows.n_cols()) + " columns, model expects " +
                        std::to_string(model.n_features));
    if (!model.feature_names.empty() && rows.columns != model.feature_names)
        throw Error("WidthMismatch", "column names differ from the model's feature names");

    const size_t n = rows.n_rows();
    const size_t w = rows.n_cols();
    std::vector<double> out(n, model.base_score);
    for (size_t r = 0; r < n; ++r) {
        const double* row = rows.data.data() + r * w;
        const uint8_t* miss = rows.missing.data() + r * w;
        double acc = 0.0;
        for (const auto& t : model.trees) acc += t.eval(row, miss);
        out[r] += model.learning_rate * acc;
    }
    return out;
}

std::vector<std::pair<std::string, double>> importance(const GbrtModel& model,
                                                       ImportanceKind kind) {
    std::map<int, double> scores;
    if (kind == ImportanceKind::SplitCount) {
        for (const auto& [f, c] : model.split_counts()) scores[f] = static_cast<double>(c);
    } else {
        for (const auto& [f, g] : model.split_gains()) scores[f] = g;
    }
    std::vector<std::pair<std::string, double>> out;
    for (const auto& [f, s] : scores)
        out.emplace_back(model.feature_names[static_cast<size_t>(f)], s);
    std::stable_sort(out.begin(), out.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    return out;
}

// ==== serialization =========================================================

std::string GbrtModel::to_text() const {
    std::string out = "gbrt 1\n";
    out += "base_score " + format_double(base_score) + "\n";
    out += "learning_rate " + format_double(learning_rate) + "\n";
    out += "n_features " + std::to_string(n_features) + "\n";
    for (size_t i = 0; i < feature_names.size(); ++i)
        out += "feature " + std::to_string(i) + " " + feature_names[i] + "\n";
    out += "trees " + std::to_string(trees.size()) + "\n";
    for (size_t k = 0; k < trees.size(); ++k) {
        out += "tree " + std::to_string(k) + " nodes " + std::to_string(trees[k].nodes.size()) +
               "\n";
        for (size_t i = 0; i < trees[k].nodes.size(); ++i) {
            const TreeNode& nd = trees[k].nodes[i];
            if (nd.feature >= 0) {
                out += "node " + std::to_string(i) + " split " + std::to_string(nd.feature) + " " +
                       format_double(nd.threshold) + " " + (nd.default_left ? "L" : "R") + " " +
                       std::to_string(nd.left) + " " + std::to_string(nd.right) + " " +
                       format_double(nd.gain) + "\n";
            } else {
                out += "node " + std::to_string(i) + " leaf " + format_double(nd.value) + "\n";
            }
        }
    }
    out += "end\n";
    return out;
}

GbrtModel GbrtModel::from_text(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    auto bad = [](const std::string& why) { return Error("ModelParse", why); };

    GbrtModel model;
    Tree* tree = nullptr;
    bool saw_header = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "gbrt") {
            int version = 0;
            ls >> version;
            if (version != 1) throw bad("unsupported model version");
            saw_header = true;
        } else if (tag == "base_score") {
            ls >> model.base_score;
        } else if (tag == "learning_rate") {
            ls >> model.learning_rate;
        } else if (tag == "n_features") {
            ls >> model.n_features;
        } else if (tag == "feature") {
            size_t idx;
            std::string name;
            ls >> idx >> name;
            model.feature_names.resize(std::max(model.feature_names.size(), idx + 1));
            model.feature_names[idx] = name;
        } else if (tag == "trees") {
            size_t count;
            ls >> count;
            model.trees.reserve(count);
        } else if (tag == "tree") {
            size_t idx, n_nodes;
            std::string nodes_kw;
            ls >> idx >> nodes_kw >> n_nodes;
            model.trees.emplace_back();
            tree = &model.trees.back();
            tree->nodes.resize(n_nodes);
        } else if (tag == "node") {
            if (!tree) throw bad("node outside a tree");
            size_t idx;
            std::string kind;
            ls >> idx >> kind;
            if (idx >= tree->nodes.size()) throw bad("node index out of range");
            TreeNode& nd = tree->nodes[idx];
            if (kind == "split") {
                std::string dir;
                ls >> nd.feature >> nd.threshold >> dir >> nd.left >> nd.right >> nd.gain;
                nd.default_left = dir == "L";
            } else if (kind == "leaf") {
                ls >> nd.value;
                nd.feature = -1;
            } else {
                throw bad("unknown node kind '" + kind + "'");
            }
        } else if (tag == "end") {
            break;
        } else {
            throw bad("unknown tag '" + tag + "'");
        }
        if (!ls && tag != "end") throw bad("malformed line: " + line);
    }
    if (!saw_header) throw bad("missing 'gbrt <version>' header");
    return model;
}

}  // namespace featstore

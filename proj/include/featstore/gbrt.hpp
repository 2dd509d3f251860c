#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "featstore/core.hpp"

namespace featstore {

struct GbrtParams {
    int n_rounds = 200;
    int max_depth = 6;
    double learning_rate = 0.1;
    int min_samples_leaf = 20;
    uint64_t seed = 0;
    double subsample = 1.0;  // row fraction per round, (0, 1]
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    bool default_left = true;  // where missing values go
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf output
    double gain = 0.0;   // squared-error reduction of this split
};

struct Tree {
    std::vector<TreeNode> nodes;  // root at index 0

    double eval(const double* row, const uint8_t* missing) const;
    int n_splits() const;
};

// Additive squared-error model: prediction = base_score + lr * sum of trees.
struct GbrtModel {
    double base_score = 0.0;
    double learning_rate = 0.1;
    int n_features = 0;
    std::vector<std::string> feature_names;
    std::vector<Tree> trees;

    std::map<int, int64_t> split_counts() const;  // feature index -> splits
    std::map<int, double> split_gains() const;    // feature index -> summed gain

    std::string to_text() const;
    static GbrtModel from_text(const std::string& text);
};

// Fits on every column of `matrix` except `target`, which must be fully
// observed. Missing feature cells are routed per-split toward the child
// that received more present training rows (ties go left). Deterministic
// for fixed params; with subsample = 1 the seed has no effect.
GbrtModel fit(const TrainingMatrix& matrix, const std::string& target, const GbrtParams& params);

// `rows` must carry exactly the model's feature columns, in order.
std::vector<double> predict(const GbrtModel& model, const TrainingMatrix& rows);

enum class ImportanceKind { SplitCount, TotalGain };

// Descending (feature name, score); features with zero splits are omitted.
std::vector<std::pair<std::string, double>> importance(const GbrtModel& model,
                                                       ImportanceKind kind);

}  // namespace featstore

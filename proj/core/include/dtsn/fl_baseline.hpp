#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace dtsn::fl {

// Linear-regression stand-in task: samples are (x, y) with squared-error
// loss, so every derived quantity has a closed form the tests can check.

struct Sample {
    std::vector<double> x;
    double y = 0.0;
};

struct LocalDataset {
    std::vector<Sample> samples;
    int owner = 0;
};

struct WeightVector {
    std::vector<double> values;
    int round = 0;
};

struct FederatedRun {
    int rounds_executed = 0;
    std::vector<double> loss_history; // global loss after each round
    bool converged = false;
};

struct SyntheticSpec {
    int entities = 1;
    int samples_per_entity = 16;
    int dim = 2;
    double noise_sigma = 0.0;
};

// Mean squared error over the dataset. Throws ValidationError on an empty
// dataset or a dimension mismatch.
double local_loss(const WeightVector& w, const LocalDataset& data);

// Exact gradient of local_loss at w.
std::vector<double> loss_gradient(const WeightVector& w, const LocalDataset& data);

// One full-batch gradient step; the input is never mutated.
WeightVector local_update(const WeightVector& w, const LocalDataset& data, double eta);

// Dataset-size-weighted mean of the submitted weights.
WeightVector global_aggregate(const std::vector<std::pair<WeightVector, std::size_t>>& updates);

// Size-weighted global loss across all datasets.
double global_loss(const WeightVector& w, const std::vector<LocalDataset>& data);

// Synchronous rounds from a zero start until the global loss improves by
// less than `tolerance` (but still improves; a flat round does not count
// as converged) or max_rounds is hit. Throws DivergenceError when the loss
// explodes.
FederatedRun run_federated(const std::vector<LocalDataset>& data, double eta,
                           double tolerance, int max_rounds);

// Deterministic synthetic regression data: a hidden weight vector drawn per
// seed, unit-normal features, optional Gaussian label noise.
std::vector<LocalDataset> make_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

// "round,global_loss" CSV, one row per executed round.
std::string loss_history_csv(const FederatedRun& run);

} // namespace dtsn::fl

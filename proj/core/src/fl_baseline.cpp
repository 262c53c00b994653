#include "dtsn/fl_baseline.hpp"

#include <cmath>
#include <random>

#include "dtsn/errors.hpp"
#include "dtsn/format.hpp"

namespace dtsn::fl {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
    return sum;
}

void check_dims(const WeightVector& w, const LocalDataset& data) {
    if (data.samples.empty())
        throw ValidationError("loss is undefined on an empty dataset");
    for (const Sample& s : data.samples)
        if (s.x.size() != w.values.size())
            throw ValidationError("sample dimension does not match weight dimension");
}

// Box-Muller on the raw engine stream keeps the draw sequence pinned to the
// seed, independent of the standard library's distribution internals.
class Gaussian {
public:
    explicit Gaussian(std::uint64_t seed) : engine_(seed) {}

    double operator()() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        double radius = std::sqrt(-2.0 * std::log(u1));
        double angle = 2.0 * 3.141592653589793238462643383279502884 * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    double uniform() {
        // in (0, 1]: guards the log above
        return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    }

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace

double local_loss(const WeightVector& w, const LocalDataset& data) {
    check_dims(w, data);
    double sum = 0.0;
    for (const Sample& s : data.samples) {
        double r = s.y - dot(w.values, s.x);
        sum += r * r;
    }
    return sum / static_cast<double>(data.samples.size());
}

std::vector<double> loss_gradient(const WeightVector& w, const LocalDataset& data) {
    check_dims(w, data);
    std::vector<double> grad(w.values.size(), 0.0);
    for (const Sample& s : data.samples) {
        double r = s.y - dot(w.values, s.x);
        for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += -2.0 * r * s.x[j];
    }
    for (double& g : grad) g /= static_cast<double>(data.samples.size());
    return grad;
}

WeightVector local_update(const WeightVector& w, const LocalDataset& data, double eta) {
    std::vector<double> grad = loss_gradient(w, data);
    WeightVector next = w;
    for (std::size_t j = 0; j < next.values.size(); ++j) {
        next.values[j] -= eta * grad[j];
        if (!std::isfinite(next.values[j]))
            throw DivergenceError("weight became non-finite at eta=" + format_double(eta));
    }
    next.round = w.round + 1;
    return next;
}

WeightVector global_aggregate(const std::vector<std::pair<WeightVector, std::size_t>>& updates) {
    if (updates.empty())
        throw ValidationError("nothing to aggregate");
    std::size_t dim = updates.front().first.values.size();
    std::size_t total = 0;
    for (const auto& [w, size] : updates) {
        if (w.values.size() != dim)
            throw ValidationError("weight dimension mismatch in aggregation");
        total += size;
    }
    if (total == 0)
        throw ValidationError("aggregation weights sum to zero");
    WeightVector out;
    out.values.assign(dim, 0.0);
    out.round = updates.front().first.round;
    for (const auto& [w, size] : updates) {
        double share = static_cast<double>(size) / static_cast<double>(total);
        for (std::size_t j = 0; j < dim; ++j) out.values[j] += share * w.values[j];
    }
    return out;
}

double global_loss(const WeightVector& w, const std::vector<LocalDataset>& data) {
    if (data.empty())
        throw ValidationError("loss is undefined on an empty dataset");
    double sum = 0.0;
    std::size_t count = 0;
    for (const LocalDataset& d : data) {
        sum += local_loss(w, d) * static_cast<double>(d.samples.size());
        count += d.samples.size();
    }
    return sum / static_cast<double>(count);
}

FederatedRun run_federated(const std::vector<LocalDataset>& data, double eta,
                           double tolerance, int max_rounds) {
    if (data.empty())
        throw ValidationError("no datasets to train on");
    if (max_rounds < 1)
        throw ValidationError("max_rounds must be >= 1");
    std::size_t dim = data.front().samples.empty() ? 0 : data.front().samples.front().x.size();
    if (dim == 0)
        throw ValidationError("loss is undefined on an empty dataset");

    WeightVector w;
    w.values.assign(dim, 0.0);
    double previous = global_loss(w, data);
    double initial = previous;

    FederatedRun run;
    for (int round = 1; round <= max_rounds; ++round) {
        std::vector<std::pair<WeightVector, std::size_t>> updates;
        updates.reserve(data.size());
        for (const LocalDataset& d : data)
            updates.emplace_back(local_update(w, d, eta), d.samples.size());
        w = global_aggregate(updates);

        double current = global_loss(w, data);
        run.rounds_executed = round;
        run.loss_history.push_back(current);
        if (!std::isfinite(current) || (initial > 0.0 && current > initial * 1e6))
            throw DivergenceError("global loss diverged at eta=" + format_double(eta));

        double improvement = previous - current;
        if (improvement > 0.0 && improvement < tolerance) {
            run.converged = true;
            break;
        }
        previous = current;
    }
    return run;
}

std::vector<LocalDataset> make_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    if (spec.entities < 1 || spec.samples_per_entity < 1 || spec.dim < 1)
        throw ValidationError("synthetic dataset shape must be positive");
    if (spec.noise_sigma < 0.0)
        throw ValidationError("negative noise");

    Gaussian gen(seed);
    std::vector<double> hidden(static_cast<std::size_t>(spec.dim));
    for (double& h : hidden) h = gen();

    std::vector<LocalDataset> out;
    out.reserve(static_cast<std::size_t>(spec.entities));
    for (int e = 0; e < spec.entities; ++e) {
        LocalDataset d;
        d.owner = e;
        d.samples.reserve(static_cast<std::size_t>(spec.samples_per_entity));
        for (int n = 0; n < spec.samples_per_entity; ++n) {
            Sample s;
            s.x.resize(static_cast<std::size_t>(spec.dim));
            for (double& v : s.x) v = gen();
            s.y = dot(hidden, s.x) + spec.noise_sigma * gen();
            d.samples.push_back(std::move(s));
        }
        out.push_back(std::move(d));
    }
    return out;
}

std::string loss_history_csv(const FederatedRun& run) {
    std::string csv = "round,global_loss\n";
    for (std::size_t i = 0; i < run.loss_history.size(); ++i)
        csv += csv_line({std::to_string(i + 1), format_double(run.loss_history[i])});
    return csv;
}

} // namespace dtsn::fl

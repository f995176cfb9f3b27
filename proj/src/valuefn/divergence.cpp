#include "cmarl/valuefn/divergence.hpp"

#include <cmath>

#include "cmarl/numerics/layers.hpp"
#include "cmarl/valuefn/policy.hpp"

namespace cmarl::valuefn {

using numerics::Tensor;

double policy_divergence(const numerics::ParamSet& base, std::span<const numerics::ParamSet> heads,
                         const NetDims& dims, std::span<const replay::Trajectory* const> batch, double temperature)
{
    if (heads.size() < 2 || batch.empty()) {
        return 0.0;
    }
    const ActingNet net{base, dims};
    const std::size_t n = dims.n_agents;
    const std::size_t A = dims.n_actions;
    const double inv_heads = 1.0 / static_cast<double>(heads.size());
    std::vector<std::vector<double>> policies(heads.size());
    std::vector<double> mean(A);
    std::vector<std::pair<Tensor, Tensor>> out_layers;
    for (const auto& head : heads) {
        out_layers.emplace_back(head.tensor("head.fc_out.w"), head.tensor("head.fc_out.b"));
    }
    std::vector<Tensor> q(heads.size());

    double total = 0.0;
    for (const replay::Trajectory* tr : batch) {
        Tensor hidden = net.initial_hidden(n);
        Tensor inputs = Tensor::matrix(n, dims.input_dim());
        for (std::size_t t = 0; t < tr->length; ++t) {
            inputs.fill(0.0);
            for (std::size_t i = 0; i < n; ++i) {
                const auto o = tr->obs_at(t, i);
                std::copy(o.begin(), o.end(), &inputs(i, 0));
                if (t > 0) {
                    inputs(i, dims.obs_dim + static_cast<std::size_t>(tr->action_at(t - 1, i))) = 1.0;
                }
            }
            hidden = net.step(inputs, hidden).hidden;
            for (std::size_t j = 0; j < heads.size(); ++j) {
                q[j] = numerics::linear_forward(hidden, out_layers[j].first, out_layers[j].second);
            }
            for (std::size_t i = 0; i < n; ++i) {
                const auto mask = tr->avail_at(t, i);
                std::fill(mean.begin(), mean.end(), 0.0);
                for (std::size_t j = 0; j < heads.size(); ++j) {
                    policies[j] = boltzmann(std::span<const double>(q[j].data() + i * A, A), mask, temperature);
                    for (std::size_t a = 0; a < A; ++a) {
                        mean[a] += policies[j][a] * inv_heads;
                    }
                }
                for (std::size_t j = 0; j < heads.size(); ++j) {
                    for (std::size_t a = 0; a < A; ++a) {
                        const double p = policies[j][a];
                        if (p > 0.0) {
                            total += inv_heads * p * std::log(p / mean[a]);
                        }
                    }
                }
            }
        }
    }
    return total / static_cast<double>(batch.size());
}

}  // namespace cmarl::valuefn

#pragma once

#include <memory>
#include <vector>

#include "cmarl/envs/env.hpp"
#include "cmarl/valuefn/qnet.hpp"

namespace cmarl::centralizer {

class Policy {
public:
    virtual ~Policy() = default;
    virtual void begin_episode() = 0;
    virtual std::vector<int> act(const envs::Observation& observation) = 0;
};

// Greedy recurrent policy over the masked per-agent Q values.
class GreedyNetPolicy final : public Policy {
public:
    GreedyNetPolicy(const numerics::ParamSet& params, const valuefn::NetDims& dims);

    void begin_episode() override;
    std::vector<int> act(const envs::Observation& observation) override;

private:
    valuefn::ActingNet net_;
    numerics::Tensor hidden_;
    std::vector<int> last_;
};

struct EvalStats {
    double mean = 0.0;
    double median = 0.0;
    std::vector<double> returns;
};

// Episode e starts from derive_seed(seed, {e}); the environment is not modified.
EvalStats evaluate_policy(const envs::Env& env, Policy& policy, std::size_t episodes, std::uint64_t seed);
EvalStats evaluate_policy(const envs::Env& env, const numerics::ParamSet& params, const valuefn::NetDims& dims,
                          std::size_t episodes, std::uint64_t seed);

double median(std::vector<double> values);

}  // namespace cmarl::centralizer

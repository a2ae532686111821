#pragma once

#include <binica/types.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace blica_cli {

/// Thrown for invalid flag combinations; mapped to exit code 1.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GenerateOptions {
    int n = 0;
    int n_z = 0;
    int n_u = 0;
    int samples = 0;
    binica::Seed seed = 1;
    std::string out_prefix;
};

struct FitOptions {
    std::string input;
    std::string method = "blica";
    bool exact = false;
    std::optional<int> n_z;
    double r = 1000.0;
    bool no_regularization = false;
    int restarts = 3;
    binica::Seed seed = 1;
    std::optional<double> budget_secs;
    std::string out;
};

struct EvalOptions {
    std::string model;
    std::string result;
    std::string out;
};

struct SweepOptions {
    std::string kind;
    std::vector<int> n;
    std::vector<int> n_u;
    std::vector<int> n_z;
    std::vector<int> samples;
    std::vector<std::string> methods{"blica"};
    int replicates = 3;
    double r = 1000.0;
    int restarts = 3;
    binica::Seed seed = 1;
    std::optional<double> budget_secs;
    std::string out;
};

int cmd_generate(const GenerateOptions& opts);
int cmd_fit(const FitOptions& opts);
int cmd_eval(const EvalOptions& opts);
int cmd_sweep(const SweepOptions& opts);

}  // namespace blica_cli

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "bseg/loss.hpp"
#include "bseg/model.hpp"
#include "bseg/sampler.hpp"
#include "bseg/synthdata.hpp"

namespace bseg {

// Full experiment description, serialized as flat `key = value` lines with
// dotted section prefixes. parse(emit(c)) == c for every valid config.
struct ExperimentConfig {
    std::string method = "bayes_weighted";  // deterministic | bayes | bayes_weighted
    std::uint64_t seed = 1;
    bool deterministic_mode = false;  // reproducibility mode: single-threaded
    ArchConfig arch;
    SamplerConfig sampler;
    LossConfig loss;
    std::string data_root = "corpus";
    double val_fraction = 0.2;
    std::string out_dir = "out";
    CorpusSpec synth;

    void validate() const;
    std::string emit() const;

    static ExperimentConfig parse(const std::string& text);
    static ExperimentConfig parse_file(const std::filesystem::path& path);

    bool operator==(const ExperimentConfig&) const = default;
};

}  // namespace bseg

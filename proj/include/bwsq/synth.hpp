#pragma once

#include <cstdint>
#include <map>

#include "bwsq/corpus.hpp"

namespace bwsq {

// Parameters of the bundled synthetic survey corpus: short German answers
// built from quantifier templates, with the frequency class, presence label
// and a latent intensity planted per record.
struct SynthConfig {
    std::size_t n_records = 1000;
    std::size_t n_species = 10;
    std::size_t n_offices = 119;
    std::uint64_t seed = 7;
    double test_fraction = 0.2;
    // Relative class frequencies for classes -1..5; empty means uniform.
    std::map<int, double> class_weights{{-1, 0.08}, {0, 0.15}, {1, 0.12}, {2, 0.16},
                                        {3, 0.17}, {4, 0.17}, {5, 0.15}};
};

// Intensity lies in [(c + 1) / 7, (c + 2) / 7), so it orders records by
// class and randomly within a class. Texts are unique.
Corpus synthesize_corpus(const SynthConfig& config);

}  // namespace bwsq

#pragma once

#include "nbrepro/store/store.hpp"

#include <random>

namespace nbrepro::testing {

struct RandomStoreShape {
    int repositories = 0;
    int notebooks = 0;
    int baseline_rows = 0;
    int assignments = 0;
};

// Fills an empty store with a random but constraint-respecting corpus: some
// repositories without runs, runs at every stage, executions of every
// status, partial metrics, a baseline with unmatched rows, assignments.
RandomStoreShape populate_random_store(store::Store& store, std::mt19937& rng);

} // namespace nbrepro::testing

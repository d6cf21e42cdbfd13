#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace coh {

using EntityId = int32_t;
using RelationId = int32_t;
using Tick = int32_t;

// A timestamped fact. Relation ids live in the augmented space once the
// store has been mirrored: originals in [0, |R|), reversed in [|R|, 2|R|).
struct Quadruple {
    EntityId subject{};
    RelationId relation{};
    EntityId object{};
    Tick time{};

    friend bool operator==(const Quadruple&, const Quadruple&) = default;
};

enum class Split : uint8_t { train, valid, test };

enum class Direction : uint8_t { forward, reversed };

struct Query {
    EntityId subject{};
    RelationId relation{};
    EntityId ground_truth{};
    Tick time{};
    Direction direction = Direction::forward;
    // Store index of the original test quadruple this query was derived from.
    int32_t test_quad_index = -1;
    // True when no fact in the store precedes query.time.
    bool no_history = false;
};

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Recoverable per-query parse failures; callers fall back instead of aborting.
struct EmptySelectionError : Error {
    using Error::Error;
};
struct EmptyAnswerError : Error {
    using Error::Error;
};

}  // namespace coh

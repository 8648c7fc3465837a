#pragma once

#include "rarlkit/abstraction.hpp"
#include "rarlkit/mdp.hpp"

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace rarlkit {

/// Rectangular grid with walls, a block coloring, optional slip, absorbing
/// reward cells and a uniform start over the listed cells. Actions are
/// up/down/left/right; bumping a wall or the border keeps the agent in
/// place; slipping moves sideways with probability slip/2 each.
struct GridWorldSpec {
    int width = 0, height = 0;
    std::vector<uint8_t> wall;       // per cell, row-major (x + y*width)
    std::vector<int> color;          // per cell, block id (ignored on walls)
    double slip = 0.0;
    std::vector<double> cell_reward; // per cell
    std::vector<uint8_t> absorbing;  // per cell
    std::vector<int> start_cells;
    double gamma = 0.95;
    int num_blocks = 0;

    int cell(int x, int y) const { return x + y * width; }
};

struct BuiltGrid {
    GroundMdp mdp;
    Mapping mapping;
    std::vector<int> state_of_cell; // -1 on walls
};

BuiltGrid build_grid(const GridWorldSpec& spec);

/// Three-block grid: a large block over the top rows, a small block on the
/// bottom-left, and an absorbing reward block on the bottom-right, separated
/// from the small one by a wall. The boundary has exactly three entry cells
/// from the small block and five exit cells overall.
struct TwoRegionFixture {
    GroundMdp mdp;
    Mapping mapping;
    int gray = 0, green = 1, yellow = 2;
};

TwoRegionFixture build_two_region_grid(double slip = 0.0);

/// Deterministic corridor: two start cells drop into a long block whose far
/// end reaches the reward block after 11 steps from one entry and 21 from
/// the other. Ships with a two-action abstraction: the first action promises
/// an exit occupancy of 0.6 toward the reward block, the second promises
/// exactly what the slower entry can deliver.
struct CorridorFixture {
    GroundMdp mdp;
    Mapping mapping;
    SecondOrderMdp abstraction;
    int s1 = -1, s2 = -1; // slow and fast entries of the long block
    int gray = 0, green = 1, yellow = 2;
    int ambitious_action = 0, modest_action = 1;
};

CorridorFixture build_corridor_grid();

/// Three-state chain s0 -> s1 -> s2 (absorbing, reward 1) whose first two
/// states are merged by the mapping. The abstract self-loop gamma/(1+gamma)
/// structure makes the pair admissible and perfectly realizable while no
/// MDP homomorphism exists.
struct ChainFixture {
    GroundMdp mdp;
    Mapping mapping;
    SecondOrderMdp abstraction;
};

ChainFixture build_appendixB_chain(double gamma = 0.95);

/// Reproducible Dirichlet-row MDP with at most `branching` successors per
/// state-action pair.
GroundMdp random_mdp(uint64_t seed, int num_states, int num_actions, int branching,
                     double gamma = 0.9);

/// Reproducible surjective mapping.
Mapping random_mapping(uint64_t seed, int num_states, int num_abstract);

/// Identity abstraction of an MDP: the mapping is the identity and the
/// abstract model is the first-order lift.
AbstractionPair identity_abstraction(const GroundMdp& mdp);

/// Fits a one-action abstract model whose targets equal the entry-wise
/// maxima over the enumerated deterministic options of each block, making
/// the output admissible by construction. Columns whose predecessors agree
/// are fitted first-order; the others get second-order rows with a pure
/// self-loop continuation. Throws when no row fits the requested discount;
/// the message carries the minimal feasible discount found by bisection.
SecondOrderMdp synthesize_admissible_abstraction(const GroundMdp& mdp, const Mapping& mapping,
                                                 double gamma_bar, long enum_cap = 1000000);

struct ParseError : std::runtime_error {
    int line;
    ParseError(int line_, const std::string& what_)
        : std::runtime_error("line " + std::to_string(line_) + ": " + what_), line(line_) {}
};

/// Line-oriented environment format:
///   mdp S A gamma
///   t s a s' p        (one per positive transition probability)
///   r s a v           (one per positive reward)
///   start s p         (one per positive start probability)
/// Rows failing to normalize within 1e-9 are rejected.
std::string write_env(const GroundMdp& mdp);
GroundMdp parse_env(std::istream& in);

/// Abstraction format, predecessor index Sb denotes the dummy start:
///   abs Sb Ab gammabar
///   t sp s a s' p
///   r sp s a v
///   map s sb
std::string write_abstraction(const SecondOrderMdp& abs, const Mapping& mapping);
std::pair<SecondOrderMdp, Mapping> parse_abstraction(std::istream& in);

} // namespace rarlkit

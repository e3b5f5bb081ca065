#pragma once

// Procedurally generated multi-room gridworld with locked doors, keys, and
// a single sparse goal in the room farthest from the start. The agent sees
// only an egocentric window plus its key inventory, so useful behavior
// requires memory. Layout generation guarantees that every room (and the
// goal) is reachable: each key is placed inside the region already
// reachable at the moment it is placed.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace curio {

struct EnvConfig {
    int rooms = 3;       // room grid is rooms x rooms
    int cell = 5;        // each room is cell x cell walkable cells
    int view_radius = 2; // observation window is (2r+1) x (2r+1)
    int keys = 1;        // number of locked doors (and matching keys)
    int max_keys = 2;    // inventory slots encoded in the observation
    int step_limit = 500;
    bool procedural = true;   // false: layout comes from layout_seed, not the reset seed
    uint64_t layout_seed = 0;
    bool noise_tile = false;  // one cell renders as uniform noise each step
};

struct StepOutcome {
    std::vector<double> obs;
    double reward = 0.0;
    bool terminated = false;
    int rooms_visited = 0;
};

class MultiRoomWorld {
public:
    // up, down, left, right, pickup, toggle
    static constexpr int kActions = 6;
    // wall, floor, open door, locked door, key, goal
    static constexpr int kChannels = 6;

    enum Action { kUp = 0, kDown = 1, kLeft = 2, kRight = 3, kPickup = 4, kToggle = 5 };

    struct Door {
        int x = 0, y = 0;
        int color = -1; // -1: never locked
        bool open = true;
    };
    struct Key {
        int x = 0, y = 0;
        int color = 0;
        bool collected = false;
    };

    explicit MultiRoomWorld(const EnvConfig& cfg);

    int obs_dim() const;
    int grid_size() const { return grid_; }

    std::vector<double> reset(uint64_t seed);
    StepOutcome step(int action);

    bool terminated() const { return terminated_; }
    int rooms_visited() const;
    int steps_taken() const { return steps_; }

    // Read-only layout introspection for debugging and test oracles.
    const std::vector<Door>& doors() const { return doors_; }
    const std::vector<Key>& keys() const { return keys_; }
    int agent_x() const { return ax_; }
    int agent_y() const { return ay_; }
    int goal_x() const { return gx_; }
    int goal_y() const { return gy_; }
    bool is_wall(int x, int y) const; // true outside the grid
    bool has_key(int color) const;

    // Packs (position, inventory, lock states) for state-space search;
    // everything else about an episode is a function of these.
    uint64_t state_key() const;

    // ASCII map: '#' wall, '.' floor, 'D' open door, 'L' locked door,
    // 'k' key, 'G' goal, 'A' agent, '~' noise tile.
    std::string layout_text() const;

private:
    int room_of(int x, int y) const; // -1 on wall/door cells
    int door_at(int x, int y) const; // index into doors_, or -1
    int key_at(int x, int y) const;  // index into keys_, uncollected only
    bool passable(int x, int y) const;
    void generate(uint64_t layout_seed);
    void enter_cell();
    std::vector<double> observe();

    EnvConfig cfg_;
    int grid_ = 0;

    std::vector<Door> doors_;
    std::vector<Key> keys_;
    int ax_ = 0, ay_ = 0;
    int start_x_ = 0, start_y_ = 0;
    int gx_ = 0, gy_ = 0;
    int noise_x_ = -1, noise_y_ = -1;
    uint32_t inventory_ = 0; // bit per key color
    std::vector<uint8_t> visited_rooms_;
    int steps_ = 0;
    bool terminated_ = true; // requires reset() before step()
    std::mt19937_64 noise_rng_;
};

} // namespace curio

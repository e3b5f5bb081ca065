#include "curio/env.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <numeric>
#include <stdexcept>

#include "curio/errors.hpp"
#include "curio/rng.hpp"

namespace curio {

MultiRoomWorld::MultiRoomWorld(const EnvConfig& cfg) : cfg_(cfg) {
    if (cfg_.rooms < 1) throw ConfigError("env.rooms must be >= 1");
    if (cfg_.cell < 2) throw ConfigError("env.cell must be >= 2");
    if (cfg_.view_radius < 1) throw ConfigError("env.view_radius must be >= 1");
    if (cfg_.step_limit < 1) throw ConfigError("env.step_limit must be >= 1");
    if (cfg_.keys < 0) throw ConfigError("env.keys must be >= 0");
    if (cfg_.max_keys < cfg_.keys || cfg_.max_keys > 16) {
        throw ConfigError("env.max_keys must satisfy keys <= max_keys <= 16");
    }
    const int door_count = 2 * cfg_.rooms * (cfg_.rooms - 1);
    if (cfg_.keys > door_count) {
        throw ConfigError("env.keys (" + std::to_string(cfg_.keys) + ") exceeds the number of doors (" +
                          std::to_string(door_count) + ")");
    }
    if (cfg_.cell * cfg_.cell < cfg_.keys + 3) {
        throw ConfigError("env.cell too small to place keys, goal, and agent without overlap");
    }
    grid_ = cfg_.rooms * (cfg_.cell + 1) + 1;
}

int MultiRoomWorld::obs_dim() const {
    const int side = 2 * cfg_.view_radius + 1;
    return side * side * kChannels + cfg_.max_keys;
}

int MultiRoomWorld::room_of(int x, int y) const {
    if (x <= 0 || y <= 0 || x >= grid_ - 1 || y >= grid_ - 1) return -1;
    if (x % (cfg_.cell + 1) == 0 || y % (cfg_.cell + 1) == 0) return -1;
    const int rx = (x - 1) / (cfg_.cell + 1);
    const int ry = (y - 1) / (cfg_.cell + 1);
    return ry * cfg_.rooms + rx;
}

int MultiRoomWorld::door_at(int x, int y) const {
    for (size_t i = 0; i < doors_.size(); ++i) {
        if (doors_[i].x == x && doors_[i].y == y) return static_cast<int>(i);
    }
    return -1;
}

int MultiRoomWorld::key_at(int x, int y) const {
    for (size_t i = 0; i < keys_.size(); ++i) {
        if (!keys_[i].collected && keys_[i].x == x && keys_[i].y == y) return static_cast<int>(i);
    }
    return -1;
}

bool MultiRoomWorld::is_wall(int x, int y) const {
    if (x < 0 || y < 0 || x >= grid_ || y >= grid_) return true;
    if (x % (cfg_.cell + 1) != 0 && y % (cfg_.cell + 1) != 0) return false;
    return door_at(x, y) < 0;
}

bool MultiRoomWorld::has_key(int color) const {
    return color >= 0 && (inventory_ & (1u << color)) != 0;
}

bool MultiRoomWorld::passable(int x, int y) const {
    if (x < 0 || y < 0 || x >= grid_ || y >= grid_) return false;
    if (x % (cfg_.cell + 1) != 0 && y % (cfg_.cell + 1) != 0) return true;
    const int d = door_at(x, y);
    return d >= 0 && doors_[static_cast<size_t>(d)].open;
}

namespace {

// Rooms reachable from `start` given door locks and key placements: a
// locked door opens once the room its key lies in has been reached, so
// reachability is a fixpoint.
std::vector<uint8_t> room_closure(int rooms, const std::vector<MultiRoomWorld::Door>& doors,
                                  int cell, const std::vector<int>& key_rooms, int start) {
    std::vector<uint8_t> in(static_cast<size_t>(rooms) * rooms, 0);
    in[static_cast<size_t>(start)] = 1;
    bool changed = true;
    while (changed) {
        changed = false;
        std::vector<uint8_t> colors(key_rooms.size(), 0);
        for (size_t c = 0; c < key_rooms.size(); ++c) {
            if (key_rooms[c] >= 0 && in[static_cast<size_t>(key_rooms[c])]) colors[c] = 1;
        }
        for (const auto& d : doors) {
            // A door cell lies in exactly one wall; recover the two rooms
            // it joins from its coordinates.
            int ra, rb;
            if (d.x % (cell + 1) == 0) { // vertical wall: joins left/right rooms
                const int ry = (d.y - 1) / (cell + 1);
                const int rx = d.x / (cell + 1);
                ra = ry * rooms + (rx - 1);
                rb = ry * rooms + rx;
            } else { // horizontal wall: joins upper/lower rooms
                const int rx = (d.x - 1) / (cell + 1);
                const int ry = d.y / (cell + 1);
                ra = (ry - 1) * rooms + rx;
                rb = ry * rooms + rx;
            }
            const bool openable =
                d.color < 0 || (static_cast<size_t>(d.color) < colors.size() && colors[static_cast<size_t>(d.color)]);
            if (!openable) continue;
            if (in[static_cast<size_t>(ra)] != in[static_cast<size_t>(rb)]) {
                in[static_cast<size_t>(ra)] = in[static_cast<size_t>(rb)] = 1;
                changed = true;
            }
        }
    }
    return in;
}

} // namespace

void MultiRoomWorld::generate(uint64_t layout_seed) {
    auto rng = substream(layout_seed, "env-layout");
    const int R = cfg_.rooms;
    const int C = cfg_.cell;

    doors_.clear();
    keys_.clear();
    // One door per shared wall, at a random offset: vertical walls first.
    for (int ry = 0; ry < R; ++ry) {
        for (int rx = 0; rx + 1 < R; ++rx) {
            Door d;
            d.x = (rx + 1) * (C + 1);
            d.y = ry * (C + 1) + 1 + uniform_int(rng, C);
            doors_.push_back(d);
        }
    }
    for (int ry = 0; ry + 1 < R; ++ry) {
        for (int rx = 0; rx < R; ++rx) {
            Door d;
            d.x = rx * (C + 1) + 1 + uniform_int(rng, C);
            d.y = (ry + 1) * (C + 1);
            doors_.push_back(d);
        }
    }

    // Lock a random subset of doors, one color each, in door order.
    if (cfg_.keys > 0) {
        std::vector<int> order(doors_.size());
        std::iota(order.begin(), order.end(), 0);
        for (size_t i = 0; i + 1 < order.size(); ++i) {
            const size_t j = i + static_cast<size_t>(uniform_int(rng, static_cast<int>(order.size() - i)));
            std::swap(order[i], order[j]);
        }
        order.resize(static_cast<size_t>(cfg_.keys));
        std::sort(order.begin(), order.end());
        for (int c = 0; c < cfg_.keys; ++c) {
            doors_[static_cast<size_t>(order[static_cast<size_t>(c)])].color = c;
            doors_[static_cast<size_t>(order[static_cast<size_t>(c)])].open = false;
        }
    }

    // The outputs may alias the fields consulted by the rejection tests
    // (the goal call passes gx_/gy_ themselves), so candidates stay in
    // locals until accepted.
    auto random_cell_in_room = [&](int room, int& x, int& y) {
        const int rx = room % R;
        const int ry = room / R;
        while (true) {
            const int cx = rx * (C + 1) + 1 + uniform_int(rng, C);
            const int cy = ry * (C + 1) + 1 + uniform_int(rng, C);
            if (cx == start_x_ && cy == start_y_) continue;
            if (key_at(cx, cy) >= 0) continue;
            if (cx == gx_ && cy == gy_) continue;
            x = cx;
            y = cy;
            return;
        }
    };

    gx_ = gy_ = -1;
    start_x_ = ax_ = 1 + uniform_int(rng, C);
    start_y_ = ay_ = 1 + uniform_int(rng, C);

    // Place each key inside the region reachable with the keys placed so
    // far; this alone guarantees every room ends up reachable.
    std::vector<int> key_rooms(static_cast<size_t>(cfg_.keys), -1);
    for (int c = 0; c < cfg_.keys; ++c) {
        const auto closure = room_closure(R, doors_, C, key_rooms, 0);
        std::vector<int> open_rooms;
        for (int r = 0; r < R * R; ++r) {
            if (closure[static_cast<size_t>(r)]) open_rooms.push_back(r);
        }
        const int room = open_rooms[static_cast<size_t>(uniform_int(rng, static_cast<int>(open_rooms.size())))];
        Key k;
        k.color = c;
        random_cell_in_room(room, k.x, k.y);
        keys_.push_back(k);
        key_rooms[static_cast<size_t>(c)] = room;
    }

    {
        const auto closure = room_closure(R, doors_, C, key_rooms, 0);
        for (int r = 0; r < R * R; ++r) {
            if (!closure[static_cast<size_t>(r)]) {
                throw std::logic_error("layout generator: closure check failed");
            }
        }
    }

    // Goal goes to the room at maximal door-distance from the start.
    {
        std::vector<int> dist(static_cast<size_t>(R) * R, -1);
        std::deque<int> queue{0};
        dist[0] = 0;
        while (!queue.empty()) {
            const int r = queue.front();
            queue.pop_front();
            const int rx = r % R, ry = r / R;
            const std::array<std::array<int, 2>, 4> nbrs{{{rx - 1, ry}, {rx + 1, ry}, {rx, ry - 1}, {rx, ry + 1}}};
            for (const auto& n : nbrs) {
                if (n[0] < 0 || n[1] < 0 || n[0] >= R || n[1] >= R) continue;
                const int m = n[1] * R + n[0];
                if (dist[static_cast<size_t>(m)] < 0) {
                    dist[static_cast<size_t>(m)] = dist[static_cast<size_t>(r)] + 1;
                    queue.push_back(m);
                }
            }
        }
        int goal_room = 0;
        for (int r = 0; r < R * R; ++r) {
            if (dist[static_cast<size_t>(r)] >= dist[static_cast<size_t>(goal_room)]) goal_room = r;
        }
        random_cell_in_room(goal_room, gx_, gy_);
    }

    noise_x_ = noise_y_ = -1;
    if (cfg_.noise_tile) {
        const int room = uniform_int(rng, R * R);
        random_cell_in_room(room, noise_x_, noise_y_);
    }

    visited_rooms_.assign(static_cast<size_t>(R) * R, 0);
    inventory_ = 0;
    steps_ = 0;
}

void MultiRoomWorld::enter_cell() {
    const int r = room_of(ax_, ay_);
    if (r >= 0) visited_rooms_[static_cast<size_t>(r)] = 1;
}

std::vector<double> MultiRoomWorld::reset(uint64_t seed) {
    generate(cfg_.procedural ? seed : cfg_.layout_seed);
    noise_rng_ = substream(seed, "env-noise");
    terminated_ = false;
    enter_cell();
    return observe();
}

StepOutcome MultiRoomWorld::step(int action) {
    if (terminated_) throw UsageError("env: step() called on a terminated episode");
    if (action < 0 || action >= kActions) {
        throw UsageError("env: action must lie in [0, " + std::to_string(kActions) + ")");
    }

    static constexpr int dx[4] = {0, 0, -1, 1};
    static constexpr int dy[4] = {-1, 1, 0, 0};
    if (action <= kRight) {
        const int nx = ax_ + dx[action];
        const int ny = ay_ + dy[action];
        if (passable(nx, ny)) {
            ax_ = nx;
            ay_ = ny;
            enter_cell();
        }
    } else if (action == kPickup) {
        const int k = key_at(ax_, ay_);
        if (k >= 0) {
            keys_[static_cast<size_t>(k)].collected = true;
            inventory_ |= 1u << keys_[static_cast<size_t>(k)].color;
        }
    } else { // toggle
        for (int dir = 0; dir < 4; ++dir) {
            const int d = door_at(ax_ + dx[dir], ay_ + dy[dir]);
            if (d >= 0 && !doors_[static_cast<size_t>(d)].open &&
                has_key(doors_[static_cast<size_t>(d)].color)) {
                doors_[static_cast<size_t>(d)].open = true;
                break;
            }
        }
    }

    steps_ += 1;
    StepOutcome out;
    if (ax_ == gx_ && ay_ == gy_) {
        out.reward = 1.0;
        terminated_ = true;
    } else if (steps_ >= cfg_.step_limit) {
        terminated_ = true;
    }
    out.terminated = terminated_;
    out.rooms_visited = rooms_visited();
    out.obs = observe();
    return out;
}

int MultiRoomWorld::rooms_visited() const {
    int n = 0;
    for (uint8_t v : visited_rooms_) n += v;
    return n;
}

std::vector<double> MultiRoomWorld::observe() {
    const int v = cfg_.view_radius;
    const int side = 2 * v + 1;
    std::vector<double> obs(static_cast<size_t>(obs_dim()), 0.0);
    for (int wy = -v; wy <= v; ++wy) {
        for (int wx = -v; wx <= v; ++wx) {
            const int x = ax_ + wx;
            const int y = ay_ + wy;
            int ch;
            if (cfg_.noise_tile && x == noise_x_ && y == noise_y_) {
                ch = uniform_int(noise_rng_, kChannels);
            } else if (is_wall(x, y)) {
                ch = 0;
            } else {
                const int d = door_at(x, y);
                if (d >= 0) {
                    ch = doors_[static_cast<size_t>(d)].open ? 2 : 3;
                } else if (key_at(x, y) >= 0) {
                    ch = 4;
                } else if (x == gx_ && y == gy_) {
                    ch = 5;
                } else {
                    ch = 1;
                }
            }
            const size_t cell_idx = static_cast<size_t>((wy + v) * side + (wx + v));
            obs[cell_idx * kChannels + static_cast<size_t>(ch)] = 1.0;
        }
    }
    const size_t inv_base = static_cast<size_t>(side) * side * kChannels;
    for (int c = 0; c < cfg_.max_keys; ++c) {
        obs[inv_base + static_cast<size_t>(c)] = has_key(c) ? 1.0 : 0.0;
    }
    return obs;
}

uint64_t MultiRoomWorld::state_key() const {
    uint64_t locks = 0;
    uint64_t i = 0;
    for (const auto& d : doors_) {
        if (d.color >= 0) {
            if (d.open) locks |= 1ull << i;
            ++i;
        }
    }
    return static_cast<uint64_t>(ax_) | (static_cast<uint64_t>(ay_) << 8) |
           (static_cast<uint64_t>(inventory_) << 16) | (locks << 32);
}

std::string MultiRoomWorld::layout_text() const {
    std::string out;
    out.reserve(static_cast<size_t>(grid_) * (grid_ + 1));
    for (int y = 0; y < grid_; ++y) {
        for (int x = 0; x < grid_; ++x) {
            char c;
            if (x == ax_ && y == ay_) {
                c = 'A';
            } else if (x == gx_ && y == gy_) {
                c = 'G';
            } else if (key_at(x, y) >= 0) {
                c = 'k';
            } else if (x == noise_x_ && y == noise_y_) {
                c = '~';
            } else {
                const int d = door_at(x, y);
                if (d >= 0) {
                    c = doors_[static_cast<size_t>(d)].open ? 'D' : 'L';
                } else {
                    c = is_wall(x, y) ? '#' : '.';
                }
            }
            out.push_back(c);
        }
        out.push_back('\n');
    }
    return out;
}

} // namespace curio

#include <doctest.h>

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "curio/env.hpp"
#include "curio/errors.hpp"
#include "curio/rng.hpp"

using namespace curio;

namespace {

// Passability recomputed from public introspection only, so the tests
// never trust the implementation's own movement logic.
bool open_at(const MultiRoomWorld& env, int x, int y) {
    for (const auto& d : env.doors()) {
        if (d.x == x && d.y == y) return d.open;
    }
    return !env.is_wall(x, y);
}

// Shortest action path from the agent's cell to (tx, ty) through currently
// open cells; empty when already there. Fails the test when unreachable.
std::vector<int> path_to(const MultiRoomWorld& env, int tx, int ty) {
    const int n = env.grid_size();
    std::vector<int> from(static_cast<size_t>(n) * n, -2);
    std::deque<std::pair<int, int>> queue{{env.agent_x(), env.agent_y()}};
    from[static_cast<size_t>(env.agent_y()) * n + env.agent_x()] = -1;
    static constexpr int dx[4] = {0, 0, -1, 1};
    static constexpr int dy[4] = {-1, 1, 0, 0};
    while (!queue.empty()) {
        const auto [x, y] = queue.front();
        queue.pop_front();
        if (x == tx && y == ty) break;
        for (int a = 0; a < 4; ++a) {
            const int nx = x + dx[a], ny = y + dy[a];
            if (nx < 0 || ny < 0 || nx >= n || ny >= n) continue;
            if (!open_at(env, nx, ny)) continue;
            if (from[static_cast<size_t>(ny) * n + nx] != -2) continue;
            from[static_cast<size_t>(ny) * n + nx] = a;
            queue.push_back({nx, ny});
        }
    }
    REQUIRE(from[static_cast<size_t>(ty) * n + tx] != -2);
    std::vector<int> actions;
    int x = tx, y = ty;
    while (!(x == env.agent_x() && y == env.agent_y())) {
        const int a = from[static_cast<size_t>(y) * n + x];
        actions.push_back(a);
        x -= dx[a];
        y -= dy[a];
    }
    std::reverse(actions.begin(), actions.end());
    return actions;
}

void walk(MultiRoomWorld& env, const std::vector<int>& actions) {
    for (int a : actions) env.step(a);
}

// Breadth-first search over full environment dynamics, deduplicated on
// the packed state. Returns the action sequence reaching the goal, or an
// empty optional-like flag via the bool.
struct SearchResult {
    bool solved = false;
    std::vector<int> actions;
};

SearchResult solve_by_search(const MultiRoomWorld& start, int max_states = 200000) {
    std::set<uint64_t> seen{start.state_key()};
    std::deque<std::pair<MultiRoomWorld, std::vector<int>>> queue{{start, {}}};
    while (!queue.empty() && static_cast<int>(seen.size()) < max_states) {
        auto [env, path] = std::move(queue.front());
        queue.pop_front();
        for (int a = 0; a < MultiRoomWorld::kActions; ++a) {
            MultiRoomWorld next = env;
            const StepOutcome out = next.step(a);
            std::vector<int> npath = path;
            npath.push_back(a);
            if (out.terminated) {
                if (out.reward == 1.0) return {true, npath};
                continue; // step-limit truncation, dead branch
            }
            if (seen.insert(next.state_key()).second) {
                queue.push_back({std::move(next), std::move(npath)});
            }
        }
    }
    return {false, {}};
}

EnvConfig small_world() {
    EnvConfig c;
    c.rooms = 2;
    c.cell = 3;
    c.view_radius = 2;
    c.keys = 1;
    c.max_keys = 2;
    c.step_limit = 100000;
    return c;
}

} // namespace

TEST_CASE("observation layout: one-hot cells plus inventory bits") {
    EnvConfig c = small_world();
    MultiRoomWorld env(c);
    const std::vector<double> obs = env.reset(3);
    const int side = 2 * c.view_radius + 1;
    REQUIRE(static_cast<int>(obs.size()) == side * side * MultiRoomWorld::kChannels + c.max_keys);
    REQUIRE(env.obs_dim() == static_cast<int>(obs.size()));

    for (int cell = 0; cell < side * side; ++cell) {
        double sum = 0.0;
        for (int ch = 0; ch < MultiRoomWorld::kChannels; ++ch) {
            const double v = obs[static_cast<size_t>(cell) * MultiRoomWorld::kChannels + ch];
            CHECK((v == 0.0 || v == 1.0));
            sum += v;
        }
        CHECK(sum == 1.0);
    }
    // Fresh episode: no keys collected yet.
    for (int k = 0; k < c.max_keys; ++k) {
        CHECK(obs[static_cast<size_t>(side) * side * MultiRoomWorld::kChannels + k] == 0.0);
    }
}

TEST_CASE("resets are deterministic in the seed") {
    EnvConfig c = small_world();
    MultiRoomWorld a(c), b(c);
    for (uint64_t seed : {0ull, 5ull, 123ull}) {
        const std::vector<double> oa = a.reset(seed);
        const std::vector<double> ob = b.reset(seed);
        CHECK(oa == ob);
        CHECK(a.layout_text() == b.layout_text());
        // Same actions, bitwise-identical outcomes.
        for (int s = 0; s < 20; ++s) {
            const int act = s % MultiRoomWorld::kActions;
            const StepOutcome sa = a.step(act);
            const StepOutcome sb = b.step(act);
            CHECK(sa.obs == sb.obs);
            CHECK(sa.reward == sb.reward);
            CHECK(sa.terminated == sb.terminated);
            if (sa.terminated) break;
        }
    }
}

TEST_CASE("procedural seeds give diverse layouts, a pinned seed gives one") {
    EnvConfig c = small_world();
    MultiRoomWorld env(c);
    std::set<std::string> layouts;
    for (uint64_t seed = 0; seed < 100; ++seed) {
        env.reset(seed);
        layouts.insert(env.layout_text());
    }
    CHECK(layouts.size() >= 90); // collisions are possible but must be rare

    EnvConfig fixed = c;
    fixed.procedural = false;
    fixed.layout_seed = 77;
    MultiRoomWorld fenv(fixed);
    fenv.reset(0);
    const std::string pinned = fenv.layout_text();
    for (uint64_t seed = 1; seed < 10; ++seed) {
        fenv.reset(seed);
        CHECK(fenv.layout_text() == pinned);
    }
    // The pinned layout equals the procedural layout of the same seed.
    env.reset(77);
    CHECK(env.layout_text() == pinned);
}

TEST_CASE("movement clamps at walls and the window renders them") {
    EnvConfig c;
    c.rooms = 1;
    c.cell = 3;
    c.view_radius = 1;
    c.keys = 0;
    c.max_keys = 1;
    c.step_limit = 1000;
    MultiRoomWorld env(c);
    env.reset(4);

    // Walk left until the wall, then bump it twice: position frozen.
    while (!env.is_wall(env.agent_x() - 1, env.agent_y())) env.step(MultiRoomWorld::kLeft);
    const int x = env.agent_x(), y = env.agent_y();
    CHECK(x == 1);
    env.step(MultiRoomWorld::kLeft);
    CHECK(env.agent_x() == x);
    CHECK(env.agent_y() == y);

    // The window cell to the agent's left must render the wall channel.
    const StepOutcome out = env.step(MultiRoomWorld::kPickup);
    const int side = 2 * c.view_radius + 1;
    const int left_cell = c.view_radius * side + (c.view_radius - 1);
    CHECK(out.obs[static_cast<size_t>(left_cell) * MultiRoomWorld::kChannels + 0] == 1.0);
}

TEST_CASE("pickup and toggle follow the key and lock rules") {
    EnvConfig c = small_world();
    c.procedural = false;
    c.layout_seed = 2; // any fixed layout; the rules below are seed-independent
    MultiRoomWorld env(c);
    env.reset(9);

    REQUIRE(env.keys().size() == 1);
    const auto key = env.keys()[0];
    int locked = -1;
    for (size_t i = 0; i < env.doors().size(); ++i) {
        if (env.doors()[i].color == 0) locked = static_cast<int>(i);
    }
    REQUIRE(locked >= 0);
    const auto door = env.doors()[static_cast<size_t>(locked)];
    CHECK_FALSE(door.open);

    // Find the side of the locked door reachable right now and stand next
    // to it. Vertical-wall doors join horizontally, others vertically.
    const bool vertical = door.x % (c.cell + 1) == 0;
    const int ax1 = vertical ? door.x - 1 : door.x;
    const int ay1 = vertical ? door.y : door.y - 1;
    const int ax2 = vertical ? door.x + 1 : door.x;
    const int ay2 = vertical ? door.y : door.y + 1;
    int nx = -1, ny = -1, into = -1;
    const int n = env.grid_size();
    std::vector<uint8_t> reach(static_cast<size_t>(n) * n, 0);
    {
        std::deque<std::pair<int, int>> q{{env.agent_x(), env.agent_y()}};
        reach[static_cast<size_t>(env.agent_y()) * n + env.agent_x()] = 1;
        while (!q.empty()) {
            const auto [cx, cy] = q.front();
            q.pop_front();
            const int dxs[4] = {0, 0, -1, 1}, dys[4] = {-1, 1, 0, 0};
            for (int a = 0; a < 4; ++a) {
                const int mx = cx + dxs[a], my = cy + dys[a];
                if (mx < 0 || my < 0 || mx >= n || my >= n) continue;
                if (!open_at(env, mx, my)) continue;
                if (reach[static_cast<size_t>(my) * n + mx]) continue;
                reach[static_cast<size_t>(my) * n + mx] = 1;
                q.push_back({mx, my});
            }
        }
    }
    if (reach[static_cast<size_t>(ay1) * n + ax1]) {
        nx = ax1;
        ny = ay1;
        into = vertical ? MultiRoomWorld::kRight : MultiRoomWorld::kDown;
    } else {
        REQUIRE(reach[static_cast<size_t>(ay2) * n + ax2]);
        nx = ax2;
        ny = ay2;
        into = vertical ? MultiRoomWorld::kLeft : MultiRoomWorld::kUp;
    }

    walk(env, path_to(env, nx, ny));
    REQUIRE(env.agent_x() == nx);
    REQUIRE(env.agent_y() == ny);

    // Locked and keyless: walking into the door and toggling both fail.
    env.step(into);
    CHECK(env.agent_x() == nx);
    CHECK(env.agent_y() == ny);
    env.step(MultiRoomWorld::kToggle);
    CHECK_FALSE(env.doors()[static_cast<size_t>(locked)].open);

    // Pickup away from the key is a no-op. Walking onto the key is not
    // enough either: only an explicit pickup moves it into the inventory.
    CHECK_FALSE(env.has_key(0));
    if (env.agent_x() != key.x || env.agent_y() != key.y) {
        env.step(MultiRoomWorld::kPickup);
        CHECK_FALSE(env.has_key(0));
    }
    walk(env, path_to(env, key.x, key.y));
    CHECK_FALSE(env.has_key(0));
    CHECK_FALSE(env.keys()[0].collected);
    env.step(MultiRoomWorld::kPickup);
    CHECK(env.has_key(0));
    CHECK(env.keys()[0].collected);

    // Back at the door, the held key opens it and the cell becomes passable.
    walk(env, path_to(env, nx, ny));
    env.step(MultiRoomWorld::kToggle);
    CHECK(env.doors()[static_cast<size_t>(locked)].open);
    env.step(into);
    CHECK(env.agent_x() == door.x);
    CHECK(env.agent_y() == door.y);
}

TEST_CASE("goal contact pays one and terminates; the step limit pays zero") {
    EnvConfig c;
    c.rooms = 1;
    c.cell = 4;
    c.view_radius = 1;
    c.keys = 0;
    c.max_keys = 1;
    c.step_limit = 500;
    MultiRoomWorld env(c);
    env.reset(6);

    const std::vector<int> path = path_to(env, env.goal_x(), env.goal_y());
    REQUIRE_FALSE(path.empty());
    double total = 0.0;
    StepOutcome last;
    for (int a : path) {
        last = env.step(a);
        total += last.reward;
    }
    CHECK(total == 1.0);
    CHECK(last.terminated);
    CHECK(env.terminated());
    CHECK_THROWS_AS(env.step(0), UsageError);

    // Truncation: a tiny limit ends the episode without reward.
    EnvConfig t = c;
    t.step_limit = 3;
    MultiRoomWorld tenv(t);
    tenv.reset(6);
    double pay = 0.0;
    StepOutcome out;
    for (int s = 0; s < 3; ++s) {
        out = tenv.step(MultiRoomWorld::kPickup); // guaranteed non-goal steps
        pay += out.reward;
    }
    CHECK(out.terminated);
    CHECK(pay == 0.0);
}

TEST_CASE("rooms visited counts distinct rooms") {
    EnvConfig c = small_world();
    c.keys = 0;
    MultiRoomWorld env(c);
    env.reset(8);
    CHECK(env.rooms_visited() == 1);

    // Walk through a door on the right wall of room 0 if there is one,
    // otherwise through the bottom wall; either way the count becomes 2.
    const auto& doors = env.doors();
    REQUIRE_FALSE(doors.empty());
    int target = -1;
    for (size_t i = 0; i < doors.size(); ++i) {
        const int x = doors[i].x, y = doors[i].y;
        const bool vertical = x % (c.cell + 1) == 0;
        const int rx = vertical ? x / (c.cell + 1) - 1 : (x - 1) / (c.cell + 1);
        const int ry = vertical ? (y - 1) / (c.cell + 1) : y / (c.cell + 1) - 1;
        if (rx == 0 && ry == 0) target = static_cast<int>(i);
    }
    REQUIRE(target >= 0);
    const auto d = doors[static_cast<size_t>(target)];
    walk(env, path_to(env, d.x, d.y));
    const bool vertical = d.x % (c.cell + 1) == 0;
    env.step(vertical ? MultiRoomWorld::kRight : MultiRoomWorld::kDown);
    CHECK(env.rooms_visited() == 2);
}

TEST_CASE("every procedural layout is solvable by exhaustive search") {
    EnvConfig c = small_world();
    MultiRoomWorld env(c);
    for (uint64_t seed = 0; seed < 1000; ++seed) {
        env.reset(seed);
        const SearchResult r = solve_by_search(env);
        REQUIRE_MESSAGE(r.solved, "unsolvable layout at seed ", seed, "\n", env.layout_text());

        // Replaying the discovered plan on a fresh reset must reproduce
        // the win exactly.
        if (seed % 100 == 0) {
            MultiRoomWorld replay(c);
            replay.reset(seed);
            double total = 0.0;
            for (int a : r.actions) total += replay.step(a).reward;
            CHECK(total == 1.0);
            CHECK(replay.terminated());
        }
    }
}

TEST_CASE("layouts with more locked doors than colors in view stay solvable") {
    EnvConfig c = small_world();
    c.rooms = 3;
    c.cell = 3;
    c.keys = 2;
    c.max_keys = 2;
    MultiRoomWorld env(c);
    for (uint64_t seed = 0; seed < 50; ++seed) {
        env.reset(seed);
        const SearchResult r = solve_by_search(env);
        REQUIRE_MESSAGE(r.solved, "unsolvable layout at seed ", seed, "\n", env.layout_text());
    }
}

TEST_CASE("the noise tile keeps observations one-hot and runs deterministic") {
    EnvConfig c = small_world();
    c.noise_tile = true;
    MultiRoomWorld a(c), b(c);
    const std::vector<double> oa = a.reset(11);
    const std::vector<double> ob = b.reset(11);
    CHECK(oa == ob);
    CHECK(a.layout_text().find('~') != std::string::npos);
    for (int s = 0; s < 30; ++s) {
        const StepOutcome sa = a.step(s % 4);
        const StepOutcome sb = b.step(s % 4);
        CHECK(sa.obs == sb.obs);
        const int side = 2 * c.view_radius + 1;
        for (int cell = 0; cell < side * side; ++cell) {
            double sum = 0.0;
            for (int ch = 0; ch < MultiRoomWorld::kChannels; ++ch) {
                sum += sa.obs[static_cast<size_t>(cell) * MultiRoomWorld::kChannels + ch];
            }
            CHECK(sum == 1.0);
        }
        if (sa.terminated) break;
    }
}

TEST_CASE("invalid configurations and calls are rejected") {
    EnvConfig c = small_world();
    c.rooms = 0;
    CHECK_THROWS_AS(MultiRoomWorld{c}, ConfigError);
    c = small_world();
    c.max_keys = 0; // fewer inventory slots than keys
    CHECK_THROWS_AS(MultiRoomWorld{c}, ConfigError);
    c = small_world();
    c.keys = 100; // more locks than doors
    CHECK_THROWS_AS(MultiRoomWorld{c}, ConfigError);

    MultiRoomWorld env(small_world());
    CHECK_THROWS_AS(env.step(0), UsageError); // reset() must come first
    env.reset(0);
    CHECK_THROWS_AS(env.step(-1), UsageError);
    CHECK_THROWS_AS(env.step(MultiRoomWorld::kActions), UsageError);
}

TEST_CASE("a uniform random policy explores few rooms on the big grid") {
    // Reference point for the exploration claims: on the 3 x 3 room world
    // a random walker almost never covers the grid within an episode.
    EnvConfig c;
    c.rooms = 3;
    c.cell = 5;
    c.view_radius = 2;
    c.keys = 1;
    c.max_keys = 2;
    c.step_limit = 500;
    MultiRoomWorld env(c);
    std::mt19937_64 rng = substream(99, "random-policy");
    double rooms_sum = 0.0;
    const int episodes = 20;
    for (int e = 0; e < episodes; ++e) {
        env.reset(rng());
        StepOutcome out;
        do {
            out = env.step(uniform_int(rng, MultiRoomWorld::kActions));
        } while (!out.terminated);
        rooms_sum += out.rooms_visited;
    }
    const double mean_rooms = rooms_sum / episodes;
    CHECK(mean_rooms >= 1.0);
    CHECK(mean_rooms < 6.0); // far from full coverage of 9 rooms
}

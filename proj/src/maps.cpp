#include <stdexcept>
#include <string>

#include "bta/experiments.hpp"

namespace bta {

namespace {

// Four Rooms with goals at the room centres.
constexpr std::string_view kFourRooms =
    "#############\n"
    "#.....#.....#\n"
    "#.....#.....#\n"
    "#..G.....G..#\n"
    "#.....#.....#\n"
    "#.....#.....#\n"
    "##.####.....#\n"
    "#.....###.###\n"
    "#.....#.....#\n"
    "#..G..#..G..#\n"
    "#...........#\n"
    "#.....#.....#\n"
    "#############\n";

// Four Rooms with 40 goals: the room centres, every cell touching an
// interior wall, and the four outer corners.
constexpr std::string_view kFourRooms40 =
    "#############\n"
    "#G...G#G...G#\n"
    "#....G#G....#\n"
    "#..G..G..G..#\n"
    "#....G#G....#\n"
    "#G.GGG#G....#\n"
    "##G####GG.GG#\n"
    "#G.GGG###G###\n"
    "#....G#GG.GG#\n"
    "#..G.G#G.G..#\n"
    "#.....G.....#\n"
    "#G...G#G...G#\n"
    "#############\n";

}  // namespace

std::string_view builtin_map(std::string_view name) {
  if (name == "four_rooms") return kFourRooms;
  if (name == "four_rooms_40") return kFourRooms40;
  throw ValidationError("unknown builtin map '" + std::string(name) + "'");
}

}  // namespace bta

#pragma once

#include "byzantine.hpp"
#include "coordinated_attack.hpp"
#include "engine.hpp"
#include "epistemics.hpp"
#include "errors.hpp"
#include "game_files.hpp"
#include "games.hpp"
#include "point_set.hpp"
#include "query.hpp"
#include "scenario.hpp"
#include "system.hpp"
#include "term.hpp"

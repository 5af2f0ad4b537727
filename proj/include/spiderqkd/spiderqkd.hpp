#pragma once

#include "spiderqkd/errors.hpp"
#include "spiderqkd/linalg.hpp"
#include "spiderqkd/random.hpp"
#include "spiderqkd/channels.hpp"
#include "spiderqkd/cb_distance.hpp"
#include "spiderqkd/spiders.hpp"
#include "spiderqkd/identity_suite.hpp"
#include "spiderqkd/protocol.hpp"
#include "spiderqkd/security.hpp"

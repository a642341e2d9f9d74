#pragma once

// Umbrella header: the full pipeline surface in one include.

#include "metagen/cli.hpp"
#include "metagen/config.hpp"
#include "metagen/corpus.hpp"
#include "metagen/enrich.hpp"
#include "metagen/evalharness.hpp"
#include "metagen/fusion.hpp"
#include "metagen/http_providers.hpp"
#include "metagen/lexindex.hpp"
#include "metagen/manifest.hpp"
#include "metagen/pool.hpp"
#include "metagen/providers.hpp"
#include "metagen/raggen.hpp"
#include "metagen/select.hpp"
#include "metagen/vecindex.hpp"

#pragma once

// Umbrella header: the whole library.

#include "mrbt/bench.hpp"
#include "mrbt/bloom.hpp"
#include "mrbt/bytes.hpp"
#include "mrbt/chain.hpp"
#include "mrbt/chain_io.hpp"
#include "mrbt/cost_model.hpp"
#include "mrbt/digest.hpp"
#include "mrbt/encoding.hpp"
#include "mrbt/engines.hpp"
#include "mrbt/geometry.hpp"
#include "mrbt/ingest.hpp"
#include "mrbt/merkle_rb_tree.hpp"
#include "mrbt/metadata.hpp"
#include "mrbt/query_stats.hpp"
#include "mrbt/skip_index.hpp"

#pragma once

// Capacity-achieving T-private information retrieval over small prime
// fields: exact field linear algebra, Reed-Solomon erasure recovery,
// scheme parameter derivation, answer planning, the retrieval protocol,
// wire formats, a socket transport and the audit toolkit.

#include "tpir/audit.hpp"
#include "tpir/field.hpp"
#include "tpir/locator.hpp"
#include "tpir/matrix.hpp"
#include "tpir/mds.hpp"
#include "tpir/net.hpp"
#include "tpir/params.hpp"
#include "tpir/plan.hpp"
#include "tpir/protocol.hpp"
#include "tpir/wire.hpp"

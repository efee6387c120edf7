#pragma once

// Hashchain cross-border authentication library: RF-fingerprint
// identities, an append-only block ledger replicated through an
// in-process streaming log, security-manager handshake state machines,
// and a seeded delay simulation with calibration.

#include "hashchain/broker.hpp"
#include "hashchain/bytes.hpp"
#include "hashchain/calibrate.hpp"
#include "hashchain/encoding.hpp"
#include "hashchain/fingerprint.hpp"
#include "hashchain/hash.hpp"
#include "hashchain/keys.hpp"
#include "hashchain/kv.hpp"
#include "hashchain/ledger.hpp"
#include "hashchain/pseudonym.hpp"
#include "hashchain/recognition.hpp"
#include "hashchain/rng.hpp"
#include "hashchain/sealed.hpp"
#include "hashchain/sim.hpp"
#include "hashchain/sm.hpp"
